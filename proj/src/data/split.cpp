#include "freqseg/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "freqseg/error.hpp"
#include "freqseg/random.hpp"

namespace freqseg {

void SplitSpec::validate() const {
    if (train.empty()) throw ValueError("split has an empty train partition");
    if (val.empty()) throw ValueError("split has an empty validation partition");
    if (test.empty()) throw ValueError("split has an empty test partition");
    std::set<std::string> seen;
    for (const auto* part : {&train, &val, &test})
        for (const auto& id : *part)
            if (!seen.insert(id).second) throw ValueError("subject '" + id + "' appears twice in split");
}

SplitSpec make_split_counts(std::vector<std::string> ids, std::size_t n_val, std::size_t n_test,
                            std::uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ValueError("duplicate subject ids");
    if (n_val + n_test >= ids.size())
        throw ValueError("not enough subjects (" + std::to_string(ids.size()) + ") for " +
                         std::to_string(n_val) + " validation and " + std::to_string(n_test) +
                         " test subjects plus a training set");
    Rng rng(derive_seed(seed, 0x5b1));
    rng.shuffle(ids);
    SplitSpec s;
    s.seed = seed;
    s.test.assign(ids.begin(), ids.begin() + static_cast<long>(n_test));
    s.val.assign(ids.begin() + static_cast<long>(n_test), ids.begin() + static_cast<long>(n_test + n_val));
    s.train.assign(ids.begin() + static_cast<long>(n_test + n_val), ids.end());
    for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
    s.validate();
    return s;
}

SplitSpec make_split(std::vector<std::string> ids, const SplitFractions& f, std::uint64_t seed) {
    if (f.train < 0 || f.val < 0 || f.test < 0 || f.train + f.val + f.test <= 0)
        throw ValueError("split fractions must be non-negative");
    const double total = f.train + f.val + f.test;
    const double n = static_cast<double>(ids.size());
    const auto n_val = static_cast<std::size_t>(std::llround(f.val / total * n));
    const auto n_test = static_cast<std::size_t>(std::llround(f.test / total * n));
    return make_split_counts(std::move(ids), n_val, n_test, seed);
}

std::size_t subsample_size(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ValueError("training fraction must lie in (0, 1], got " + std::to_string(fraction));
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

SplitSpec subsample_train(const SplitSpec& split, double fraction, std::uint64_t seed) {
    split.validate();
    const std::size_t k = subsample_size(split.train.size(), fraction);
    SplitSpec out = split;
    out.train_fraction = split.train_fraction * fraction;
    if (k == split.train.size()) return out;
    std::vector<std::string> pool = split.train;
    Rng rng(derive_seed(seed, 0x5ab));
    rng.shuffle(pool);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    out.train = std::move(pool);
    out.validate();
    return out;
}

}  // namespace freqseg
