#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace freqseg {

/// Participant-level partition. Each list is sorted and the three lists are
/// pairwise disjoint; subsampling only ever removes training subjects.
struct SplitSpec {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    double train_fraction = 1.0;
    std::uint64_t seed = 0;

    /// Throws when a partition is empty or two partitions share an id.
    void validate() const;
    bool operator==(const SplitSpec&) const = default;
};

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

/// Deterministic shuffle of `ids` from `seed`; val and test sizes are
/// round(fraction * n), the rest goes to train.
SplitSpec make_split(std::vector<std::string> ids, const SplitFractions& fractions, std::uint64_t seed);

/// Same, with explicit validation and test counts.
SplitSpec make_split_counts(std::vector<std::string> ids, std::size_t n_val, std::size_t n_test,
                            std::uint64_t seed);

/// max(1, round(fraction * n)).
std::size_t subsample_size(std::size_t n, double fraction);

/// Keeps a seeded random subset of the training subjects; val and test are
/// copied unchanged.
SplitSpec subsample_train(const SplitSpec& split, double fraction, std::uint64_t seed);

}  // namespace freqseg
