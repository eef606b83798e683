#include "freqseg/metrics/bootstrap.hpp"

#include <algorithm>
#include <vector>

#include "freqseg/error.hpp"
#include "freqseg/metrics/statistics.hpp"
#include "freqseg/random.hpp"

namespace freqseg {

ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t replicates,
                                std::uint64_t seed) {
    if (values.empty()) throw ValueError("bootstrap_ci: empty list");
    if (replicates < kMinBootstrapReplicates)
        throw ValueError("bootstrap_ci: need at least " + std::to_string(kMinBootstrapReplicates) +
                         " replicates, got " + std::to_string(replicates));
    const std::size_t n = values.size();
    std::vector<double> means(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        Rng rng(derive_seed(seed, r));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[rng.index(n)];
        means[r] = s / static_cast<double>(n);
    }
    ConfidenceInterval ci;
    ci.mean = mean(values);
    ci.low = std::min(percentile(means, 2.5), ci.mean);
    ci.high = std::max(percentile(std::move(means), 97.5), ci.mean);
    return ci;
}

}  // namespace freqseg
