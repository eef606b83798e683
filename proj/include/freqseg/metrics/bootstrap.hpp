#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace freqseg {

inline constexpr std::size_t kDefaultBootstrapReplicates = 2000;
inline constexpr std::size_t kMinBootstrapReplicates = 100;

struct ConfidenceInterval {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// Percentile bootstrap of the mean: B resamples with replacement, interval
/// from the 2.5th and 97.5th percentiles of the resampled means. Replicate r
/// draws from its own stream seeded by derive_seed(seed, r).
ConfidenceInterval bootstrap_ci(std::span<const double> values,
                                std::size_t replicates = kDefaultBootstrapReplicates,
                                std::uint64_t seed = 0);

}  // namespace freqseg
