#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "freqseg/data/volume.hpp"

namespace freqseg {

inline constexpr double kFrequencyErrorEpsilon = 1e-8;

/// Relative spectral error per radial band:
/// e_b = ||F(pred) - F(target)||_b / (||F(target)||_b + eps).
std::vector<double> frequency_error_spectrum(const Volume& pred_prob, const Mask& target,
                                             std::size_t n_bands, std::uint8_t label = 1,
                                             double eps = kFrequencyErrorEpsilon);

/// trace[epoch][band]. Per band, the first epoch whose error is below
/// `threshold`, or nullopt if it never gets there.
std::vector<std::optional<std::size_t>> first_epoch_below(
    const std::vector<std::vector<double>>& trace, double threshold);

/// Share of adjacent band pairs (b, b+1) whose first-below epochs are
/// non-decreasing. A band that never converges counts as later than any
/// epoch, and two such bands count as equal.
double nondecreasing_pair_fraction(const std::vector<std::optional<std::size_t>>& epochs);

}  // namespace freqseg
