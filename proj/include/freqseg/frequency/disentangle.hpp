#pragma once

#include <cstddef>
#include <vector>

#include "freqseg/data/volume.hpp"
#include "freqseg/frequency/fft.hpp"

namespace freqseg {

inline constexpr double kDefaultTheta = 0.5;

/// Half-open index range [start, end) of the central block on one axis.
struct BlockBounds {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const BlockBounds&) const = default;
};

/// start = floor(extent * (1 - theta) / 2), end = start + round(extent * theta),
/// with the block length clamped to [1, extent - start].
BlockBounds mask_bounds(std::size_t extent, double theta);

/// Per-axis membership of the high-frequency block: index k is retained when
/// k or its conjugate partner (extent - k) mod extent falls in
/// mask_bounds(extent, theta). Closing the block under conjugation keeps the
/// inverse transform of each part real.
std::vector<bool> high_axis_mask(std::size_t extent, double theta);

/// Complementary spectra: `high` keeps the central x-y block over all z and
/// is zero elsewhere; `low` is the remainder.
struct SpectralSplit {
    Spectrum high;
    Spectrum low;
};

SpectralSplit split_spectrum(const Spectrum& s, double theta);

/// Image-space high and low parts of a volume. high + low reconstructs the
/// source volume.
struct FreqPair {
    Volume high;
    Volume low;
    double theta = kDefaultTheta;
    /// Largest imaginary magnitude dropped by the two inverse transforms.
    double imag_residue = 0.0;
};

/// Fails when theta is outside (0, 1) or when the inverse transforms leave an
/// imaginary residue above `max_imag_residue`.
FreqPair disentangle(const Volume& v, double theta, double max_imag_residue = 1e-9);

}  // namespace freqseg
