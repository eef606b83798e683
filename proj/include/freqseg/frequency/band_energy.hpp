#pragma once

#include <cstddef>
#include <vector>

#include "freqseg/data/volume.hpp"
#include "freqseg/frequency/fft.hpp"

namespace freqseg {

/// Radius of bin (x, y, z) relative to the axis Nyquist frequency: each axis
/// index maps to a signed frequency in cycles/voxel (k / N for k <= N/2,
/// (k - N) / N above) and the Euclidean norm is divided by 0.5. Values run
/// from 0 (DC) to sqrt(3) (the corner bin).
double normalized_radius(const Extents& e, std::size_t x, std::size_t y, std::size_t z);

/// Shell index of bin (x, y, z): [0, 1) of normalized_radius is cut into
/// `n_bands` equal shells and everything beyond Nyquist joins the last one.
/// DC is always band 0.
std::size_t radial_band(const Extents& e, std::size_t x, std::size_t y, std::size_t z,
                        std::size_t n_bands);

/// Band index for every bin, in spectrum layout.
std::vector<std::size_t> band_map(const Extents& e, std::size_t n_bands);

/// |F|^2 summed per shell; the shells partition the spectrum.
std::vector<double> band_energy(const Spectrum& s, std::size_t n_bands);
std::vector<double> band_energy(const Volume& v, std::size_t n_bands);

}  // namespace freqseg
