#include "freqseg/frequency/band_energy.hpp"

#include <algorithm>
#include <cmath>

#include "freqseg/error.hpp"

namespace freqseg {

namespace {

double signed_frequency(std::size_t k, std::size_t n) {
    const double kk = (2 * k <= n) ? static_cast<double>(k)
                                   : static_cast<double>(k) - static_cast<double>(n);
    return kk / static_cast<double>(n);
}

}  // namespace

double normalized_radius(const Extents& e, std::size_t x, std::size_t y, std::size_t z) {
    const double fx = signed_frequency(x, e[0]);
    const double fy = signed_frequency(y, e[1]);
    const double fz = signed_frequency(z, e[2]);
    return std::sqrt(fx * fx + fy * fy + fz * fz) / 0.5;
}

std::size_t radial_band(const Extents& e, std::size_t x, std::size_t y, std::size_t z,
                        std::size_t n_bands) {
    if (n_bands < 2) throw ValueError("band_energy needs at least 2 bands");
    const double r = normalized_radius(e, x, y, z);
    const auto b = static_cast<std::size_t>(std::floor(r * static_cast<double>(n_bands)));
    return std::min(b, n_bands - 1);
}

std::vector<std::size_t> band_map(const Extents& e, std::size_t n_bands) {
    std::vector<std::size_t> bands(voxel_count(e));
    std::size_t i = 0;
    for (std::size_t x = 0; x < e[0]; ++x)
        for (std::size_t y = 0; y < e[1]; ++y)
            for (std::size_t z = 0; z < e[2]; ++z) bands[i++] = radial_band(e, x, y, z, n_bands);
    return bands;
}

std::vector<double> band_energy(const Spectrum& s, std::size_t n_bands) {
    const std::vector<std::size_t> bands = band_map(s.extents, n_bands);
    std::vector<double> energy(n_bands, 0.0);
    for (std::size_t i = 0; i < s.bins.size(); ++i) energy[bands[i]] += std::norm(s.bins[i]);
    return energy;
}

std::vector<double> band_energy(const Volume& v, std::size_t n_bands) {
    return band_energy(fft3(v), n_bands);
}

}  // namespace freqseg
