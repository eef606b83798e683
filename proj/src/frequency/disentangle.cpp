#include "freqseg/frequency/disentangle.hpp"

#include <algorithm>
#include <cmath>

#include "freqseg/error.hpp"

namespace freqseg {

namespace {

void check_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw ValueError("theta must lie in (0, 1), got " + std::to_string(theta));
}

}  // namespace

BlockBounds mask_bounds(std::size_t extent, double theta) {
    check_theta(theta);
    if (extent < 2) throw ValueError("mask_bounds needs an extent >= 2");
    const double n = static_cast<double>(extent);
    // The 1e-9 nudge keeps exact products such as 160 * 0.25 / 2 from
    // flooring one bin low through representation error.
    const auto start = static_cast<std::size_t>(std::floor(n * (1.0 - theta) / 2.0 + 1e-9));
    auto length = static_cast<std::size_t>(std::llround(n * theta));
    length = std::clamp<std::size_t>(length, 1, extent - start);
    return {start, start + length};
}

std::vector<bool> high_axis_mask(std::size_t extent, double theta) {
    const BlockBounds b = mask_bounds(extent, theta);
    std::vector<bool> keep(extent, false);
    for (std::size_t k = b.start; k < b.end; ++k) {
        keep[k] = true;
        keep[(extent - k) % extent] = true;
    }
    return keep;
}

SpectralSplit split_spectrum(const Spectrum& s, double theta) {
    check_theta(theta);
    const auto [nx, ny, nz] = s.extents;
    const std::vector<bool> mx = high_axis_mask(nx, theta);
    const std::vector<bool> my = high_axis_mask(ny, theta);
    SpectralSplit out{Spectrum(s.extents), Spectrum(s.extents)};
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            const bool high = mx[x] && my[y];
            for (std::size_t z = 0; z < nz; ++z) {
                const std::size_t i = s.index(x, y, z);
                (high ? out.high : out.low).bins[i] = s.bins[i];
            }
        }
    return out;
}

FreqPair disentangle(const Volume& v, double theta, double max_imag_residue) {
    check_theta(theta);
    SpectralSplit split = split_spectrum(fft3(v), theta);
    double rh = 0.0, rl = 0.0;
    FreqPair pair{ifft3(split.high, &rh), ifft3(split.low, &rl), theta, std::max(rh, rl)};
    if (pair.imag_residue > max_imag_residue)
        throw Error("disentangle: imaginary residue " + std::to_string(pair.imag_residue) +
                    " exceeds tolerance");
    pair.high.set_spacing(v.spacing());
    pair.low.set_spacing(v.spacing());
    return pair;
}

}  // namespace freqseg
