#pragma once

#include <complex>
#include <span>
#include <vector>

#include "freqseg/data/volume.hpp"

namespace freqseg {

using Complex = std::complex<double>;

/// Complex 3D array in unshifted DFT layout: bin (0, 0, 0) is DC.
struct Spectrum {
    Extents extents{};
    std::vector<Complex> bins;

    Spectrum() = default;
    explicit Spectrum(Extents e) : extents(e), bins(voxel_count(e)) {}

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return (x * extents[1] + y) * extents[2] + z;
    }
    Complex& at(std::size_t x, std::size_t y, std::size_t z) { return bins[index(x, y, z)]; }
    const Complex& at(std::size_t x, std::size_t y, std::size_t z) const {
        return bins[index(x, y, z)];
    }
};

/// In-place 1D transform. Radix-2 for power-of-two lengths, direct DFT
/// otherwise. `inverse` flips the exponent sign and does not normalise.
void fft1d(std::span<Complex> line, bool inverse);

/// In-place separable 3D transform over a complex buffer of `extents`.
void fft3_inplace(const Extents& extents, std::span<Complex> data, bool inverse);

/// Forward unnormalised DFT; the DC bin equals the voxel sum.
Spectrum fft3(const Volume& v);

/// 1/N-normalised inverse DFT, keeping the full complex result.
Spectrum ifft3_complex(const Spectrum& s);

/// 1/N-normalised inverse DFT, real part only. When `imag_residue` is set it
/// receives max |Im| of the discarded part.
Volume ifft3(const Spectrum& s, double* imag_residue = nullptr);

/// sum |F|^2 over all bins.
double spectral_energy(const Spectrum& s);

}  // namespace freqseg
