#include "freqseg/frequency/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "freqseg/error.hpp"

namespace freqseg {

namespace {

bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

Complex twiddle(std::size_t k, std::size_t n, bool inverse) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    return std::polar(1.0, angle);
}

void radix2(std::span<Complex> a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    // Twiddles of the full length; stage of length `len` uses every (n/len)-th.
    std::vector<Complex> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) w[k] = twiddle(k, n, inverse);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len)
            for (std::size_t k = 0; k < half; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * w[k * step];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
    }
}

void direct_dft(std::span<Complex> a, bool inverse) {
    const std::size_t n = a.size();
    std::vector<Complex> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = twiddle(k, n, inverse);
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += a[j] * w[(j * k) % n];
        out[k] = acc;
    }
    std::copy(out.begin(), out.end(), a.begin());
}

}  // namespace

void fft1d(std::span<Complex> line, bool inverse) {
    if (line.size() <= 1) return;
    if (is_pow2(line.size()))
        radix2(line, inverse);
    else
        direct_dft(line, inverse);
}

void fft3_inplace(const Extents& e, std::span<Complex> data, bool inverse) {
    if (voxel_count(e) == 0) throw ShapeError("fft3 of an empty volume");
    if (data.size() != voxel_count(e)) throw ShapeError("fft3 buffer does not match extents");
    const std::size_t strides[3] = {e[1] * e[2], e[2], 1};
    std::vector<Complex> line;
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t n = e[axis];
        if (n <= 1) continue;
        line.resize(n);
        const std::size_t stride = strides[axis];
        // Enumerate every line along `axis` by its starting offset.
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (std::size_t i = 0; i < e[a1]; ++i)
            for (std::size_t j = 0; j < e[a2]; ++j) {
                const std::size_t base = i * strides[a1] + j * strides[a2];
                for (std::size_t k = 0; k < n; ++k) line[k] = data[base + k * stride];
                fft1d(line, inverse);
                for (std::size_t k = 0; k < n; ++k) data[base + k * stride] = line[k];
            }
    }
}

Spectrum fft3(const Volume& v) {
    if (v.size() == 0) throw ShapeError("fft3 of an empty volume");
    Spectrum s(v.extents());
    for (std::size_t i = 0; i < v.size(); ++i) s.bins[i] = v[i];
    fft3_inplace(s.extents, s.bins, false);
    return s;
}

Spectrum ifft3_complex(const Spectrum& s) {
    if (s.bins.size() != voxel_count(s.extents) || s.bins.empty())
        throw ShapeError("malformed spectrum");
    Spectrum out = s;
    fft3_inplace(out.extents, out.bins, true);
    const double inv_n = 1.0 / static_cast<double>(out.bins.size());
    for (auto& c : out.bins) c *= inv_n;
    return out;
}

Volume ifft3(const Spectrum& s, double* imag_residue) {
    const Spectrum c = ifft3_complex(s);
    std::vector<double> re(c.bins.size());
    double residue = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) {
        re[i] = c.bins[i].real();
        residue = std::max(residue, std::abs(c.bins[i].imag()));
    }
    if (imag_residue) *imag_residue = residue;
    return Volume(s.extents, std::move(re));
}

double spectral_energy(const Spectrum& s) {
    double e = 0.0;
    for (const auto& c : s.bins) e += std::norm(c);
    return e;
}

}  // namespace freqseg
