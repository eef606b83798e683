#include "doctest.h"

#include <cmath>
#include <numbers>

#include "freqseg/error.hpp"
#include "freqseg/frequency/band_energy.hpp"
#include "freqseg/frequency/disentangle.hpp"
#include "freqseg/random.hpp"
#include "support/oracles.hpp"

using namespace freqseg;
using namespace freqseg::testing;

namespace {

Volume random_volume(Extents e, Rng& rng) {
    Volume v(e);
    for (double& x : v.data()) x = rng.uniform(-1.0, 1.0);
    return v;
}


Spectrum as_complex(const Volume& v) {
    Spectrum s(v.extents());
    for (std::size_t i = 0; i < v.size(); ++i) s.bins[i] = v[i];
    return s;
}

double max_abs_diff(const Spectrum& a, const Spectrum& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.bins.size(); ++i) m = std::max(m, std::abs(a.bins[i] - b.bins[i]));
    return m;
}

double max_abs_diff(const Volume& a, const Volume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("fft3") {
    TEST_CASE("constant volume concentrates at DC") {
        const Spectrum s = fft3(Volume({2, 2, 2}, 1.75));
        CHECK(std::abs(s.bins[0] - Complex(8 * 1.75)) < 1e-14);
        for (std::size_t i = 1; i < s.bins.size(); ++i) CHECK(std::abs(s.bins[i]) < 1e-14);
    }

    TEST_CASE("delta transforms to all ones") {
        Volume v({4, 2, 8}, 0.0);
        v.at(0, 0, 0) = 1.0;
        for (const auto& c : fft3(v).bins) CHECK(std::abs(c - Complex(1.0)) < 1e-14);
    }

    TEST_CASE("matches the naive DFT") {
        Rng rng(1);
        for (Extents e : {Extents{4, 4, 4}, Extents{3, 5, 2}, Extents{6, 4, 3}}) {
            const Volume v = random_volume(e, rng);
            CHECK(max_abs_diff(fft3(v), naive_dft(as_complex(v), -1.0)) < 1e-10);
        }
    }

    TEST_CASE("DC equals the voxel sum") {
        Rng rng(2);
        const Volume v = random_volume({8, 4, 2}, rng);
        double total = 0.0;
        for (double x : v.data()) total += x;
        CHECK(std::abs(fft3(v).bins[0].real() - total) < 1e-12);
    }
}

TEST_SUITE("ifft3") {
    TEST_CASE("round trip") {
        Rng rng(3);
        for (Extents e : {Extents{8, 8, 8}, Extents{6, 10, 3}}) {
            const Volume v = random_volume(e, rng);
            double residue = 1.0;
            const Volume back = ifft3(fft3(v), &residue);
            CHECK(max_abs_diff(back, v) < 1e-9);
            CHECK(residue < 1e-9);
        }
    }

    TEST_CASE("linearity") {
        Rng rng(4);
        const Spectrum s1 = fft3(random_volume({8, 4, 4}, rng));
        const Spectrum s2 = fft3(random_volume({8, 4, 4}, rng));
        const double a = 0.7, b = -2.5;
        Spectrum mix(s1.extents);
        for (std::size_t i = 0; i < mix.bins.size(); ++i) mix.bins[i] = a * s1.bins[i] + b * s2.bins[i];
        const Volume lhs = ifft3(mix);
        const Volume v1 = ifft3(s1), v2 = ifft3(s2);
        double m = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) m = std::max(m, std::abs(lhs[i] - (a * v1[i] + b * v2[i])));
        CHECK(m < 1e-9);
    }

    TEST_CASE("matches the naive inverse DFT") {
        Rng rng(5);
        Spectrum s({4, 4, 4});
        for (auto& c : s.bins) c = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
        Spectrum oracle = naive_dft(s, 1.0);
        for (auto& c : oracle.bins) c /= 64.0;
        CHECK(max_abs_diff(ifft3_complex(s), oracle) < 1e-10);
    }

    TEST_CASE("Parseval") {
        Rng rng(6);
        const Volume v = random_volume({8, 8, 4}, rng);
        double spatial = 0.0;
        for (double x : v.data()) spatial += x * x;
        const double spectral = spectral_energy(fft3(v)) / double(v.size());
        CHECK(std::abs(spectral - spatial) / spatial < 1e-6);
    }

    TEST_CASE("malformed spectrum") {
        Spectrum s;
        CHECK_THROWS_AS(ifft3(s), ShapeError);
    }
}

TEST_SUITE("mask_bounds") {
    TEST_CASE("block indices") {
        CHECK(mask_bounds(160, 0.5) == BlockBounds{40, 120});
        CHECK(mask_bounds(160, 0.25) == BlockBounds{60, 100});
        CHECK(mask_bounds(7, 0.5) == BlockBounds{1, 5});
        CHECK(mask_bounds(128, 0.5) == BlockBounds{32, 96});
    }

    TEST_CASE("bounds stay ordered and inside the axis") {
        for (std::size_t n = 2; n < 40; ++n)
            for (double t = 0.01; t < 1.0; t += 0.07) {
                const auto b = mask_bounds(n, t);
                CHECK(b.start < b.end);
                CHECK(b.end <= n);
            }
    }

    TEST_CASE("theta outside (0, 1)") {
        CHECK_THROWS_AS(mask_bounds(16, 0.0), ValueError);
        CHECK_THROWS_AS(mask_bounds(16, 1.0), ValueError);
        CHECK_THROWS_AS(mask_bounds(16, 1.5), ValueError);
        CHECK_THROWS_AS(mask_bounds(16, -0.2), ValueError);
    }

    TEST_CASE("high block grows with theta") {
        for (std::size_t n : {8u, 9u, 16u, 33u}) {
            const double thetas[] = {0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9};
            for (std::size_t i = 0; i + 1 < std::size(thetas); ++i) {
                const auto lo = high_axis_mask(n, thetas[i]);
                const auto hi = high_axis_mask(n, thetas[i + 1]);
                for (std::size_t k = 0; k < n; ++k)
                    if (lo[k]) CHECK(hi[k]);
            }
        }
    }

    TEST_CASE("axis mask contains the literal block and its conjugates") {
        const auto keep = high_axis_mask(8, 0.5);  // block {2..5}, mirror {3..6}
        const std::vector<bool> expected{false, false, true, true, true, true, true, false};
        CHECK(keep == expected);
    }
}

TEST_SUITE("disentangle") {
    TEST_CASE("parts reconstruct the volume") {
        Rng rng(7);
        for (double theta : {0.25, 0.5, 0.75})
            for (Extents e : {Extents{8, 8, 8}, Extents{16, 8, 4}, Extents{7, 9, 3}}) {
                const Volume v = random_volume(e, rng);
                const FreqPair p = disentangle(v, theta);
                double m = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(p.high[i] + p.low[i] - v[i]));
                CHECK(m < 1e-6);
                CHECK(p.imag_residue < 1e-9);
                CHECK(p.theta == theta);
            }
    }

    TEST_CASE("constant volume is all low frequency") {
        const Volume v({8, 8, 4}, 3.0);
        const FreqPair p = disentangle(v, 0.5);
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(std::abs(p.high[i]) < 1e-12);
            CHECK(std::abs(p.low[i] - 3.0) < 1e-12);
        }
    }

    TEST_CASE("spectral supports are disjoint") {
        Rng rng(8);
        const Spectrum s = fft3(random_volume({8, 8, 4}, rng));
        const SpectralSplit split = split_spectrum(s, 0.5);
        std::size_t high_bins = 0;
        for (std::size_t i = 0; i < s.bins.size(); ++i) {
            CHECK(std::abs(split.high.bins[i] * split.low.bins[i]) == 0.0);
            CHECK(split.high.bins[i] + split.low.bins[i] == s.bins[i]);
            high_bins += split.high.bins[i] != Complex(0.0);
        }
        CHECK(high_bins == 5 * 5 * 4);
    }

    TEST_CASE("matches an explicit-mask oracle with naive transforms") {
        Rng rng(9);
        const Volume v = random_volume({8, 8, 8}, rng);
        const double theta = 0.5;
        // Block [2, 6) on x and y plus conjugate partners, every z.
        auto in_block = [](std::size_t k) {
            const std::size_t mirror = (8 - k) % 8;
            return (k >= 2 && k < 6) || (mirror >= 2 && mirror < 6);
        };
        Spectrum f = naive_dft(as_complex(v), -1.0);
        Spectrum h(f.extents), l(f.extents);
        for (std::size_t x = 0; x < 8; ++x)
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t z = 0; z < 8; ++z) {
                    const bool mask = in_block(x) && in_block(y);
                    h.at(x, y, z) = mask ? f.at(x, y, z) : Complex(0.0);
                    l.at(x, y, z) = f.at(x, y, z) - h.at(x, y, z);
                }
        Spectrum hi = naive_dft(h, 1.0), lo = naive_dft(l, 1.0);
        const FreqPair p = disentangle(v, theta);
        double m = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            m = std::max(m, std::abs(p.high[i] - hi.bins[i].real() / 512.0));
            m = std::max(m, std::abs(p.low[i] - lo.bins[i].real() / 512.0));
            CHECK(std::abs(hi.bins[i].imag() / 512.0) < 1e-9);
        }
        CHECK(m < 1e-10);
    }

    TEST_CASE("invalid theta") {
        CHECK_THROWS_AS(disentangle(Volume({4, 4, 4}), 1.0), ValueError);
        CHECK_THROWS_AS(disentangle(Volume({4, 4, 4}), 0.0), ValueError);
    }
}

TEST_SUITE("band_energy") {
    TEST_CASE("constant volume lives in band 0") {
        const auto e = band_energy(Volume({8, 8, 4}, 2.0), 4);
        CHECK(e[0] > 0.0);
        for (std::size_t b = 1; b < e.size(); ++b) CHECK(e[b] == 0.0);
    }

    TEST_CASE("bands partition the spectral energy") {
        Rng rng(10);
        const Volume v = random_volume({16, 8, 8}, rng);
        const auto e = band_energy(v, 5);
        double total = 0.0;
        for (double x : e) total += x;
        const double expected = spectral_energy(fft3(v));
        CHECK(std::abs(total - expected) / expected < 1e-6);
    }

    TEST_CASE("cosine lands in its analytic band") {
        // cos(2 pi k0 x / N) puts all energy in bins (+-k0, 0, 0); the radius
        // relative to Nyquist is (k0 / N) / 0.5.
        const Extents ext{32, 8, 8};
        const std::size_t n_bands = 6;
        for (std::size_t k0 : {1u, 3u, 5u, 9u, 13u, 16u}) {
            Volume v(ext);
            for (std::size_t x = 0; x < 32; ++x)
                for (std::size_t y = 0; y < 8; ++y)
                    for (std::size_t z = 0; z < 8; ++z)
                        v.at(x, y, z) = std::cos(2.0 * std::numbers::pi * double(k0 * x) / 32.0);
            const double r = (double(k0) / 32.0) / 0.5;
            const auto predicted = std::min(n_bands - 1, std::size_t(std::floor(r * n_bands)));
            const auto e = band_energy(v, n_bands);
            double total = 0.0;
            for (double x : e) total += x;
            CHECK(e[predicted] / total > 1.0 - 1e-9);
        }
    }

    TEST_CASE("needs two bands") { CHECK_THROWS_AS(band_energy(Volume({4, 4, 4}), 1), ValueError); }
}
