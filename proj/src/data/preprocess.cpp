#include "freqseg/data/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace freqseg {

namespace {

// Source coordinate of target index i under corner alignment.
double source_coord(std::size_t i, std::size_t n_src, std::size_t n_dst) {
    if (n_dst <= 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_src - 1) / static_cast<double>(n_dst - 1);
}

Spacing rescaled_spacing(const Spacing& s, const Extents& from, const Extents& to) {
    Spacing out{};
    for (int a = 0; a < 3; ++a)
        out[a] = s[a] * static_cast<double>(from[a] - 1) / static_cast<double>(to[a] - 1);
    return out;
}

}  // namespace

Volume minmax_normalize(const Volume& v) {
    const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
    const double mn = *lo, mx = *hi;
    Volume out(v.extents(), 0.0, v.spacing());
    if (mx > mn) {
        const double inv = 1.0 / (mx - mn);
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mn) * inv;
    }
    return out;
}

Volume resize(const Volume& v, const Extents& target) {
    if (v.extents() == target) return v;
    Volume out(target, 0.0, rescaled_spacing(v.spacing(), v.extents(), target));
    const Extents& src = v.extents();
    // Per-axis lower index and weight.
    std::vector<std::size_t> i0[3];
    std::vector<double> w[3];
    for (int a = 0; a < 3; ++a) {
        i0[a].resize(target[a]);
        w[a].resize(target[a]);
        for (std::size_t i = 0; i < target[a]; ++i) {
            const double c = source_coord(i, src[a], target[a]);
            const auto lo = std::min(static_cast<std::size_t>(std::floor(c)), src[a] - 2);
            i0[a][i] = lo;
            w[a][i] = c - static_cast<double>(lo);
        }
    }
    for (std::size_t x = 0; x < target[0]; ++x)
        for (std::size_t y = 0; y < target[1]; ++y)
            for (std::size_t z = 0; z < target[2]; ++z) {
                const std::size_t x0 = i0[0][x], y0 = i0[1][y], z0 = i0[2][z];
                const double wx = w[0][x], wy = w[1][y], wz = w[2][z];
                double acc = 0.0;
                for (int dx = 0; dx < 2; ++dx)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dz = 0; dz < 2; ++dz) {
                            const double weight = (dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy) *
                                                  (dz ? wz : 1.0 - wz);
                            if (weight != 0.0) acc += weight * v.at(x0 + dx, y0 + dy, z0 + dz);
                        }
                out.at(x, y, z) = acc;
            }
    return out;
}

Mask resize(const Mask& m, const Extents& target) {
    if (m.extents() == target) return m;
    const Extents& src = m.extents();
    std::vector<std::size_t> idx[3];
    for (int a = 0; a < 3; ++a) {
        idx[a].resize(target[a]);
        for (std::size_t i = 0; i < target[a]; ++i)
            idx[a][i] = std::min(static_cast<std::size_t>(std::lround(source_coord(i, src[a], target[a]))),
                                 src[a] - 1);
    }
    Mask out(target);
    for (std::size_t x = 0; x < target[0]; ++x)
        for (std::size_t y = 0; y < target[1]; ++y)
            for (std::size_t z = 0; z < target[2]; ++z)
                out.at(x, y, z) = m.at(idx[0][x], idx[1][y], idx[2][z]);
    return out;
}

Volume preprocess(const Volume& v, const Extents& target) { return minmax_normalize(resize(v, target)); }

}  // namespace freqseg
