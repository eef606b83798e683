#include "freqseg/metrics/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freqseg/error.hpp"
#include "freqseg/metrics/statistics.hpp"

namespace freqseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line
// with sample pitch `step`. Points with infinite cost are skipped.
void distance_1d(const double* f, double* out, std::size_t n, double step,
                 std::vector<std::size_t>& v, std::vector<double>& z) {
    v.clear();
    z.clear();
    for (std::size_t q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        const double xq = static_cast<double>(q) * step;
        double s = -kInf;
        while (!v.empty()) {
            const double xv = static_cast<double>(v.back()) * step;
            s = ((f[q] + xq * xq) - (f[v.back()] + xv * xv)) / (2.0 * (xq - xv));
            if (s > z.back()) break;
            v.pop_back();
            z.pop_back();
            s = -kInf;
        }
        v.push_back(q);
        z.push_back(v.size() == 1 ? -kInf : s);
    }
    if (v.empty()) {
        std::fill(out, out + n, kInf);
        return;
    }
    std::size_t k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double xq = static_cast<double>(q) * step;
        while (k + 1 < v.size() && z[k + 1] < xq) ++k;
        const double d = (static_cast<double>(q) - static_cast<double>(v[k])) * step;
        out[q] = d * d + f[v[k]];
    }
}

}  // namespace

std::vector<Voxel> boundary_voxels(const Mask& m, std::uint8_t label) {
    const auto& e = m.extents();
    std::vector<Voxel> out;
    for (std::size_t x = 0; x < e[0]; ++x)
        for (std::size_t y = 0; y < e[1]; ++y)
            for (std::size_t z = 0; z < e[2]; ++z) {
                if (m.at(x, y, z) != label) continue;
                const bool edge = x == 0 || y == 0 || z == 0 || x + 1 == e[0] || y + 1 == e[1] ||
                                  z + 1 == e[2];
                if (edge || m.at(x - 1, y, z) != label || m.at(x + 1, y, z) != label ||
                    m.at(x, y - 1, z) != label || m.at(x, y + 1, z) != label ||
                    m.at(x, y, z - 1) != label || m.at(x, y, z + 1) != label)
                    out.push_back({x, y, z});
            }
    return out;
}

std::vector<double> squared_distance_transform(const Extents& e, const std::vector<bool>& seed,
                                               const Spacing& spacing) {
    const std::size_t n = voxel_count(e);
    if (seed.size() != n) throw ShapeError("squared_distance_transform: seed size mismatch");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = seed[i] ? 0.0 : kInf;

    const std::size_t longest = std::max({e[0], e[1], e[2]});
    std::vector<double> line(longest), result(longest);
    std::vector<std::size_t> v;
    std::vector<double> z;
    const std::array<std::size_t, 3> stride{e[1] * e[2], e[2], 1};
    for (int axis = 2; axis >= 0; --axis) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (std::size_t i = 0; i < e[a1]; ++i)
            for (std::size_t j = 0; j < e[a2]; ++j) {
                const std::size_t base = i * stride[a1] + j * stride[a2];
                for (std::size_t k = 0; k < e[axis]; ++k) line[k] = d[base + k * stride[axis]];
                distance_1d(line.data(), result.data(), e[axis], spacing[axis], v, z);
                for (std::size_t k = 0; k < e[axis]; ++k) d[base + k * stride[axis]] = result[k];
            }
    }
    return d;
}

double volume_diagonal(const Extents& e, const Spacing& spacing) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += std::pow(static_cast<double>(e[a]) * spacing[a], 2);
    return std::sqrt(s);
}

double hausdorff95(const Mask& pred, const Mask& target, const Spacing& spacing,
                   std::uint8_t label) {
    if (pred.extents() != target.extents())
        throw ShapeError("hausdorff95: extents " + extents_to_string(pred.extents()) + " vs " +
                         extents_to_string(target.extents()));
    const auto& e = pred.extents();
    const auto a = boundary_voxels(pred, label);
    const auto b = boundary_voxels(target, label);
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return volume_diagonal(e, spacing);

    auto directed = [&](const std::vector<Voxel>& from, const std::vector<Voxel>& to) {
        std::vector<bool> seed(voxel_count(e), false);
        for (const auto& p : to) seed[pred.index(p[0], p[1], p[2])] = true;
        const auto d2 = squared_distance_transform(e, seed, spacing);
        std::vector<double> d;
        d.reserve(from.size());
        for (const auto& p : from) d.push_back(std::sqrt(d2[pred.index(p[0], p[1], p[2])]));
        return percentile(std::move(d), 95.0);
    };
    return std::max(directed(a, b), directed(b, a));
}

}  // namespace freqseg
