#include "freqseg/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "freqseg/error.hpp"
#include "freqseg/frequency/band_energy.hpp"
#include "freqseg/frequency/fft.hpp"
#include "freqseg/random.hpp"

namespace freqseg {

namespace {

struct Ellipsoid {
    std::array<double, 3> center;
    std::array<double, 3> radii;
    double intensity;
    std::uint8_t label;
};

Volume smooth_background(const PhantomSpec& spec, Rng& rng) {
    const Extents& e = spec.extents;
    Spectrum s(e);
    for (auto& c : s.bins) c = rng.normal();
    fft3_inplace(e, s.bins, false);
    std::size_t i = 0;
    for (std::size_t x = 0; x < e[0]; ++x)
        for (std::size_t y = 0; y < e[1]; ++y)
            for (std::size_t z = 0; z < e[2]; ++z, ++i) {
                if (i == 0 || normalized_radius(e, x, y, z) > spec.background_cutoff) s.bins[i] = 0.0;
            }
    Volume field = ifft3(s);
    double var = 0.0;
    for (double v : field.data()) var += v * v;
    var /= static_cast<double>(field.size());
    const double scale = var > 0.0 ? spec.background_amplitude / std::sqrt(var) : 0.0;
    for (double& v : field.data()) v *= scale;
    return field;
}

std::vector<Ellipsoid> place_structures(const PhantomSpec& spec, Rng& rng) {
    std::vector<Ellipsoid> placed;
    for (std::size_t k = 0; k < spec.structure_count; ++k) {
        bool ok = false;
        for (std::size_t attempt = 0; attempt < spec.max_placement_attempts && !ok; ++attempt) {
            Ellipsoid el{};
            for (int a = 0; a < 3; ++a) el.radii[a] = rng.uniform(spec.radius_min, spec.radius_max);
            bool fits = true;
            for (int a = 0; a < 3; ++a) {
                // One voxel of clearance from every face.
                const double lo = el.radii[a] + 1.0;
                const double hi = static_cast<double>(spec.extents[a]) - 2.0 - el.radii[a];
                if (hi < lo) {
                    fits = false;
                    break;
                }
                el.center[a] = rng.uniform(lo, hi);
            }
            el.intensity = spec.structure_intensity * rng.uniform(0.75, 1.25);
            el.label = static_cast<std::uint8_t>(k % spec.num_labels + 1);
            if (!fits) continue;
            const double rmax = *std::max_element(el.radii.begin(), el.radii.end());
            ok = std::all_of(placed.begin(), placed.end(), [&](const Ellipsoid& o) {
                double d2 = 0.0;
                for (int a = 0; a < 3; ++a) d2 += (o.center[a] - el.center[a]) * (o.center[a] - el.center[a]);
                const double omax = *std::max_element(o.radii.begin(), o.radii.end());
                return std::sqrt(d2) > rmax + omax + 1.0;
            });
            if (ok) placed.push_back(el);
        }
        if (!ok)
            throw Error("phantom: could not place structure " + std::to_string(k + 1) + " of " +
                        std::to_string(spec.structure_count) + " after " +
                        std::to_string(spec.max_placement_attempts) + " attempts");
    }
    return placed;
}

}  // namespace

void PhantomSpec::validate() const {
    for (int a = 0; a < 3; ++a)
        if (extents[a] < 2) throw ValueError("phantom extents must be >= 2 on every axis");
    if (!(background_cutoff > 0.0 && background_cutoff <= 1.0))
        throw ValueError("phantom background_cutoff must lie in (0, 1]");
    if (background_amplitude < 0.0) throw ValueError("phantom background_amplitude must be >= 0");
    if (structure_count < 1) throw ValueError("phantom needs at least one structure");
    if (radius_min < 1.0) throw ValueError("phantom radius_min must be >= 1 voxel");
    if (radius_max < radius_min) throw ValueError("phantom radius_max must be >= radius_min");
    if (!(edge_sharpness > 0.0)) throw ValueError("phantom edge_sharpness must be positive");
    if (noise_std < 0.0) throw ValueError("phantom noise_std must be >= 0");
    if (num_labels < 1) throw ValueError("phantom num_labels must be >= 1");
    if (max_placement_attempts < 1) throw ValueError("phantom max_placement_attempts must be >= 1");
}

std::pair<Volume, Mask> generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Volume vol = smooth_background(spec, rng);
    const std::vector<Ellipsoid> structures = place_structures(spec, rng);
    Mask mask(spec.extents);
    const Extents& e = spec.extents;
    for (const Ellipsoid& el : structures) {
        const double r_mean = std::cbrt(el.radii[0] * el.radii[1] * el.radii[2]);
        for (std::size_t x = 0; x < e[0]; ++x)
            for (std::size_t y = 0; y < e[1]; ++y)
                for (std::size_t z = 0; z < e[2]; ++z) {
                    const double p[3] = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
                    double rho2 = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        const double t = (p[a] - el.center[a]) / el.radii[a];
                        rho2 += t * t;
                    }
                    const double rho = std::sqrt(rho2);
                    const double signed_dist = (1.0 - rho) * r_mean;
                    vol.at(x, y, z) += el.intensity / (1.0 + std::exp(-spec.edge_sharpness * signed_dist));
                    if (rho <= 1.0) mask.at(x, y, z) = el.label;
                }
    }
    if (spec.noise_std > 0.0)
        for (double& v : vol.data()) v += spec.noise_std * rng.normal();
    return {std::move(vol), std::move(mask)};
}

}  // namespace freqseg
