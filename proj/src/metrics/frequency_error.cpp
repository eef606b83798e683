#include "freqseg/metrics/frequency_error.hpp"

#include <cmath>

#include "freqseg/error.hpp"
#include "freqseg/frequency/band_energy.hpp"
#include "freqseg/frequency/fft.hpp"

namespace freqseg {

std::vector<double> frequency_error_spectrum(const Volume& pred_prob, const Mask& target,
                                             std::size_t n_bands, std::uint8_t label, double eps) {
    if (pred_prob.extents() != target.extents())
        throw ShapeError("frequency_error_spectrum: extents " +
                         extents_to_string(pred_prob.extents()) + " vs " +
                         extents_to_string(target.extents()));
    Volume t(target.extents());
    for (std::size_t i = 0; i < target.size(); ++i) t[i] = target[i] == label ? 1.0 : 0.0;
    Volume diff(pred_prob.extents());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pred_prob[i] - t[i];

    const auto err = band_energy(diff, n_bands);
    const auto ref = band_energy(t, n_bands);
    std::vector<double> e(n_bands);
    for (std::size_t b = 0; b < n_bands; ++b) e[b] = std::sqrt(err[b]) / (std::sqrt(ref[b]) + eps);
    return e;
}

std::vector<std::optional<std::size_t>> first_epoch_below(
    const std::vector<std::vector<double>>& trace, double threshold) {
    if (trace.empty()) return {};
    const std::size_t n_bands = trace.front().size();
    std::vector<std::optional<std::size_t>> out(n_bands);
    for (std::size_t epoch = 0; epoch < trace.size(); ++epoch) {
        if (trace[epoch].size() != n_bands)
            throw ShapeError("first_epoch_below: ragged trace at epoch " + std::to_string(epoch));
        for (std::size_t b = 0; b < n_bands; ++b)
            if (!out[b] && trace[epoch][b] < threshold) out[b] = epoch;
    }
    return out;
}

double nondecreasing_pair_fraction(const std::vector<std::optional<std::size_t>>& epochs) {
    if (epochs.size() < 2) throw ValueError("nondecreasing_pair_fraction: need at least two bands");
    std::size_t ok = 0;
    for (std::size_t b = 0; b + 1 < epochs.size(); ++b) {
        const auto& lo = epochs[b];
        const auto& hi = epochs[b + 1];
        if (!hi || (lo && *lo <= *hi)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(epochs.size() - 1);
}

}  // namespace freqseg
