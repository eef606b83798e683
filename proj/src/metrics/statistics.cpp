#include "freqseg/metrics/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "freqseg/error.hpp"

namespace freqseg {

double mean(std::span<const double> values) {
    if (values.empty()) throw ValueError("mean of an empty list");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ValueError("percentile of an empty list");
    if (!(q >= 0.0 && q <= 100.0)) throw ValueError("percentile rank must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0) return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

}  // namespace freqseg
