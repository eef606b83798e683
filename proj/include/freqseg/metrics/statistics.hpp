#pragma once

#include <span>
#include <vector>

namespace freqseg {

double mean(std::span<const double> values);

/// Linear-interpolation percentile (numpy's default): q in [0, 100], the
/// rank q/100 * (n - 1) interpolates between neighbouring order statistics.
double percentile(std::vector<double> values, double q);

double median(std::vector<double> values);

}  // namespace freqseg
