#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "freqseg/metrics/bootstrap.hpp"

namespace freqseg {

struct SubjectMetrics {
    std::string id;
    double dice = 0.0;
    double hd95 = 0.0;
};

struct MetricReport {
    std::vector<SubjectMetrics> subjects;
    ConfidenceInterval dice;
    ConfidenceInterval hd95;
    std::size_t replicates = kDefaultBootstrapReplicates;
    std::uint64_t seed = 0;

    std::size_t n_test() const { return subjects.size(); }
};

MetricReport make_metric_report(std::vector<SubjectMetrics> subjects,
                                std::size_t replicates = kDefaultBootstrapReplicates,
                                std::uint64_t seed = 0);

/// Flat "key = value" record, one field per line, per-subject lines last:
///
///   n_test = 2
///   bootstrap_replicates = 2000
///   bootstrap_seed = 0
///   dice_mean = ... / dice_lo / dice_hi
///   hd95_mean = ... / hd95_lo / hd95_hi
///   subject.<id>.dice = ...
///   subject.<id>.hd95 = ...
///
/// Numbers use 17 significant digits so parsing recovers them exactly.
void write_metric_record(std::ostream& os, const MetricReport& r);
MetricReport read_metric_record(std::istream& is);

struct MetricTableRow {
    std::string label;
    MetricReport report;
};

/// Aligned table in the published layout: one row per label with
/// "Dice (%)" and "95 Hausdorff", each as mean [low, high].
std::string format_metric_table(const std::vector<MetricTableRow>& rows);

}  // namespace freqseg
