#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "freqseg/data/split.hpp"
#include "freqseg/experiment/config.hpp"
#include "freqseg/experiment/dataset.hpp"
#include "freqseg/experiment/trainer.hpp"
#include "freqseg/metrics/report.hpp"

namespace freqseg {

inline constexpr const char* kSweepCsvHeader =
    "task,fraction,n_train,mode,seed,dice_mean,dice_lo,dice_hi,hd95_mean,hd95_lo,hd95_hi,wall_s,"
    "config_hash";

struct SweepRow {
    std::string task;
    double fraction = 1.0;
    std::size_t n_train = 0;
    FusionMode mode = FusionMode::None;
    std::uint64_t seed = 0;
    ConfidenceInterval dice;
    ConfidenceInterval hd95;
    double wall_s = 0.0;
    std::string config_hash;

    bool operator==(const SweepRow&) const;
};

/// Numbers are written with enough digits to parse back exactly.
std::string format_csv_row(const SweepRow& r);
SweepRow parse_csv_row(const std::string& line);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

/// Per-fraction and per-mode medians over seeds, plus every row, as an
/// aligned text table.
std::string format_sweep_table(const std::vector<SweepRow>& rows);

/// One trained and evaluated cell of the sweep grid.
struct SweepCell {
    double fraction = 1.0;
    FusionMode mode = FusionMode::None;
    std::uint64_t seed = 0;
    ExperimentConfig config;
    SplitSpec split;
    SweepRow row;
    TrainResult train;
    MetricReport report;
    std::string error;  // empty on success
};

struct SweepResult {
    SplitSpec base_split;
    std::vector<SweepCell> cells;  // fraction-major, then seed, then mode
    std::vector<SweepRow> rows;    // successful cells, same order
    std::size_t failures() const;
};

/// Seed replicate r of a sweep uses seed cfg.seed + r.
std::uint64_t replicate_seed(const ExperimentConfig& cfg, std::size_t r);

/// The base split shared by every cell.
SplitSpec base_split(const ExperimentConfig& cfg, const Dataset& data);

/// Resolved config of one cell.
ExperimentConfig cell_config(const ExperimentConfig& cfg, double fraction, FusionMode mode,
                             std::uint64_t seed);

/// fraction x seed x mode grid. Every cell subsamples the same base split
/// with its (fraction, seed), so the three modes of a (fraction, seed)
/// pair train on the same subjects. Cells run on cfg.workers threads and
/// are reported in grid order. When `out` is non-empty each cell writes its
/// log, checkpoint and metric record under out/cells/<name>/, and the sweep
/// writes results.csv, results.txt and splits.txt.
SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& data,
                      const std::filesystem::path& out, std::ostream* progress = nullptr);

/// Train-only run of one configuration; used by the train command.
struct RunOutput {
    SplitSpec split;
    TrainResult train;
};

RunOutput train_run(const ExperimentConfig& cfg, const Dataset& data,
                    const std::filesystem::path& out, std::ostream* log);

}  // namespace freqseg
