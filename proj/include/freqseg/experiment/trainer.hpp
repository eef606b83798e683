#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freqseg/data/split.hpp"
#include "freqseg/experiment/config.hpp"
#include "freqseg/experiment/dataset.hpp"
#include "freqseg/metrics/report.hpp"
#include "freqseg/models/checkpoint.hpp"
#include "freqseg/models/fusion.hpp"

namespace freqseg {

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_dice = 0.0;
    bool best = false;
    /// Mean per-band spectral error of this epoch's training predictions;
    /// empty unless the trace is enabled.
    std::vector<double> freq_error;
};

struct TrainResult {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_dice = 0.0;
};

/// Input tensors for the listed subjects in the layout the model needs.
ModelInput batch_input(const Dataset& data, const std::vector<std::string>& ids,
                       const ModelConfig& cfg);

/// Adam on the soft Dice loss over split.train for cfg.epochs epochs, with
/// a seeded shuffle each epoch. After every epoch the validation subjects
/// are scored; the parameters of the epoch with the best validation Dice
/// (earliest on ties) are restored into `model` at the end. When `log` is
/// set, one line per epoch is written to it as training proceeds.
TrainResult train_model(SegmentationModel& model, const Dataset& data, const SplitSpec& split,
                        const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// "epoch=3 train_loss=... val_loss=... val_dice=... best=1"
std::string format_epoch(const EpochRecord& r);
/// "epoch=3 e0=... e1=..."
std::string format_freq_trace(const EpochRecord& r);

/// Probabilities for one subject, [1, C, X, Y, Z].
NdArray predict(const SegmentationModel& model, const Dataset& data, const std::string& id);

/// Mean over foreground labels of Dice and HD95 for every subject, with
/// bootstrap intervals.
MetricReport evaluate_model(const SegmentationModel& model, const Dataset& data,
                            const std::vector<std::string>& ids, const ExperimentConfig& cfg);

/// Checkpoint plus a "<path>.meta" sidecar with the resolved config, its
/// hash and the best epoch.
void save_trained_model(const std::filesystem::path& path, const SegmentationModel& model,
                        const ExperimentConfig& cfg, const TrainResult& result);

struct CheckpointMeta {
    RawConfig config;
    std::string config_hash;
    std::size_t best_epoch = 0;
};

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& checkpoint);

/// Text form of a split, one "partition = id,id,..." line each.
std::string format_split(const SplitSpec& s);

}  // namespace freqseg
