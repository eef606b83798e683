#include "freqseg/experiment/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "freqseg/metrics/frequency_error.hpp"
#include "freqseg/metrics/hausdorff.hpp"
#include "freqseg/metrics/overlap.hpp"
#include "freqseg/tensor/adam.hpp"
#include "freqseg/tensor/loss.hpp"

namespace freqseg {

namespace {

NdArray stack_targets(const Dataset& data, const std::vector<std::string>& ids,
                      const ModelConfig& cfg) {
    const Extents e = data.extents();
    const std::size_t c = cfg.output_channels();
    const std::size_t per = c * voxel_count(e);
    NdArray t({ids.size(), c, e[0], e[1], e[2]});
    for (std::size_t b = 0; b < ids.size(); ++b) {
        const NdArray one = encode_target(data.subject(ids[b]).mask, cfg);
        std::copy(one.data().begin(), one.data().end(), t.data().begin() + b * per);
    }
    return t;
}

double soft_dice_value(const NdArray& prob, const NdArray& target) {
    NoGradGuard guard;
    return soft_dice_loss(Tensor::constant(prob), target).value()[0];
}

double label_mean_dice(const Mask& pred, const Mask& truth, std::size_t classes) {
    double s = 0.0;
    for (std::size_t l = 1; l <= classes; ++l)
        s += dice_coefficient(pred, truth, static_cast<std::uint8_t>(l));
    return s / static_cast<double>(classes);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8f", v);
    return buf;
}

}  // namespace

ModelInput batch_input(const Dataset& data, const std::vector<std::string>& ids,
                       const ModelConfig& cfg) {
    std::vector<const Volume*> images;
    std::vector<const FreqPair*> pairs;
    for (const auto& id : ids) {
        images.push_back(&data.subject(id).image);
        if (cfg.fusion.mode != FusionMode::None)
            pairs.push_back(&data.freq_pair(id, cfg.fusion.theta));
    }
    return make_input(images, pairs);
}

NdArray predict(const SegmentationModel& model, const Dataset& data, const std::string& id) {
    NoGradGuard guard;
    return model.forward(batch_input(data, {id}, model.config())).value();
}

TrainResult train_model(SegmentationModel& model, const Dataset& data, const SplitSpec& split,
                        const ExperimentConfig& cfg, std::ostream* log) {
    split.validate();
    const ModelConfig& mc = model.config();
    // Surface shape and divisibility problems before the first epoch.
    model.check_input(batch_input(data, {split.train.front()}, mc));
    if (data.max_label() > mc.foreground_classes)
        throw ValueError("dataset has label " + std::to_string(data.max_label()) +
                         " but the model is configured for " +
                         std::to_string(mc.foreground_classes) + " foreground classes");

    const auto params = model.parameters();
    AdamState adam;
    adam.lr = cfg.lr;
    Rng order_rng(derive_seed(cfg.seed, 0x0dde));
    std::vector<std::string> order = split.train;
    std::vector<NdArray> best_values;
    TrainResult result;

    std::vector<NdArray> val_targets;
    for (const auto& id : split.val) val_targets.push_back(encode_target(data.subject(id).mask, mc));

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        EpochRecord rec;
        rec.epoch = epoch;
        if (cfg.freq_trace) rec.freq_error.assign(cfg.freq_bands, 0.0);
        std::size_t steps = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const std::vector<std::string> ids(order.begin() + b0,
                                               order.begin() + std::min(order.size(), b0 + cfg.batch_size));
            const Tensor prob = model.forward(batch_input(data, ids, mc));
            const Tensor loss = soft_dice_loss(prob, stack_targets(data, ids, mc));
            rec.train_loss += loss.value()[0];
            ++steps;
            if (cfg.freq_trace)
                for (std::size_t b = 0; b < ids.size(); ++b) {
                    const auto e = frequency_error_spectrum(class_probability(prob.value(), b, 1, mc),
                                                            data.subject(ids[b]).mask, cfg.freq_bands);
                    for (std::size_t k = 0; k < e.size(); ++k)
                        rec.freq_error[k] += e[k] / static_cast<double>(order.size());
                }
            backward(loss);
            adam_step(params, adam);
        }
        rec.train_loss /= static_cast<double>(steps);

        for (std::size_t i = 0; i < split.val.size(); ++i) {
            const NdArray prob = predict(model, data, split.val[i]);
            rec.val_loss += soft_dice_value(prob, val_targets[i]);
            rec.val_dice += label_mean_dice(decode_prediction(prob, 0, mc),
                                            data.subject(split.val[i]).mask, mc.foreground_classes);
        }
        rec.val_loss /= static_cast<double>(split.val.size());
        rec.val_dice /= static_cast<double>(split.val.size());

        if (result.best_epoch == 0 || rec.val_dice > result.best_val_dice) {
            rec.best = true;
            result.best_epoch = epoch;
            result.best_val_dice = rec.val_dice;
            best_values.clear();
            for (const auto& p : params) best_values.push_back(p.value());
        }
        if (log) *log << format_epoch(rec) << '\n' << std::flush;
        result.epochs.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < params.size(); ++i) Tensor(params[i]).mutable_value() = best_values[i];
    return result;
}

std::string format_epoch(const EpochRecord& r) {
    return "epoch=" + std::to_string(r.epoch) + " train_loss=" + num(r.train_loss) +
           " val_loss=" + num(r.val_loss) + " val_dice=" + num(r.val_dice) +
           " best=" + (r.best ? "1" : "0");
}

std::string format_freq_trace(const EpochRecord& r) {
    std::string s = "epoch=" + std::to_string(r.epoch);
    for (std::size_t b = 0; b < r.freq_error.size(); ++b)
        s += " e" + std::to_string(b) + "=" + num(r.freq_error[b]);
    return s;
}

MetricReport evaluate_model(const SegmentationModel& model, const Dataset& data,
                            const std::vector<std::string>& ids, const ExperimentConfig& cfg) {
    const ModelConfig& mc = model.config();
    std::vector<SubjectMetrics> subjects;
    for (const auto& id : ids) {
        const Subject& s = data.subject(id);
        const Mask pred = decode_prediction(predict(model, data, id), 0, mc);
        SubjectMetrics m{id, 0.0, 0.0};
        for (std::size_t l = 1; l <= mc.foreground_classes; ++l) {
            const auto label = static_cast<std::uint8_t>(l);
            m.dice += dice_coefficient(pred, s.mask, label);
            m.hd95 += hausdorff95(pred, s.mask, s.image.spacing(), label);
        }
        m.dice /= static_cast<double>(mc.foreground_classes);
        m.hd95 /= static_cast<double>(mc.foreground_classes);
        subjects.push_back(m);
    }
    return make_metric_report(std::move(subjects), cfg.bootstrap_replicates, cfg.bootstrap_seed);
}

void save_trained_model(const std::filesystem::path& path, const SegmentationModel& model,
                        const ExperimentConfig& cfg, const TrainResult& result) {
    save_checkpoint(path, model.parameters());
    std::ofstream f(path.string() + ".meta", std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string() + ".meta");
    f << "# synthetic-data run; early fusion = channel concatenation, late fusion = 1x1x1 "
         "projection added to the logits\n"
      << "config_hash = " << cfg.hash() << '\n'
      << "best_epoch = " << result.best_epoch << '\n'
      << cfg.canonical_text();
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& checkpoint) {
    const std::string p = checkpoint.string() + ".meta";
    std::ifstream f(p);
    if (!f) throw Error("cannot open " + p);
    CheckpointMeta meta;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw Error(p + ": malformed line '" + line + "'");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
        if (key == "config_hash") meta.config_hash = value;
        else if (key == "best_epoch") meta.best_epoch = std::stoul(value);
        else meta.config[key] = value;
    }
    if (meta.config_hash.empty()) throw Error(p + ": no config_hash");
    return meta;
}

std::string format_split(const SplitSpec& s) {
    auto join = [](const std::vector<std::string>& v) {
        std::string out;
        for (const auto& id : v) out += (out.empty() ? "" : ",") + id;
        return out;
    };
    return "train = " + join(s.train) + "\nval = " + join(s.val) + "\ntest = " + join(s.test) + "\n";
}

}  // namespace freqseg
