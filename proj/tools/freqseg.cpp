// freqseg: frequency-disentangled 3D segmentation toolkit.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "freqseg/data/svol.hpp"
#include "freqseg/experiment/sweep.hpp"
#include "freqseg/frequency/band_energy.hpp"
#include "freqseg/frequency/disentangle.hpp"

namespace fs = std::filesystem;
using namespace freqseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
};

ExperimentConfig load(const Globals& g, const char* seed_key) {
    std::vector<std::string> overrides = g.sets;
    if (g.seed) overrides.push_back(std::string(seed_key) + "=" + std::to_string(*g.seed));
    return resolve_config(g.config.empty() ? std::nullopt : std::optional<fs::path>(g.config), overrides);
}

fs::path out_dir(const Globals& g, const fs::path& fallback) {
    return g.out.empty() ? fallback : fs::path(g.out);
}

int cmd_disentangle(const std::string& input, double theta, const std::string& prefix) {
    const Volume v = read_svol_volume(input);
    const FreqPair p = disentangle(v, theta);
    if (const fs::path parent = fs::path(prefix).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_svol(prefix + ".high.svol", p.high);
    write_svol(prefix + ".low.svol", p.low);
    const Volume hi = read_svol_volume(prefix + ".high.svol");
    const Volume lo = read_svol_volume(prefix + ".low.svol");
    double err = 0.0, err_f64 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        err = std::max(err, std::abs(hi[i] + lo[i] - v[i]));
        err_f64 = std::max(err_f64, std::abs(p.high[i] + p.low[i] - v[i]));
    }
    const auto bands = band_energy(p.high, 8);
    double total = 0.0, upper = 0.0;
    for (std::size_t b = 1; b < bands.size(); ++b) {
        total += bands[b];
        if (b >= bands.size() / 2) upper += bands[b];
    }
    std::printf("wrote %s.high.svol and %s.low.svol (%s, theta %g)\n", prefix.c_str(),
                prefix.c_str(), extents_to_string(v.extents()).c_str(), theta);
    std::printf("reconstruction max error: %.3e (files, f32), %.3e (in memory)\n", err, err_f64);
    std::printf("imaginary residue: %.3e\n", p.imag_residue);
    std::printf("high part upper-band energy share: %.4f\n", total > 0.0 ? upper / total : 0.0);
    return kExitOk;
}

int cmd_phantom_gen(const Globals& g, std::optional<std::size_t> count) {
    std::vector<std::string> sets = g.sets;
    if (count) sets.push_back("phantom.count=" + std::to_string(*count));
    Globals g2 = g;
    g2.sets = sets;
    const ExperimentConfig cfg = load(g2, "phantom.seed");
    const fs::path dir = out_dir(g, cfg.data_dir);
    const auto ids = generate_phantom_dataset(cfg, dir);
    std::printf("wrote %zu synthetic subjects (%s) to %s\n", ids.size(),
                extents_to_string(cfg.phantom.extents).c_str(), dir.string().c_str());
    return kExitOk;
}

int cmd_train(const Globals& g) {
    const ExperimentConfig cfg = load(g, "train.seed");
    const Dataset data = Dataset::load(cfg.data_dir, cfg.target_extents);
    const fs::path dir = out_dir(g, "runs/train");
    std::printf("train: mode %s, theta %g, %zu epochs, config %s\n",
                to_string(cfg.model.fusion.mode).c_str(), cfg.model.fusion.theta, cfg.epochs,
                cfg.hash().c_str());
    std::fflush(stdout);
    const RunOutput r = train_run(cfg, data, dir, &std::cout);
    std::printf("best epoch %zu, validation Dice %.4f, %zu training subjects\n", r.train.best_epoch,
                r.train.best_val_dice, r.split.train.size());
    std::printf("checkpoint: %s\n", (dir / "model.ckpt").string().c_str());
    return kExitOk;
}

int cmd_evaluate(const Globals& g, const std::string& checkpoint, const std::string& subjects,
                 bool leak_ok) {
    const CheckpointMeta meta = read_checkpoint_meta(checkpoint);
    ExperimentConfig cfg;
    if (g.config.empty() && g.sets.empty() && !g.seed) {
        cfg = ExperimentConfig::from_raw(meta.config);
        cfg.validate();
    } else {
        cfg = load(g, "train.seed");
    }
    if (cfg.hash() != meta.config_hash)
        throw Error("config hash " + cfg.hash() + " does not match checkpoint hash " +
                    meta.config_hash + " (" + checkpoint + ".meta)");
    const Dataset data = Dataset::load(cfg.data_dir, cfg.target_extents);
    const SplitSpec split = subsample_train(base_split(cfg, data), cfg.fraction, cfg.seed);
    std::vector<std::string> ids;
    if (subjects == "test") ids = split.test;
    else if (subjects == "val") ids = split.val;
    else if (subjects == "train") ids = split.train;
    if ((subjects == "train") && !leak_ok)
        throw UsageError("evaluating on training subjects needs --leak-ok");

    SegmentationModel model(cfg.model, cfg.seed);
    restore_parameters(model.parameters(), load_checkpoint(checkpoint));
    const MetricReport report = evaluate_model(model, data, ids, cfg);
    const fs::path dir = out_dir(g, fs::path(checkpoint).parent_path());
    fs::create_directories(dir);
    const fs::path record = dir / ("metrics_" + subjects + ".txt");
    std::ofstream f(record, std::ios::trunc);
    write_metric_record(f, report);
    if (!f) throw Error("cannot write " + record.string());
    std::cout << format_metric_table({{to_string(cfg.model.fusion.mode) + " (" + subjects + ")", report}});
    std::printf("record: %s\n", record.string().c_str());
    return kExitOk;
}

int cmd_sweep(const Globals& g) {
    const ExperimentConfig cfg = load(g, "train.seed");
    const Dataset data = Dataset::load(cfg.data_dir, cfg.target_extents);
    const fs::path dir = out_dir(g, "runs/sweep");
    const SweepResult r = run_sweep(cfg, data, dir, &std::cout);
    std::cout << '\n' << format_sweep_table(r.rows);
    std::printf("results: %s\n", (dir / "results.csv").string().c_str());
    if (r.failures() > 0) {
        std::fprintf(stderr, "%zu of %zu cells failed, see %s\n", r.failures(), r.cells.size(),
                     (dir / "failures.txt").string().c_str());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-disentangled 3D segmentation on synthetic or imported volumes."};
    app.footer("Exit codes: 0 success, 1 runtime failure, 2 usage error.\n\nConfiguration keys "
               "(--config file sections or --set section.key=value):\n" +
               config_reference());
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed,
                   "master seed (train.seed; phantom.seed for phantom-gen)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--set", g.sets, "override one key, section.key=value (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    auto* dis = app.add_subcommand("disentangle", "split a volume into high and low frequency parts");
    std::string input, prefix;
    double theta = kDefaultTheta;
    dis->add_option("input", input, "input .svol volume")->required()->check(CLI::ExistingFile);
    dis->add_option("--theta", theta, "high-frequency block fraction in (0, 1)")
        ->check(CLI::Validator(
            [](std::string& s) -> std::string {
                double v = 0.0;
                try {
                    v = std::stod(s);
                } catch (const std::exception&) {
                    return "theta must be a number";
                }
                return (v > 0.0 && v < 1.0) ? "" : "theta must lie in (0, 1), got " + s;
            },
            "(0,1)"));
    dis->add_option("--prefix", prefix, "output prefix (default: input path without .svol)");

    auto* gen = app.add_subcommand("phantom-gen", "write a synthetic phantom dataset");
    std::optional<std::size_t> count;
    gen->add_option("--count", count, "number of subjects (phantom.count)");

    auto* train = app.add_subcommand("train", "train one model with best-validation selection");

    auto* eval = app.add_subcommand("evaluate", "score a checkpoint with bootstrap intervals");
    std::string checkpoint, subjects = "test";
    bool leak_ok = false;
    eval->add_option("checkpoint", checkpoint, "model.ckpt written by train")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--subjects", subjects, "test, val or train")
        ->check(CLI::IsMember({"test", "val", "train"}));
    eval->add_flag("--leak-ok", leak_ok, "allow scoring on training subjects");

    auto* sweep = app.add_subcommand("sweep", "train and score every fraction x mode x seed cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*dis) {
            if (prefix.empty()) {
                prefix = input;
                if (prefix.size() > 5 && prefix.ends_with(".svol")) prefix.resize(prefix.size() - 5);
            }
            if (!g.out.empty()) prefix = (fs::path(g.out) / fs::path(prefix).filename()).string();
            return cmd_disentangle(input, theta, prefix);
        }
        if (*gen) return cmd_phantom_gen(g, count);
        if (*train) return cmd_train(g);
        if (*eval) return cmd_evaluate(g, checkpoint, subjects, leak_ok);
        if (*sweep) return cmd_sweep(g);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
