#include "freqseg/experiment/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "freqseg/metrics/statistics.hpp"

namespace fs = std::filesystem;

namespace freqseg {

namespace {

std::string exact(double v) {
    for (int prec = 1; prec <= 17; ++prec) {
        char t[40];
        std::snprintf(t, sizeof t, "%.*g", prec, v);
        if (std::strtod(t, nullptr) == v) return t;
    }
    char t[40];
    std::snprintf(t, sizeof t, "%.17g", v);
    return t;
}

double parse_real(const std::string& field, const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValueError("csv: bad number in " + field + ": '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& field, const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValueError("csv: bad integer in " + field + ": '" + s + "'");
    return v;
}

std::string cell_name(const SweepCell& c) {
    return "f" + exact(c.fraction) + "_" + to_string(c.mode) + "_s" + std::to_string(c.seed);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::trunc | std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
    if (!f) throw Error("write failed: " + p.string());
}

}  // namespace

bool SweepRow::operator==(const SweepRow& o) const {
    return task == o.task && fraction == o.fraction && n_train == o.n_train && mode == o.mode &&
           seed == o.seed && dice.mean == o.dice.mean && dice.low == o.dice.low &&
           dice.high == o.dice.high && hd95.mean == o.hd95.mean && hd95.low == o.hd95.low &&
           hd95.high == o.hd95.high && wall_s == o.wall_s && config_hash == o.config_hash;
}

std::string format_csv_row(const SweepRow& r) {
    return r.task + "," + exact(r.fraction) + "," + std::to_string(r.n_train) + "," +
           to_string(r.mode) + "," + std::to_string(r.seed) + "," + exact(r.dice.mean) + "," +
           exact(r.dice.low) + "," + exact(r.dice.high) + "," + exact(r.hd95.mean) + "," +
           exact(r.hd95.low) + "," + exact(r.hd95.high) + "," + exact(r.wall_s) + "," +
           r.config_hash;
}

SweepRow parse_csv_row(const std::string& line) {
    std::vector<std::string> f;
    std::size_t begin = 0;
    while (true) {
        const auto comma = line.find(',', begin);
        f.push_back(line.substr(begin, comma - begin));
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    if (f.size() != 13)
        throw ValueError("csv: expected 13 fields, got " + std::to_string(f.size()) + " in '" + line + "'");
    SweepRow r;
    r.task = f[0];
    r.fraction = parse_real("fraction", f[1]);
    r.n_train = parse_u64("n_train", f[2]);
    r.mode = parse_fusion_mode(f[3]);
    r.seed = parse_u64("seed", f[4]);
    r.dice = {parse_real("dice_mean", f[5]), parse_real("dice_lo", f[6]), parse_real("dice_hi", f[7])};
    r.hd95 = {parse_real("hd95_mean", f[8]), parse_real("hd95_lo", f[9]), parse_real("hd95_hi", f[10])};
    r.wall_s = parse_real("wall_s", f[11]);
    r.config_hash = f[12];
    return r;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kSweepCsvHeader << '\n';
    for (const auto& r : rows) os << format_csv_row(r) << '\n';
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kSweepCsvHeader) throw ValueError("csv: bad header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line))
        if (!line.empty()) rows.push_back(parse_csv_row(line));
    return rows;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    char buf[256];
    std::map<std::pair<double, int>, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) groups[{r.fraction, static_cast<int>(r.mode)}].push_back(&r);
    os << "Median over seeds\n";
    std::snprintf(buf, sizeof buf, "%-9s %-7s %-6s %-6s %-10s %-14s\n", "fraction", "n_train", "mode",
                  "seeds", "Dice (%)", "95 Hausdorff");
    os << buf;
    for (const auto& [key, g] : groups) {
        std::vector<double> d, h;
        for (const auto* r : g) {
            d.push_back(r->dice.mean * 100.0);
            h.push_back(r->hd95.mean);
        }
        std::snprintf(buf, sizeof buf, "%-9s %-7zu %-6s %-6zu %-10.2f %-14.2f\n",
                      exact(key.first).c_str(), g.front()->n_train,
                      to_string(g.front()->mode).c_str(), g.size(), median(d), median(h));
        os << buf;
    }
    os << "\nPer run\n";
    std::snprintf(buf, sizeof buf, "%-9s %-7s %-6s %-20s %-24s %-24s\n", "fraction", "n_train",
                  "mode", "seed", "Dice (%)", "95 Hausdorff");
    os << buf;
    for (const auto& r : rows) {
        char dice[64], hd[64];
        std::snprintf(dice, sizeof dice, "%.2f [%.2f, %.2f]", r.dice.mean * 100, r.dice.low * 100,
                      r.dice.high * 100);
        std::snprintf(hd, sizeof hd, "%.2f [%.2f, %.2f]", r.hd95.mean, r.hd95.low, r.hd95.high);
        std::snprintf(buf, sizeof buf, "%-9s %-7zu %-6s %-20llu %-24s %-24s\n",
                      exact(r.fraction).c_str(), r.n_train, to_string(r.mode).c_str(),
                      static_cast<unsigned long long>(r.seed), dice, hd);
        os << buf;
    }
    return os.str();
}

std::size_t SweepResult::failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.error.empty(); }));
}

std::uint64_t replicate_seed(const ExperimentConfig& cfg, std::size_t r) { return cfg.seed + r; }

SplitSpec base_split(const ExperimentConfig& cfg, const Dataset& data) {
    return make_split_counts(data.ids(), cfg.n_val, cfg.n_test, cfg.split_seed);
}

ExperimentConfig cell_config(const ExperimentConfig& cfg, double fraction, FusionMode mode,
                             std::uint64_t seed) {
    ExperimentConfig c = cfg;
    c.fraction = fraction;
    c.model.fusion.mode = mode;
    c.seed = seed;
    c.validate();
    return c;
}

namespace {

void run_cell(SweepCell& cell, const Dataset& data, const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    SegmentationModel model(cell.config.model, cell.config.seed);
    std::ofstream log;
    if (!dir.empty()) {
        fs::create_directories(dir);
        log.open(dir / "train.log", std::ios::trunc);
    }
    cell.train = train_model(model, data, cell.split, cell.config, dir.empty() ? nullptr : &log);
    cell.report = evaluate_model(model, data, cell.split.test, cell.config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SweepRow& r = cell.row;
    r.task = cell.config.task;
    r.fraction = cell.fraction;
    r.n_train = cell.split.train.size();
    r.mode = cell.mode;
    r.seed = cell.seed;
    r.dice = cell.report.dice;
    r.hd95 = cell.report.hd95;
    r.wall_s = cell.config.record_wall_time ? wall : 0.0;
    r.config_hash = cell.config.hash();

    if (!dir.empty()) {
        save_trained_model(dir / "model.ckpt", model, cell.config, cell.train);
        std::ofstream rec(dir / "metrics.txt", std::ios::trunc);
        write_metric_record(rec, cell.report);
        write_text(dir / "split.txt", format_split(cell.split));
        if (cell.config.freq_trace) {
            std::string trace;
            for (const auto& e : cell.train.epochs) trace += format_freq_trace(e) + "\n";
            write_text(dir / "freq_trace.txt", trace);
        }
    }
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& data, const fs::path& out,
                      std::ostream* progress) {
    SweepResult result;
    result.base_split = base_split(cfg, data);
    for (double f : cfg.sweep_fractions)
        for (std::size_t r = 0; r < cfg.sweep_seeds; ++r) {
            const std::uint64_t seed = replicate_seed(cfg, r);
            const SplitSpec split = subsample_train(result.base_split, f, seed);
            for (FusionMode m : cfg.sweep_modes) {
                SweepCell c;
                c.fraction = f;
                c.mode = m;
                c.seed = seed;
                c.config = cell_config(cfg, f, m, seed);
                c.split = split;
                result.cells.push_back(std::move(c));
            }
        }
    if (!out.empty()) fs::create_directories(out);

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < result.cells.size(); i = next++) {
            SweepCell& c = result.cells[i];
            try {
                run_cell(c, data, out.empty() ? fs::path{} : out / "cells" / cell_name(c));
            } catch (const std::exception& e) {
                c.error = e.what();
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                *progress << "[" << (i + 1) << "/" << result.cells.size() << "] " << cell_name(c);
                if (c.error.empty()) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf, " n_train=%zu dice=%.4f hd95=%.3f best_epoch=%zu",
                                  c.row.n_train, c.row.dice.mean, c.row.hd95.mean, c.train.best_epoch);
                    *progress << buf;
                } else {
                    *progress << " FAILED: " << c.error;
                }
                *progress << std::endl;
            }
        }
    };
    const std::size_t n_threads = std::min(cfg.workers, result.cells.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& c : result.cells)
        if (c.error.empty()) result.rows.push_back(c.row);

    if (!out.empty()) {
        std::ostringstream csv;
        write_sweep_csv(csv, result.rows);
        write_text(out / "results.csv", csv.str());
        write_text(out / "results.txt", format_sweep_table(result.rows));
        std::string splits = "# base split\n" + format_split(result.base_split);
        std::map<std::pair<double, std::uint64_t>, const SweepCell*> seen;
        for (const auto& c : result.cells) seen.emplace(std::pair{c.fraction, c.seed}, &c);
        for (const auto& [key, c] : seen) {
            splits += "# fraction=" + exact(key.first) + " seed=" + std::to_string(key.second) + "\n";
            splits += format_split(c->split);
        }
        write_text(out / "splits.txt", splits);
        std::string failures;
        for (const auto& c : result.cells)
            if (!c.error.empty()) failures += cell_name(c) + ": " + c.error + "\n";
        if (!failures.empty()) write_text(out / "failures.txt", failures);
    }
    return result;
}

RunOutput train_run(const ExperimentConfig& cfg, const Dataset& data, const fs::path& out,
                    std::ostream* log) {
    RunOutput r;
    r.split = subsample_train(base_split(cfg, data), cfg.fraction, cfg.seed);
    SegmentationModel model(cfg.model, cfg.seed);
    fs::create_directories(out);
    std::ofstream file_log(out / "train.log", std::ios::trunc);
    struct Tee : std::streambuf {
        std::streambuf* a;
        std::streambuf* b;
        int overflow(int c) override {
            if (c == EOF) return !EOF;
            if (a) a->sputc(static_cast<char>(c));
            if (b) b->sputc(static_cast<char>(c));
            return c;
        }
        int sync() override {
            if (a) a->pubsync();
            if (b) b->pubsync();
            return 0;
        }
    } tee;
    tee.a = file_log.rdbuf();
    tee.b = log ? log->rdbuf() : nullptr;
    std::ostream both(&tee);
    r.train = train_model(model, data, r.split, cfg, &both);
    save_trained_model(out / "model.ckpt", model, cfg, r.train);
    write_text(out / "split.txt", format_split(r.split));
    if (cfg.freq_trace) {
        std::string trace;
        for (const auto& e : r.train.epochs) trace += format_freq_trace(e) + "\n";
        write_text(out / "freq_trace.txt", trace);
    }
    return r;
}

}  // namespace freqseg
