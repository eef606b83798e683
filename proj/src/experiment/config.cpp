#include "freqseg/experiment/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace freqseg {

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"data.dir", "data", "dataset directory holding manifest.txt and the svol files", false},
        {"data.task", "phantom", "task name written to every record"},
        {"data.extents", "native", "resize target NXxNYxNZ, or native to keep file extents"},
        {"data.n_val", "6", "validation subjects"},
        {"data.n_test", "8", "test subjects"},
        {"data.split_seed", "0", "seed of the participant-level split"},
        {"phantom.count", "34", "subjects written by phantom-gen"},
        {"phantom.extents", "32x32x16", "phantom volume extents"},
        {"phantom.background_cutoff", "0.12", "low-pass cutoff of the background, relative to Nyquist"},
        {"phantom.background_amplitude", "0.2", "standard deviation of the background field"},
        {"phantom.structure_count", "5", "ellipsoids per subject"},
        {"phantom.radius_min", "1.5", "smallest ellipsoid semi-axis (voxels)"},
        {"phantom.radius_max", "3.0", "largest ellipsoid semi-axis (voxels)"},
        {"phantom.edge_sharpness", "8.0", "logistic edge slope per voxel"},
        {"phantom.structure_intensity", "1.0", "mean ellipsoid contrast"},
        {"phantom.noise_std", "0.01", "additive Gaussian noise"},
        {"phantom.num_labels", "1", "distinct structure labels"},
        {"phantom.seed", "0", "master seed; subject i uses a stream derived from (seed, i)"},
        {"model.mode", "none", "fusion topology: none, early or late"},
        {"model.theta", "0.5", "high-frequency block fraction per masked axis, in (0, 1)"},
        {"model.branch_channels", "8", "output channels of each frequency branch"},
        {"model.depth", "3", "U-Net levels below full resolution"},
        {"model.base_channels", "8", "U-Net channels at full resolution"},
        {"model.classes", "1", "foreground labels"},
        {"model.activation", "sigmoid", "sigmoid (one channel per label) or softmax (adds background)"},
        {"train.lr", "0.001", "Adam learning rate"},
        {"train.epochs", "200", "training epochs"},
        {"train.batch_size", "1", "subjects per step"},
        {"train.seed", "0", "initialisation, shuffling and subsampling seed"},
        {"train.fraction", "1.0", "share of the training subjects used, in (0, 1]"},
        {"train.freq_bands", "8", "radial bands of the frequency-error trace"},
        {"train.freq_trace", "false", "log per-band spectral error of the training predictions"},
        {"sweep.fractions", "0.075,0.15,0.3,0.5,1.0", "training fractions", false},
        {"sweep.modes", "none,early,late", "fusion topologies", false},
        {"sweep.seeds", "5", "seed replicates per cell", false},
        {"sweep.workers", "1", "cells trained concurrently", false},
        {"sweep.record_wall_time", "true", "write measured seconds to wall_s (false writes 0)", false},
        {"eval.bootstrap_replicates", "2000", "bootstrap resamples for the CIs", false},
        {"eval.bootstrap_seed", "0", "bootstrap seed", false},
    };
    return schema;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
    for (const auto& k : config_schema())
        if (k.name == name) return &k;
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

class Reader {
public:
    explicit Reader(const RawConfig& raw) : raw_(raw) {}

    const std::string& str(const std::string& key) const {
        if (auto it = raw_.find(key); it != raw_.end()) return it->second;
        return find_key(key)->default_value;
    }

    std::uint64_t u64(const std::string& key) const {
        const std::string& s = str(key);
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
        return v;
    }

    std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

    double real(const std::string& key) const { return parse_real(key, str(key)); }

    bool flag(const std::string& key) const {
        const std::string& s = str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError(key + ": expected true or false, got '" + s + "'");
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw ConfigError(key + ": empty list item");
            out.push_back(item);
        }
        if (out.empty()) throw ConfigError(key + ": empty list");
        return out;
    }

    static double parse_real(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
            throw ConfigError(key + ": expected a number, got '" + s + "'");
        return v;
    }

    Extents extents(const std::string& key) const { return parse_extents(key, str(key)); }

    static Extents parse_extents(const std::string& key, const std::string& s) {
        const auto bad = [&] {
            return ConfigError(key + ": expected NXxNYxNZ with extents >= 2, got '" + s + "'");
        };
        Extents e{};
        std::size_t begin = 0;
        for (int a = 0; a < 3; ++a) {
            const std::size_t end = a < 2 ? s.find('x', begin) : s.size();
            if (end == std::string::npos) throw bad();
            const auto [p, ec] = std::from_chars(s.data() + begin, s.data() + end, e[a]);
            if (ec != std::errc{} || p != s.data() + end || e[a] < 2) throw bad();
            begin = end + 1;
        }
        return e;
    }

private:
    const RawConfig& raw_;
};

std::string fmt_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Shortest representation that round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        char t[32];
        std::snprintf(t, sizeof t, "%.*g", prec, v);
        if (std::strtod(t, nullptr) == v) return t;
    }
    return buf;
}

std::string fmt_extents(const Extents& e) { return extents_to_string(e); }

}  // namespace

RawConfig parse_config(std::istream& is, const std::string& source) {
    RawConfig raw;
    std::string section, line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(config_schema().begin(), config_schema().end(),
                                           [&](const ConfigKey& k) {
                                               return k.name.rfind(section + ".", 0) == 0;
                                           });
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        if (section.empty()) throw ConfigError(where + "key outside of a section");
        const std::string name = section + "." + trim(line.substr(0, eq));
        if (!find_key(name)) throw ConfigError(where + "unknown key '" + name + "'");
        if (raw.count(name)) throw ConfigError(where + "duplicate key '" + name + "'");
        raw[name] = trim(line.substr(eq + 1));
    }
    return raw;
}

RawConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path.string());
    return parse_config(f, path.string());
}

void apply_override(RawConfig& raw, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not section.key=value");
    const std::string name = trim(assignment.substr(0, eq));
    if (!find_key(name)) throw ConfigError("unknown key '" + name + "'");
    raw[name] = trim(assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::defaults() { return from_raw({}); }

ExperimentConfig ExperimentConfig::from_raw(const RawConfig& raw) {
    for (const auto& [k, v] : raw)
        if (!find_key(k)) throw ConfigError("unknown key '" + k + "'");
    const Reader r(raw);
    ExperimentConfig c;
    c.data_dir = r.str("data.dir");
    c.task = r.str("data.task");
    if (c.task.empty() || c.task.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("data.task must be non-empty and free of commas, quotes and newlines");
    if (r.str("data.extents") != "native") c.target_extents = r.extents("data.extents");
    c.n_val = r.size("data.n_val");
    c.n_test = r.size("data.n_test");
    c.split_seed = r.u64("data.split_seed");

    c.phantom_count = r.size("phantom.count");
    c.phantom.extents = r.extents("phantom.extents");
    c.phantom.background_cutoff = r.real("phantom.background_cutoff");
    c.phantom.background_amplitude = r.real("phantom.background_amplitude");
    c.phantom.structure_count = r.size("phantom.structure_count");
    c.phantom.radius_min = r.real("phantom.radius_min");
    c.phantom.radius_max = r.real("phantom.radius_max");
    c.phantom.edge_sharpness = r.real("phantom.edge_sharpness");
    c.phantom.structure_intensity = r.real("phantom.structure_intensity");
    c.phantom.noise_std = r.real("phantom.noise_std");
    const std::size_t labels = r.size("phantom.num_labels");
    if (labels < 1 || labels > 254) throw ConfigError("phantom.num_labels must lie in [1, 254]");
    c.phantom.num_labels = static_cast<std::uint8_t>(labels);
    c.phantom.seed = r.u64("phantom.seed");

    try {
        c.model.fusion.mode = parse_fusion_mode(r.str("model.mode"));
        c.model.activation = parse_activation(r.str("model.activation"));
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
    c.model.fusion.theta = r.real("model.theta");
    c.model.fusion.branch_channels = r.size("model.branch_channels");
    c.model.depth = r.size("model.depth");
    c.model.base_channels = r.size("model.base_channels");
    c.model.foreground_classes = r.size("model.classes");

    c.lr = r.real("train.lr");
    c.epochs = r.size("train.epochs");
    c.batch_size = r.size("train.batch_size");
    c.seed = r.u64("train.seed");
    c.fraction = r.real("train.fraction");
    c.freq_bands = r.size("train.freq_bands");
    c.freq_trace = r.flag("train.freq_trace");

    for (const auto& f : r.list("sweep.fractions"))
        c.sweep_fractions.push_back(Reader::parse_real("sweep.fractions", f));
    for (const auto& m : r.list("sweep.modes")) {
        try {
            c.sweep_modes.push_back(parse_fusion_mode(m));
        } catch (const ValueError& e) {
            throw ConfigError(std::string("sweep.modes: ") + e.what());
        }
    }
    c.sweep_seeds = r.size("sweep.seeds");
    c.workers = r.size("sweep.workers");
    c.record_wall_time = r.flag("sweep.record_wall_time");

    c.bootstrap_replicates = r.size("eval.bootstrap_replicates");
    c.bootstrap_seed = r.u64("eval.bootstrap_seed");
    return c;
}

RawConfig ExperimentConfig::to_raw() const {
    RawConfig r;
    r["data.dir"] = data_dir;
    r["data.task"] = task;
    r["data.extents"] = target_extents ? fmt_extents(*target_extents) : "native";
    r["data.n_val"] = std::to_string(n_val);
    r["data.n_test"] = std::to_string(n_test);
    r["data.split_seed"] = std::to_string(split_seed);
    r["phantom.count"] = std::to_string(phantom_count);
    r["phantom.extents"] = fmt_extents(phantom.extents);
    r["phantom.background_cutoff"] = fmt_real(phantom.background_cutoff);
    r["phantom.background_amplitude"] = fmt_real(phantom.background_amplitude);
    r["phantom.structure_count"] = std::to_string(phantom.structure_count);
    r["phantom.radius_min"] = fmt_real(phantom.radius_min);
    r["phantom.radius_max"] = fmt_real(phantom.radius_max);
    r["phantom.edge_sharpness"] = fmt_real(phantom.edge_sharpness);
    r["phantom.structure_intensity"] = fmt_real(phantom.structure_intensity);
    r["phantom.noise_std"] = fmt_real(phantom.noise_std);
    r["phantom.num_labels"] = std::to_string(phantom.num_labels);
    r["phantom.seed"] = std::to_string(phantom.seed);
    r["model.mode"] = to_string(model.fusion.mode);
    r["model.theta"] = fmt_real(model.fusion.theta);
    r["model.branch_channels"] = std::to_string(model.fusion.branch_channels);
    r["model.depth"] = std::to_string(model.depth);
    r["model.base_channels"] = std::to_string(model.base_channels);
    r["model.classes"] = std::to_string(model.foreground_classes);
    r["model.activation"] = to_string(model.activation);
    r["train.lr"] = fmt_real(lr);
    r["train.epochs"] = std::to_string(epochs);
    r["train.batch_size"] = std::to_string(batch_size);
    r["train.seed"] = std::to_string(seed);
    r["train.fraction"] = fmt_real(fraction);
    r["train.freq_bands"] = std::to_string(freq_bands);
    r["train.freq_trace"] = freq_trace ? "true" : "false";
    std::string fr, md;
    for (double f : sweep_fractions) fr += (fr.empty() ? "" : ",") + fmt_real(f);
    for (FusionMode m : sweep_modes) md += (md.empty() ? "" : ",") + to_string(m);
    r["sweep.fractions"] = fr;
    r["sweep.modes"] = md;
    r["sweep.seeds"] = std::to_string(sweep_seeds);
    r["sweep.workers"] = std::to_string(workers);
    r["sweep.record_wall_time"] = record_wall_time ? "true" : "false";
    r["eval.bootstrap_replicates"] = std::to_string(bootstrap_replicates);
    r["eval.bootstrap_seed"] = std::to_string(bootstrap_seed);
    return r;
}

std::string ExperimentConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : to_raw()) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string ExperimentConfig::hash() const {
    std::string text;
    for (const auto& [k, v] : to_raw())
        if (find_key(k)->hashed) text += k + " = " + v + "\n";
    return hex64(fnv1a64(text));
}

void ExperimentConfig::validate() const {
    try {
        model.validate();
        phantom.validate();
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
    if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("train.fraction must lie in (0, 1]");
    if (freq_bands < 2) throw ConfigError("train.freq_bands must be >= 2");
    for (double f : sweep_fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep.fractions must lie in (0, 1]");
    if (sweep_seeds < 1) throw ConfigError("sweep.seeds must be >= 1");
    if (workers < 1) throw ConfigError("sweep.workers must be >= 1");
    if (n_val < 1 || n_test < 1) throw ConfigError("data.n_val and data.n_test must be >= 1");
    if (phantom_count < 1) throw ConfigError("phantom.count must be >= 1");
    if (bootstrap_replicates < 100) throw ConfigError("eval.bootstrap_replicates must be >= 100");
    if (task == "phantom" && phantom.num_labels != model.foreground_classes)
        throw ConfigError("model.classes (" + std::to_string(model.foreground_classes) +
                          ") must equal phantom.num_labels (" +
                          std::to_string(phantom.num_labels) + ") for the phantom task");
    const std::size_t m = model.backbone().required_multiple();
    const Extents e = target_extents.value_or(phantom.extents);
    if (target_extents || task == "phantom")
        for (int a = 0; a < 3; ++a)
            if (e[a] % m != 0)
                throw ConfigError("volume extent " + std::to_string(e[a]) + " on axis " +
                                  std::string(1, "xyz"[a]) + " is not a multiple of " +
                                  std::to_string(m) + " required by model.depth " +
                                  std::to_string(model.depth));
}

ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& path,
                                const std::vector<std::string>& overrides) {
    RawConfig raw = path ? load_config(*path) : RawConfig{};
    for (const auto& o : overrides) apply_override(raw, o);
    ExperimentConfig c = ExperimentConfig::from_raw(raw);
    c.validate();
    return c;
}

std::string config_reference() {
    std::ostringstream os;
    std::string section;
    for (const auto& k : config_schema()) {
        const std::string s = k.name.substr(0, k.name.find('.'));
        if (s != section) {
            os << "[" << s << "]\n";
            section = s;
        }
        os << "  " << k.name.substr(s.size() + 1) << " = " << k.default_value << "\n      "
           << k.help << (k.hashed ? "" : " (not hashed)") << "\n";
    }
    return os.str();
}

}  // namespace freqseg
