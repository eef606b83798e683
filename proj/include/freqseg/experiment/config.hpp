#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "freqseg/data/phantom.hpp"
#include "freqseg/error.hpp"
#include "freqseg/models/fusion.hpp"

namespace freqseg {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct ConfigKey {
    std::string name;  // "section.key"
    std::string default_value;
    std::string help;
    /// Part of the config hash. Keys that only steer where output goes,
    /// how it is scheduled or how it is summarised are not.
    bool hashed = true;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_schema();

/// "section.key" -> value, as written.
using RawConfig = std::map<std::string, std::string>;

/// INI-style text: "[section]" headers, "key = value" lines, '#' or ';'
/// comments. Unknown sections or keys and duplicates are errors.
RawConfig parse_config(std::istream& is, const std::string& source = "<config>");
RawConfig load_config(const std::filesystem::path& path);
/// Applies "section.key=value"; the key must exist in the schema.
void apply_override(RawConfig& raw, const std::string& assignment);

/// Fully resolved configuration for dataset generation, training,
/// evaluation and sweeps.
struct ExperimentConfig {
    std::string data_dir = "data";
    std::string task = "phantom";
    std::optional<Extents> target_extents;
    std::size_t n_val = 6;
    std::size_t n_test = 8;
    std::uint64_t split_seed = 0;

    PhantomSpec phantom;
    std::size_t phantom_count = 34;

    ModelConfig model;

    double lr = 1e-3;
    std::size_t epochs = 200;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    double fraction = 1.0;
    std::size_t freq_bands = 8;
    bool freq_trace = false;

    std::vector<double> sweep_fractions;
    std::vector<FusionMode> sweep_modes;
    std::size_t sweep_seeds = 5;
    std::size_t workers = 1;
    bool record_wall_time = true;

    std::size_t bootstrap_replicates = 2000;
    std::uint64_t bootstrap_seed = 0;

    static ExperimentConfig defaults();
    static ExperimentConfig from_raw(const RawConfig& raw);
    RawConfig to_raw() const;

    /// All keys, sorted, one "section.key = value" per line.
    std::string canonical_text() const;
    /// FNV-1a over the hashed keys of canonical_text, 16 hex digits.
    std::string hash() const;

    void validate() const;
};

/// Loads `path` when given, then applies overrides, then validates.
ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& path,
                                const std::vector<std::string>& overrides = {});

/// Key reference for --help.
std::string config_reference();

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t v);

}  // namespace freqseg
