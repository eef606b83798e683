#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "freqseg/data/volume.hpp"
#include "freqseg/experiment/config.hpp"
#include "freqseg/frequency/disentangle.hpp"

namespace freqseg {

inline constexpr const char* kManifestName = "manifest.txt";

/// "subj_0007" for i = 7.
std::string subject_id(std::size_t i);
std::filesystem::path volume_path(const std::filesystem::path& dir, const std::string& id);
std::filesystem::path mask_path(const std::filesystem::path& dir, const std::string& id);

/// One id per line after a '#' header line.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& ids);
std::vector<std::string> read_manifest(const std::filesystem::path& dir);

/// Writes cfg.phantom_count synthetic subjects plus the manifest. Subject i
/// is generated from the stream derive_seed(phantom.seed, i).
std::vector<std::string> generate_phantom_dataset(const ExperimentConfig& cfg,
                                                  const std::filesystem::path& dir);

struct Subject {
    std::string id;
    Volume image;  // resized and min-max normalised
    Mask mask;
};

/// Subjects of a dataset directory, preprocessed once. High/low pairs are
/// computed on first request and shared between threads.
class Dataset {
public:
    static Dataset load(const std::filesystem::path& dir, const std::optional<Extents>& target);

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Subject& subject(const std::string& id) const;
    const FreqPair& freq_pair(const std::string& id, double theta) const;
    Extents extents() const;
    std::uint8_t max_label() const;

    Dataset(Dataset&&) = default;

private:
    Dataset() = default;
    std::vector<std::string> ids_;
    std::map<std::string, Subject> subjects_;
    mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
    mutable std::map<std::pair<std::string, double>, std::unique_ptr<FreqPair>> pairs_;
};

}  // namespace freqseg
