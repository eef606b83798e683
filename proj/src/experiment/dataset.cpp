#include "freqseg/experiment/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "freqseg/data/phantom.hpp"
#include "freqseg/data/preprocess.hpp"
#include "freqseg/data/svol.hpp"
#include "freqseg/random.hpp"

namespace fs = std::filesystem;

namespace freqseg {

std::string subject_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "subj_%04zu", i);
    return buf;
}

fs::path volume_path(const fs::path& dir, const std::string& id) { return dir / (id + ".vol.svol"); }
fs::path mask_path(const fs::path& dir, const std::string& id) { return dir / (id + ".mask.svol"); }

void write_manifest(const fs::path& dir, const std::vector<std::string>& ids) {
    std::ofstream f(dir / kManifestName, std::ios::trunc);
    if (!f) throw Error("cannot write " + (dir / kManifestName).string());
    f << "# freqseg manifest, " << ids.size() << " subjects\n";
    for (const auto& id : ids) f << id << '\n';
    if (!f) throw Error("write failed: " + (dir / kManifestName).string());
}

std::vector<std::string> read_manifest(const fs::path& dir) {
    std::ifstream f(dir / kManifestName);
    if (!f) throw Error("cannot open " + (dir / kManifestName).string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        ids.push_back(line);
    }
    if (ids.empty()) throw Error("manifest " + (dir / kManifestName).string() + " lists no subjects");
    return ids;
}

std::vector<std::string> generate_phantom_dataset(const ExperimentConfig& cfg, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < cfg.phantom_count; ++i) {
        PhantomSpec spec = cfg.phantom;
        spec.seed = derive_seed(cfg.phantom.seed, i);
        const auto [v, m] = generate_phantom(spec);
        const std::string id = subject_id(i);
        write_svol(volume_path(dir, id), v);
        write_svol(mask_path(dir, id), m);
        ids.push_back(id);
    }
    write_manifest(dir, ids);
    return ids;
}

Dataset Dataset::load(const fs::path& dir, const std::optional<Extents>& target) {
    Dataset d;
    d.ids_ = read_manifest(dir);
    for (const auto& id : d.ids_) {
        if (d.subjects_.count(id)) throw Error("manifest lists '" + id + "' twice");
        Volume v = read_svol_volume(volume_path(dir, id));
        Mask m = read_svol_mask(mask_path(dir, id));
        if (v.extents() != m.extents())
            throw ShapeError("subject " + id + ": volume " + extents_to_string(v.extents()) +
                             " vs mask " + extents_to_string(m.extents()));
        const Extents e = target.value_or(v.extents());
        d.subjects_.emplace(id, Subject{id, preprocess(v, e), resize(m, e)});
    }
    const Extents e = d.extents();
    for (const auto& [id, s] : d.subjects_)
        if (s.image.extents() != e)
            throw ShapeError("subject " + id + " has extents " + extents_to_string(s.image.extents()) +
                             ", expected " + extents_to_string(e) + "; set data.extents to resize");
    return d;
}

const Subject& Dataset::subject(const std::string& id) const {
    const auto it = subjects_.find(id);
    if (it == subjects_.end()) throw Error("unknown subject '" + id + "'");
    return it->second;
}

const FreqPair& Dataset::freq_pair(const std::string& id, double theta) const {
    const Subject& s = subject(id);
    std::lock_guard lock(*mutex_);
    auto& slot = pairs_[{id, theta}];
    if (!slot) slot = std::make_unique<FreqPair>(disentangle(s.image, theta));
    return *slot;
}

Extents Dataset::extents() const { return subject(ids_.front()).image.extents(); }

std::uint8_t Dataset::max_label() const {
    std::uint8_t m = 0;
    for (const auto& [id, s] : subjects_) m = std::max(m, s.mask.max_label());
    return m;
}

}  // namespace freqseg
