#include "freqseg/metrics/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "freqseg/error.hpp"

namespace freqseg {

MetricReport make_metric_report(std::vector<SubjectMetrics> subjects, std::size_t replicates,
                                std::uint64_t seed) {
    if (subjects.empty()) throw ValueError("metric report needs at least one test subject");
    MetricReport r;
    r.replicates = replicates;
    r.seed = seed;
    std::vector<double> dice, hd;
    for (const auto& s : subjects) {
        dice.push_back(s.dice);
        hd.push_back(s.hd95);
    }
    r.dice = bootstrap_ci(dice, replicates, seed);
    r.hd95 = bootstrap_ci(hd, replicates, seed);
    r.subjects = std::move(subjects);
    return r;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValueError("metric record: bad number for '" + key + "': '" + s + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValueError("metric record: bad integer for '" + key + "': '" + s + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void write_metric_record(std::ostream& os, const MetricReport& r) {
    os << "n_test = " << r.n_test() << '\n'
       << "bootstrap_replicates = " << r.replicates << '\n'
       << "bootstrap_seed = " << r.seed << '\n'
       << "dice_mean = " << num(r.dice.mean) << '\n'
       << "dice_lo = " << num(r.dice.low) << '\n'
       << "dice_hi = " << num(r.dice.high) << '\n'
       << "hd95_mean = " << num(r.hd95.mean) << '\n'
       << "hd95_lo = " << num(r.hd95.low) << '\n'
       << "hd95_hi = " << num(r.hd95.high) << '\n';
    for (const auto& s : r.subjects)
        os << "subject." << s.id << ".dice = " << num(s.dice) << '\n'
           << "subject." << s.id << ".hd95 = " << num(s.hd95) << '\n';
}

MetricReport read_metric_record(std::istream& is) {
    MetricReport r;
    std::size_t n_test = 0;
    std::map<std::string, std::size_t> slot;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValueError("metric record: no '=' in '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "n_test") n_test = parse_u64(key, value);
        else if (key == "bootstrap_replicates") r.replicates = parse_u64(key, value);
        else if (key == "bootstrap_seed") r.seed = parse_u64(key, value);
        else if (key == "dice_mean") r.dice.mean = parse_double(key, value);
        else if (key == "dice_lo") r.dice.low = parse_double(key, value);
        else if (key == "dice_hi") r.dice.high = parse_double(key, value);
        else if (key == "hd95_mean") r.hd95.mean = parse_double(key, value);
        else if (key == "hd95_lo") r.hd95.low = parse_double(key, value);
        else if (key == "hd95_hi") r.hd95.high = parse_double(key, value);
        else if (key.starts_with("subject.")) {
            const auto dot = key.rfind('.');
            const std::string id = key.substr(8, dot - 8);
            const std::string field = key.substr(dot + 1);
            if (id.empty() || dot < 8) throw ValueError("metric record: bad subject key '" + key + "'");
            auto [it, fresh] = slot.emplace(id, r.subjects.size());
            if (fresh) r.subjects.push_back({id, 0.0, 0.0});
            auto& s = r.subjects[it->second];
            if (field == "dice") s.dice = parse_double(key, value);
            else if (field == "hd95") s.hd95 = parse_double(key, value);
            else throw ValueError("metric record: unknown subject field '" + field + "'");
        } else {
            throw ValueError("metric record: unknown key '" + key + "'");
        }
    }
    if (n_test != r.subjects.size())
        throw ValueError("metric record: n_test = " + std::to_string(n_test) + " but " +
                         std::to_string(r.subjects.size()) + " subjects listed");
    return r;
}

std::string format_metric_table(const std::vector<MetricTableRow>& rows) {
    auto cell = [](const ConfidenceInterval& ci, double scale) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.2f [%.2f, %.2f]", ci.mean * scale, ci.low * scale,
                      ci.high * scale);
        return std::string(buf);
    };
    std::vector<std::array<std::string, 4>> cells;
    cells.push_back({"", "n_test", "Dice (%)", "95 Hausdorff"});
    for (const auto& row : rows)
        cells.push_back({row.label, std::to_string(row.report.n_test()),
                         cell(row.report.dice, 100.0), cell(row.report.hd95, 1.0)});
    std::array<std::size_t, 4> width{};
    for (const auto& c : cells)
        for (std::size_t k = 0; k < 4; ++k) width[k] = std::max(width[k], c[k].size());
    std::ostringstream os;
    for (const auto& c : cells) {
        for (std::size_t k = 0; k < 4; ++k) {
            os << c[k];
            if (k + 1 < 4) os << std::string(width[k] - c[k].size() + 2, ' ');
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace freqseg
