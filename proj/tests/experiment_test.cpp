#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "freqseg/experiment/sweep.hpp"
#include "freqseg/random.hpp"

namespace fs = std::filesystem;
using namespace freqseg;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("freqseg_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Small volumes and a narrow net so whole sweeps run in seconds.
ExperimentConfig tiny(const fs::path& dir, std::size_t count = 12) {
    return resolve_config(std::nullopt, {"data.dir=" + dir.string(), "phantom.extents=16x16x8",
                                         "phantom.count=" + std::to_string(count),
                                         "phantom.radius_min=1.5", "phantom.radius_max=2.5", "phantom.structure_count=2",
                                         "data.n_val=2", "data.n_test=3", "model.base_channels=4",
                                         "model.branch_channels=4", "train.epochs=2",
                                         "eval.bootstrap_replicates=100"});
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("defaults resolve and validate") {
        const ExperimentConfig c = resolve_config(std::nullopt);
        CHECK(c.epochs == 200);
        CHECK(c.batch_size == 1);
        CHECK(c.n_val == 6);
        CHECK(c.n_test == 8);
        CHECK(c.phantom_count == 34);
        CHECK(c.phantom.extents == Extents{32, 32, 16});
        CHECK(c.sweep_fractions == std::vector<double>{0.075, 0.15, 0.3, 0.5, 1.0});
        CHECK(c.sweep_modes.size() == 3);
        CHECK(c.sweep_seeds == 5);
        CHECK(c.hash().size() == 16);
    }

    TEST_CASE("file sections, comments and overrides") {
        std::istringstream is("# experiment\n[train]\nepochs = 7\n; note\nlr=0.01\n\n[model]\nmode = late\n");
        RawConfig raw = parse_config(is);
        CHECK(raw.at("train.epochs") == "7");
        apply_override(raw, "train.epochs=9");
        const ExperimentConfig c = ExperimentConfig::from_raw(raw);
        CHECK(c.epochs == 9);
        CHECK(c.lr == doctest::Approx(0.01));
        CHECK(c.model.fusion.mode == FusionMode::Late);
    }

    TEST_CASE("malformed input is rejected") {
        auto parse = [](const std::string& text) {
            std::istringstream is(text);
            return parse_config(is);
        };
        CHECK_THROWS_AS(parse("[train]\nepochz = 3\n"), ConfigError);
        CHECK_THROWS_AS(parse("[nope]\nx = 3\n"), ConfigError);
        CHECK_THROWS_AS(parse("[train]\nepochs = 3\nepochs = 4\n"), ConfigError);
        CHECK_THROWS_AS(parse("epochs = 3\n"), ConfigError);
        CHECK_THROWS_AS(parse("[train]\nepochs\n"), ConfigError);
        RawConfig raw;
        CHECK_THROWS_AS(apply_override(raw, "model.foo=1"), ConfigError);
        CHECK_THROWS_AS(apply_override(raw, "train.epochs"), ConfigError);
        CHECK_THROWS_AS(resolve_config(std::nullopt, {"train.epochs=ten"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(std::nullopt, {"model.theta=1.5"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(std::nullopt, {"model.mode=middle"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(std::nullopt, {"train.fraction=0"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(std::nullopt, {"phantom.extents=30x32x16"}), ConfigError);
    }

    TEST_CASE("hash covers what changes results and nothing else") {
        const std::string h = resolve_config(std::nullopt).hash();
        CHECK(resolve_config(std::nullopt).hash() == h);
        CHECK(resolve_config(std::nullopt, {"train.lr=0.002"}).hash() != h);
        CHECK(resolve_config(std::nullopt, {"model.mode=early"}).hash() != h);
        CHECK(resolve_config(std::nullopt, {"phantom.seed=3"}).hash() != h);
        CHECK(resolve_config(std::nullopt, {"data.dir=elsewhere"}).hash() == h);
        CHECK(resolve_config(std::nullopt, {"sweep.seeds=2", "sweep.workers=4"}).hash() == h);
        CHECK(resolve_config(std::nullopt, {"eval.bootstrap_replicates=500"}).hash() == h);
        CHECK(resolve_config(std::nullopt, {"train.lr=0.0010"}).hash() == h);
    }

    TEST_CASE("canonical text round-trips") {
        const ExperimentConfig c =
            resolve_config(std::nullopt, {"train.lr=0.0003", "model.mode=late", "data.extents=16x16x8",
                                          "sweep.fractions=0.2,1.0"});
        const ExperimentConfig back = ExperimentConfig::from_raw(c.to_raw());
        CHECK(back.canonical_text() == c.canonical_text());
        CHECK(back.hash() == c.hash());
        std::istringstream is(c.canonical_text());
        std::string line;
        std::size_t n = 0;
        while (std::getline(is, line)) ++n;
        CHECK(n == config_schema().size());
    }

    TEST_CASE("fnv1a64 reference values") {
        CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
        CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
        CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
    }
}

TEST_SUITE("sweep csv") {
    TEST_CASE("rows round-trip exactly") {
        Rng rng(11);
        std::vector<SweepRow> rows;
        for (int i = 0; i < 40; ++i) {
            SweepRow r;
            r.task = "phantom";
            r.fraction = rng.uniform();
            r.n_train = rng.index(50);
            r.mode = static_cast<FusionMode>(rng.index(3));
            r.seed = rng.next_u64();
            r.dice = {rng.uniform(), rng.uniform() * 1e-7, 1.0 / 3.0};
            r.hd95 = {rng.normal() * 1e6, std::ldexp(rng.uniform(), -40), 0.1};
            r.wall_s = i % 2 ? 0.0 : rng.uniform() * 100;
            r.config_hash = hex64(rng.next_u64());
            rows.push_back(r);
        }
        std::stringstream s;
        write_sweep_csv(s, rows);
        std::string header;
        std::getline(s, header);
        CHECK(header == kSweepCsvHeader);
        s.seekg(0);
        CHECK(read_sweep_csv(s) == rows);
    }

    TEST_CASE("bad rows are rejected") {
        CHECK_THROWS(parse_csv_row("phantom,0.2,4,none,0,0.5,0.4,0.6,3,2,4,0"));
        CHECK_THROWS(parse_csv_row("phantom,0.2,4,mixed,0,0.5,0.4,0.6,3,2,4,0,abcd"));
        CHECK_THROWS(parse_csv_row("phantom,x,4,none,0,0.5,0.4,0.6,3,2,4,0,abcd"));
        std::istringstream wrong_header("task,fraction\n");
        CHECK_THROWS(read_sweep_csv(wrong_header));
    }
}

TEST_SUITE("dataset") {
    TEST_CASE("phantom-gen is deterministic and writes the manifest") {
        TempDir a("gen_a"), b("gen_b");
        ExperimentConfig cfg = tiny(a.path, 5);
        const auto ids = generate_phantom_dataset(cfg, a.path);
        generate_phantom_dataset(cfg, b.path);
        CHECK(ids.size() == 5);
        CHECK(read_manifest(a.path) == ids);
        for (const auto& id : ids) {
            CHECK(slurp(volume_path(a.path, id)) == slurp(volume_path(b.path, id)));
            CHECK(slurp(mask_path(a.path, id)) == slurp(mask_path(b.path, id)));
        }
        cfg.phantom.seed = 1;
        TempDir c("gen_c");
        generate_phantom_dataset(cfg, c.path);
        CHECK(slurp(volume_path(a.path, ids[0])) != slurp(volume_path(c.path, ids[0])));
    }

    TEST_CASE("loaded subjects are normalised and resized") {
        TempDir d("load");
        const ExperimentConfig cfg = tiny(d.path, 3);
        generate_phantom_dataset(cfg, d.path);
        const Dataset data = Dataset::load(d.path, Extents{8, 8, 8});
        CHECK(data.ids().size() == 3);
        CHECK(data.extents() == Extents{8, 8, 8});
        for (const auto& id : data.ids()) {
            const Subject& s = data.subject(id);
            const auto [lo, hi] = std::minmax_element(s.image.data().begin(), s.image.data().end());
            CHECK(*lo == 0.0);
            CHECK(*hi == 1.0);
        }
        const FreqPair& p = data.freq_pair(data.ids()[0], 0.5);
        CHECK(&p == &data.freq_pair(data.ids()[0], 0.5));
        CHECK_THROWS(data.subject("subj_9999"));
    }
}

TEST_SUITE("trainer") {
    TEST_CASE("best validation epoch is restored") {
        TempDir d("best");
        ExperimentConfig cfg = tiny(d.path);
        cfg.epochs = 6;
        cfg.lr = 0.01;
        generate_phantom_dataset(cfg, d.path);
        const Dataset data = Dataset::load(d.path, cfg.target_extents);
        const SplitSpec split = base_split(cfg, data);
        SegmentationModel model(cfg.model, cfg.seed);
        const TrainResult r = train_model(model, data, split, cfg);
        REQUIRE(r.epochs.size() == 6);
        double best = -1.0;
        std::size_t best_epoch = 0;
        for (const auto& e : r.epochs)
            if (e.val_dice > best) best = e.val_dice, best_epoch = e.epoch;
        CHECK(r.best_epoch == best_epoch);
        CHECK(r.best_val_dice == best);
        const MetricReport val = evaluate_model(model, data, split.val, cfg);
        CHECK(val.dice.mean == doctest::Approx(r.best_val_dice).epsilon(1e-12));
    }

    TEST_CASE("frequency trace has one value per band") {
        TempDir d("trace");
        ExperimentConfig cfg = tiny(d.path);
        cfg.freq_trace = true;
        cfg.freq_bands = 4;
        generate_phantom_dataset(cfg, d.path);
        const Dataset data = Dataset::load(d.path, cfg.target_extents);
        SegmentationModel model(cfg.model, cfg.seed);
        const TrainResult r = train_model(model, data, base_split(cfg, data), cfg);
        for (const auto& e : r.epochs) {
            REQUIRE(e.freq_error.size() == 4);
            for (double x : e.freq_error) CHECK((x >= 0.0 && std::isfinite(x)));
        }
        CHECK(format_freq_trace(r.epochs[0]).starts_with("epoch=1 e0="));
    }
}

TEST_SUITE("sweep") {
    TEST_CASE("grid shape and paired splits") {
        TempDir d("sweep");
        ExperimentConfig cfg = tiny(d.path, 25);
        cfg.epochs = 1;
        cfg.sweep_seeds = 2;
        cfg.workers = 2;
        cfg.record_wall_time = false;
        generate_phantom_dataset(cfg, d.path);
        const Dataset data = Dataset::load(d.path, cfg.target_extents);
        const SweepResult r = run_sweep(cfg, data, d.path / "out");
        REQUIRE(r.failures() == 0);
        // 5 fractions x 3 modes per seed.
        CHECK(r.rows.size() == 15 * cfg.sweep_seeds);
        for (std::uint64_t s = 0; s < cfg.sweep_seeds; ++s) {
            std::size_t n = 0;
            for (const auto& row : r.rows) n += row.seed == replicate_seed(cfg, s);
            CHECK(n == 15);
        }
        std::set<std::vector<std::string>> vals, tests;
        for (const auto& c : r.cells) {
            vals.insert(c.split.val);
            tests.insert(c.split.test);
            CHECK(c.split.val == r.base_split.val);
            CHECK(c.split.train.size() == subsample_size(r.base_split.train.size(), c.fraction));
            for (const auto& o : r.cells)
                if (o.fraction == c.fraction && o.seed == c.seed) CHECK(o.split.train == c.split.train);
        }
        CHECK(vals.size() == 1);
        CHECK(tests.size() == 1);
        for (const auto& row : r.rows) {
            CHECK(row.wall_s == 0.0);
            CHECK(row.dice.low <= row.dice.mean);
            CHECK(row.dice.mean <= row.dice.high);
        }
        std::ifstream csv(d.path / "out" / "results.csv");
        CHECK(read_sweep_csv(csv) == r.rows);
        CHECK(fs::exists(d.path / "out" / "splits.txt"));
        CHECK(fs::exists(d.path / "out" / "results.txt"));
    }
}
