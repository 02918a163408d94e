#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "stedge/io.hpp"
#include "stedge/model.hpp"
#include "stedge_cli/commands.hpp"
#include "support.hpp"

using namespace stedge;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(STEDGE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

cli::RunConfig tiny_run(const fs::path& dataset, const fs::path& out) {
    cli::RunConfig cfg;
    cfg.dataset_dir = dataset;
    cfg.output_dir = out;
    auto& t = cfg.train;
    t.backbone.num_blocks = 3;
    t.backbone.base_channels = 2;
    t.backbone.input_height = t.backbone.input_width = 32;
    t.loss.delta = {0.5, 0.5, 1.0};
    t.adam.learning_rate = 1e-3;
    t.batch_size = 2;
    t.epochs_phase1 = 1;
    t.epochs_per_round = 1;
    t.seed = 4;
    t.workers = 1;
    return cfg;
}

}  // namespace

TEST(Config, JsonRoundTripAndUnknownKeys) {
    cli::RunConfig cfg = tiny_run("data", "out");
    cfg.train.loss.mu = 0.0;
    cfg.train.labeling.canny_high = imgproc::CannyThresholds::from_255(100, 200);
    const cli::RunConfig back = cli::config_from_json(cli::config_to_json(cfg));
    EXPECT_EQ(cli::config_to_json(back), cli::config_to_json(cfg));
    EXPECT_EQ(back.train.loss.mu, 0.0);
    EXPECT_NEAR(back.train.labeling.canny_high.high, 200.0 / 255.0, 1e-15);

    nlohmann::json j = cli::config_to_json(cfg);
    j["learning_rat"] = 1.0;
    EXPECT_THROW(cli::config_from_json(j), cli::ConfigError);
}

TEST(Config, ValidationNamesTheField) {
    fixtures::TempDir dir("cfg");
    cli::RunConfig cfg = tiny_run(dir.path(), dir.path() / "out");
    EXPECT_NO_THROW(cfg.validate());
    cfg.dataset_dir = dir.path() / "missing";
    try {
        cfg.validate();
        FAIL();
    } catch (const cli::ConfigError& e) {
        EXPECT_EQ(e.field(), "dataset_dir");
    }
    cfg = tiny_run(dir.path(), dir.path() / "out");
    cfg.train.loss.delta = {1.0};
    EXPECT_THROW(cfg.validate(), cli::ConfigError);
}

TEST(Eval, PredictionsEqualToGroundTruthScoreOne) {
    fixtures::TempDir dir("eval");
    std::mt19937_64 rng(1);
    fs::create_directories(dir.path() / "pred");
    fs::create_directories(dir.path() / "gt");
    for (int i = 0; i < 3; ++i) {
        const BinaryEdgeMap m = fixtures::random_binary(rng, 24, 24, 0.1);
        io::write_png(dir.path() / "pred" / (std::to_string(i) + ".png"), m);
        io::write_png(dir.path() / "gt" / (std::to_string(i) + ".png"), m);
    }
    const eval::MetricsReport r = cli::cmd_eval(dir.path() / "pred", dir.path() / "gt", dir.path() / "r.json");
    EXPECT_EQ(r.ods, 1.0);
    EXPECT_EQ(r.ois, 1.0);
    EXPECT_NEAR(r.ap, 1.0, 1e-12);
    const auto j = nlohmann::json::parse(read_file(dir.path() / "r.json"));
    EXPECT_EQ(j["ods"].get<double>(), 1.0);
}

TEST(Synth, SameSeedSameCorpus) {
    fixtures::TempDir a("synth"), b("synth");
    synth::SynthConfig sc;
    sc.height = sc.width = 32;
    cli::cmd_synth(a.path(), 3, 7, sc);
    cli::cmd_synth(b.path(), 3, 7, sc);
    for (const auto& sub : {"images", "gt"}) {
        const auto files = io::list_images(a.path() / sub);
        ASSERT_EQ(files.size(), 3u);
        for (const auto& f : files) EXPECT_EQ(read_file(f), read_file(b.path() / sub / f.filename()));
    }
}

TEST(Selftrain, NoRoundsMatchesPhaseOneTraining) {
    fixtures::TempDir dir("run");
    synth::SynthConfig sc;
    sc.height = sc.width = 32;
    cli::cmd_synth(dir.path() / "corpus", 4, 2, sc);
    cli::RunConfig cfg = tiny_run(dir.path() / "corpus" / "images", dir.path() / "train");
    cli::cmd_train(cfg);
    cfg.output_dir = dir.path() / "self";
    cfg.train.max_rounds = 0;
    const auto result = cli::cmd_selftrain(cfg);
    EXPECT_EQ(result.history.size(), 1u);
    EXPECT_EQ(read_file(dir.path() / "train" / "checkpoint.bin"), read_file(dir.path() / "self" / "checkpoint.bin"));
    EXPECT_TRUE(fs::exists(dir.path() / "self" / "history.json"));
    EXPECT_TRUE(fs::exists(dir.path() / "self" / "config.json"));

    cli::cmd_infer(dir.path() / "self" / "checkpoint.bin", dir.path() / "corpus" / "images", dir.path() / "maps", 1);
    EXPECT_EQ(io::list_images(dir.path() / "maps" / "fused").size(), 4u);
    EXPECT_TRUE(fs::exists(dir.path() / "maps" / "block_1"));
}

TEST(Bootstrap, WritesLabelsInsideTheUpperBound) {
    fixtures::TempDir dir("boot");
    synth::SynthConfig sc;
    sc.height = sc.width = 48;
    cli::cmd_synth(dir.path() / "corpus", 3, 3, sc);
    cli::cmd_bootstrap(tiny_run(dir.path() / "corpus" / "images", dir.path() / "out"));
    const auto labels = io::list_images(dir.path() / "out" / "labels");
    ASSERT_EQ(labels.size(), 3u);
    for (const auto& f : labels) {
        EXPECT_TRUE(is_subset(io::read_binary_map(f),
                                       io::read_binary_map(dir.path() / "out" / "upper_bound" / f.filename())));
    }
}

TEST(Binary, ExitCodes) {
    fixtures::TempDir dir("exit");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("frobnicate"), 1);
    EXPECT_EQ(run_cli("eval --pred " + dir.path().string()), 1);
    std::ofstream(dir.path() / "bad.json") << R"({"epochs_phase1": -3})";
    EXPECT_EQ(run_cli("train --config " + (dir.path() / "bad.json").string() + " --dataset " + dir.path().string() +
                      " --out " + (dir.path() / "o").string()),
              1);
    std::ofstream(dir.path() / "unknown.json") << R"({"epochs": 3})";
    EXPECT_EQ(run_cli("train --config " + (dir.path() / "unknown.json").string()), 1);
    EXPECT_EQ(run_cli("synth --out " + (dir.path() / "s").string() + " -n 2 --size 32"), 0);
    EXPECT_EQ(run_cli("infer --checkpoint " + (dir.path() / "none.bin").string() + " --images " +
                      (dir.path() / "s" / "images").string() + " --out " + (dir.path() / "m").string()),
              2);
}
