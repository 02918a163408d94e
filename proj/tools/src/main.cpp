// stedge: bootstrap, train, self-train, infer, evaluate, and synthesize corpora.

#include <CLI11.hpp>

#include <iostream>

#include "stedge/log.hpp"
#include "stedge/parallel.hpp"
#include "stedge_cli/commands.hpp"

namespace {

using namespace stedge;
namespace fs = std::filesystem;

struct Overrides {
    std::string config;
    std::string dataset;
    std::string out;
    std::string manifest;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> epochs;
    std::optional<int> phase1_epochs;
    std::optional<int> rounds;
    std::optional<double> termination_pct;
};

void add_run_flags(CLI::App* app, Overrides& o, bool rounds) {
    app->add_option("--config", o.config, "JSON run config");
    app->add_option("--dataset", o.dataset, "Directory of training images");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--manifest", o.manifest, "File list restricting and ordering the dataset");
    app->add_option("--seed", o.seed, "Random seed");
    app->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    app->add_option("--epochs", o.epochs, rounds ? "Epochs per round" : "Phase-one epochs");
    if (rounds) {
        app->add_option("--phase1-epochs", o.phase1_epochs, "Phase-one epochs");
        app->add_option("--rounds", o.rounds, "Maximum number of rounds");
        app->add_option("--termination-pct", o.termination_pct, "Edge-count growth (%) below which rounds stop");
    }
}

cli::RunConfig resolve(const Overrides& o, bool rounds) {
    cli::RunConfig cfg = o.config.empty() ? cli::RunConfig{} : cli::load_config(o.config);
    if (o.config.empty()) cfg.train.workers = 0;
    if (!o.dataset.empty()) cfg.dataset_dir = o.dataset;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.manifest.empty()) cfg.manifest = fs::path(o.manifest);
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.workers) cfg.train.workers = *o.workers;
    if (o.epochs) (rounds ? cfg.train.epochs_per_round : cfg.train.epochs_phase1) = *o.epochs;
    if (o.phase1_epochs) cfg.train.epochs_phase1 = *o.phase1_epochs;
    if (o.rounds) cfg.train.max_rounds = *o.rounds;
    if (o.termination_pct) cfg.train.termination_pct = *o.termination_pct;
    if (cfg.train.workers == 0) cfg.train.workers = default_workers();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Self-trained edge detection"};
    app.require_subcommand(1);

    Overrides bootstrap_o, train_o, selftrain_o;
    auto* bootstrap = app.add_subcommand("bootstrap", "Initial Canny pseudo labels and upper-bound maps");
    add_run_flags(bootstrap, bootstrap_o, false);
    auto* train = app.add_subcommand("train", "Phase-one training on the initial labels");
    add_run_flags(train, train_o, false);
    auto* selftrain_cmd = app.add_subcommand("selftrain", "Phase one followed by self-training rounds");
    add_run_flags(selftrain_cmd, selftrain_o, true);

    std::string ckpt, images, infer_out;
    int infer_workers = 0;
    auto* infer = app.add_subcommand("infer", "Write fused and per-block edge maps");
    infer->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
    infer->add_option("--images", images, "Directory of input images")->required();
    infer->add_option("--out", infer_out, "Output directory")->required();
    infer->add_option("--workers", infer_workers, "Worker threads (0 = all cores)");

    std::string pred_dir, gt_dir, eval_out, csv, nms = "auto";
    cli::EvalOptions eval_opts;
    auto* evaluate = app.add_subcommand("eval", "ODS/OIS/AP of prediction maps against ground truth");
    evaluate->add_option("--pred", pred_dir, "Directory of prediction PNGs")->required();
    evaluate->add_option("--gt", gt_dir, "Directory of ground-truth PNGs")->required();
    evaluate->add_option("--out", eval_out, "Report JSON path")->required();
    evaluate->add_option("--csv", csv, "Optional PR-curve CSV path");
    evaluate->add_option("--nms", nms, "Thinning: auto, on or off")->check(CLI::IsMember({"auto", "on", "off"}));
    evaluate->add_option("--thresholds", eval_opts.thresholds, "Number of thresholds");
    evaluate->add_option("--max-dist", eval_opts.max_dist_frac, "Match distance as a fraction of the diagonal");
    evaluate->add_option("--workers", eval_opts.workers, "Worker threads (0 = all cores)");

    std::string synth_out;
    int synth_count = 200;
    std::uint64_t synth_seed = 0;
    int synth_size = 128;
    synth::SynthConfig synth_cfg;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with exact boundaries");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("-n,--count", synth_count, "Number of images");
    synth_cmd->add_option("--seed", synth_seed, "Random seed");
    synth_cmd->add_option("--size", synth_size, "Image side length");
    synth_cmd->add_option("--noise", synth_cfg.noise_sigma, "Standard deviation of additive Gaussian noise");
    synth_cmd->add_option("--texture", synth_cfg.texture_amplitude, "Amplitude of the region texture");
    synth_cmd->add_option("--edge-blur", synth_cfg.max_edge_blur, "Largest per-shape boundary blur sigma");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*bootstrap) {
            cli::cmd_bootstrap(resolve(bootstrap_o, false));
        } else if (*train) {
            cli::cmd_train(resolve(train_o, false));
        } else if (*selftrain_cmd) {
            cli::cmd_selftrain(resolve(selftrain_o, true));
        } else if (*infer) {
            cli::cmd_infer(ckpt, images, infer_out, infer_workers);
        } else if (*evaluate) {
            eval_opts.nms = nms == "on" ? cli::NmsMode::on : nms == "off" ? cli::NmsMode::off : cli::NmsMode::automatic;
            if (!csv.empty()) eval_opts.curve_csv = fs::path(csv);
            cli::cmd_eval(pred_dir, gt_dir, eval_out, eval_opts);
        } else if (*synth_cmd) {
            synth_cfg.height = synth_cfg.width = synth_size;
            cli::cmd_synth(synth_out, synth_count, synth_seed, synth_cfg);
        }
    } catch (const cli::ConfigError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
