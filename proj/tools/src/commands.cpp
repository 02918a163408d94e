#include "stedge_cli/commands.hpp"

#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "stedge/io.hpp"
#include "stedge/model.hpp"
#include "stedge/parallel.hpp"

namespace stedge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<selftrain::Sample> load_samples(const RunConfig& cfg) {
    std::vector<selftrain::Sample> samples = selftrain::load_dataset(cfg.dataset_dir, cfg.manifest);
    if (samples.empty()) throw ConfigError("dataset_dir", "no readable images in " + cfg.dataset_dir.string());
    return samples;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

bool is_binary(const EdgeProbMap& m) {
    for (double v : m.values()) {
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

}  // namespace

void cmd_bootstrap(const RunConfig& cfg) {
    cfg.validate();
    echo_config(cfg);
    const auto samples = load_samples(cfg);
    const selftrain::PseudoLabelStore store =
        selftrain::make_initial_labels(samples, cfg.train.labeling, cfg.train.workers);
    fs::create_directories(cfg.output_dir / "labels");
    fs::create_directories(cfg.output_dir / "upper_bound");
    std::ofstream manifest(cfg.output_dir / "manifest.txt");
    for (std::size_t i = 0; i < store.size(); ++i) {
        const std::string name = store.ids[i] + ".png";
        io::write_png(cfg.output_dir / "labels" / name, store.labels[i]);
        io::write_png(cfg.output_dir / "upper_bound" / name, store.upper_bound[i]);
        manifest << name << '\n';
    }
    spdlog::info("bootstrap: {} images, {} label pixels, {} upper-bound pixels", store.size(), store.total_edges(),
                 store.upper_bound_edges());
}

void cmd_train(const RunConfig& cfg) {
    cfg.validate();
    echo_config(cfg);
    const auto samples = load_samples(cfg);
    const selftrain::PseudoLabelStore store =
        selftrain::make_initial_labels(samples, cfg.train.labeling, cfg.train.workers);
    std::vector<double> losses;
    const model::NetworkParams params = selftrain::phase_one_train(samples, store, cfg.train, &losses);
    model::save_checkpoint(params, cfg.output_dir / "checkpoint.bin");
    write_json(cfg.output_dir / "stats.json", {{"n_edge", store.total_edges()}, {"loss_curve", losses}});
}

selftrain::SelfTrainResult cmd_selftrain(const RunConfig& cfg) {
    cfg.validate();
    echo_config(cfg);
    const auto samples = load_samples(cfg);
    selftrain::SelfTrainResult result = selftrain::self_train(
        samples, cfg.train,
        [&](const selftrain::RoundRecord& record, const model::NetworkParams& params,
            const selftrain::PseudoLabelStore& store) {
            selftrain::write_round_artifacts(cfg.output_dir, record, params, store);
        });
    model::save_checkpoint(result.params, cfg.output_dir / "checkpoint.bin");
    json history = json::array();
    for (const auto& r : result.history) {
        history.push_back({{"round", r.round},
                           {"n_edge", r.edge_count},
                           {"loss_curve", r.epoch_losses},
                           {"fused_change", r.fused_change},
                           {"wall_time_s", r.wall_seconds}});
    }
    write_json(cfg.output_dir / "history.json",
               {{"rounds", history},
                {"upper_bound_edges", result.store.upper_bound_edges()},
                {"terminated_by_rule", result.terminated_by_rule}});
    return result;
}

void cmd_infer(const fs::path& checkpoint, const fs::path& images, const fs::path& out_dir, int workers) {
    const model::NetworkParams params = model::load_checkpoint(checkpoint);
    const std::vector<fs::path> files = io::list_images(images);
    if (files.empty()) throw ConfigError("images", "no images in " + images.string());
    const int blocks = params.config().num_blocks;
    fs::create_directories(out_dir / "fused");
    for (int b = 1; b < blocks; ++b) fs::create_directories(out_dir / ("block_" + std::to_string(b)));
    parallel_for(files.size(), workers, [&](std::size_t i) {
        const Image img = model::match_channels(io::read_image(files[i]), params.config().in_channels);
        const model::SideOutputs out = model::predict(params, img);
        const std::string name = files[i].stem().string() + ".png";
        io::write_png(out_dir / "fused" / name, out.fused());
        for (int b = 1; b < blocks; ++b) {
            io::write_png(out_dir / ("block_" + std::to_string(b)) / name, out.maps[b - 1]);
        }
    });
}

eval::MetricsReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_json,
                             const EvalOptions& options) {
    if (!fs::is_directory(pred_dir)) throw ConfigError("pred_dir", "not a directory: " + pred_dir.string());
    if (!fs::is_directory(gt_dir)) throw ConfigError("gt_dir", "not a directory: " + gt_dir.string());
    std::map<std::string, fs::path> gt_files;
    for (const fs::path& p : io::list_images(gt_dir)) gt_files[p.stem().string()] = p;

    std::vector<fs::path> pred_files;
    std::vector<fs::path> matched_gt;
    for (const fs::path& p : io::list_images(pred_dir)) {
        const auto it = gt_files.find(p.stem().string());
        if (it == gt_files.end()) {
            spdlog::warn("no ground truth for {}", p.string());
            continue;
        }
        pred_files.push_back(p);
        matched_gt.push_back(it->second);
    }
    if (pred_files.empty()) throw ConfigError("pred_dir", "no predictions with matching ground truth");

    std::vector<EdgeProbMap> probs(pred_files.size());
    std::vector<BinaryEdgeMap> gts(pred_files.size());
    parallel_for(pred_files.size(), options.workers, [&](std::size_t i) {
        probs[i] = io::read_prob_map(pred_files[i]);
        gts[i] = io::read_binary_map(matched_gt[i]);
    });
    bool thin = options.nms == NmsMode::on;
    if (options.nms == NmsMode::automatic) {
        thin = !std::all_of(probs.begin(), probs.end(), is_binary);
    }
    if (thin) {
        parallel_for(probs.size(), options.workers, [&](std::size_t i) { probs[i] = eval::nms_thin(probs[i]); });
    }
    const eval::MetricsReport report = eval::ods_ois_ap(probs, gts, options.thresholds, options.max_dist_frac);
    if (out_json.has_parent_path()) fs::create_directories(out_json.parent_path());
    std::ofstream os(out_json);
    if (!os) throw std::runtime_error("cannot write " + out_json.string());
    os << eval::report_to_json(report) << '\n';
    if (options.curve_csv) eval::write_curve_csv(report, *options.curve_csv);
    spdlog::info("eval: {} images, ODS={:.4f} OIS={:.4f} AP={:.4f}{}", probs.size(), report.ods, report.ois,
                 report.ap, thin ? "" : " (no thinning)");
    return report;
}

void cmd_synth(const fs::path& out_dir, int count, std::uint64_t seed, const synth::SynthConfig& cfg) {
    if (count < 0) throw ConfigError("count", "must be >= 0");
    if (cfg.height < 8 || cfg.width < 8) throw ConfigError("size", "must be at least 8 pixels");
    synth::write_corpus(out_dir, count, seed, cfg);
}

}  // namespace stedge::cli
