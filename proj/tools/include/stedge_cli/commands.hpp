#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "stedge/eval.hpp"
#include "stedge/synth.hpp"
#include "stedge_cli/config.hpp"

namespace stedge::cli {

/// Initial labels and frozen upper-bound maps: labels/, upper_bound/, manifest.txt.
void cmd_bootstrap(const RunConfig& cfg);

/// Phase-one training: checkpoint.bin and stats.json.
void cmd_train(const RunConfig& cfg);

/// Full self-training loop: round_k/ artifacts plus the final checkpoint.bin and history.json.
selftrain::SelfTrainResult cmd_selftrain(const RunConfig& cfg);

/// Fused and per-block maps as PNGs: fused/<id>.png, block_<k>/<id>.png.
void cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& images,
               const std::filesystem::path& out_dir, int workers = 0);

enum class NmsMode { automatic, on, off };

struct EvalOptions {
    NmsMode nms = NmsMode::automatic;  // automatic: skip thinning for already-binary maps
    int thresholds = eval::kDefaultThresholds;
    double max_dist_frac = eval::kDefaultMaxDistFrac;
    std::optional<std::filesystem::path> curve_csv;
    int workers = 0;
};

/// Pairs prediction and ground-truth files by stem, writes the JSON report.
eval::MetricsReport cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const std::filesystem::path& out_json, const EvalOptions& options = {});

/// Synthetic corpus with exact boundaries: images/ and gt/.
void cmd_synth(const std::filesystem::path& out_dir, int count, std::uint64_t seed,
               const synth::SynthConfig& cfg = {});

}  // namespace stedge::cli
