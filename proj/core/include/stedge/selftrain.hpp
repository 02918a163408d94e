#pragma once

// Self-training loop: Canny bootstrapping, phase-one training, then rounds of
// predict -> post-process -> re-teach until the pseudo-label edge count settles.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stedge/image.hpp"
#include "stedge/imgproc.hpp"
#include "stedge/losses.hpp"
#include "stedge/model.hpp"
#include "stedge/smoothing.hpp"

namespace stedge::selftrain {

struct LabelingConfig {
    imgproc::CannyThresholds canny_high = imgproc::kCannyHigh;
    imgproc::CannyThresholds canny_low = imgproc::kCannyLow;
    int blur_kernel = 5;
    int bilateral_diameter = 15;
    double bilateral_sigma_color = 50.0 / 255.0;
    double bilateral_sigma_space = 50.0;
    imgproc::AdaptiveBinarizeParams binarize;
    std::size_t min_component = 30;
};

struct TrainConfig {
    model::BackboneConfig backbone;
    losses::LossConfig loss;
    model::AdamConfig adam;
    smoothing::L0Params l0;
    LabelingConfig labeling;
    int batch_size = 8;
    int epochs_phase1 = 5;
    int epochs_per_round = 2;
    double termination_pct = 2.0;
    int max_rounds = 10;
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
};

struct Sample {
    std::string id;
    Image image;
};

/// Current pseudo labels plus the frozen over-detected Canny map of every image.
struct PseudoLabelStore {
    std::vector<std::string> ids;
    std::vector<BinaryEdgeMap> labels;
    std::vector<BinaryEdgeMap> upper_bound;

    std::size_t size() const noexcept { return ids.size(); }
    std::size_t total_edges() const noexcept;
    std::size_t upper_bound_edges() const noexcept;
};

struct RoundState {
    int round_index = 0;
    std::vector<std::size_t> edge_counts;  // N_edge per round, starting with the initial labels
    std::filesystem::path checkpoint_path;
    int epochs_per_round = 2;
    double termination_pct = 2.0;
};

struct RoundRecord {
    int round = 0;
    std::size_t edge_count = 0;
    std::vector<double> epoch_losses;
    double fused_change = 0.0;  // mean |p_k - p_{k-1}| of fused maps vs the previous round
    double wall_seconds = 0.0;
};

struct SelfTrainResult {
    model::NetworkParams params;
    model::NetworkParams phase_one_params;
    PseudoLabelStore store;
    RoundState state;
    std::vector<RoundRecord> history;  // entry 0 is phase one
    bool terminated_by_rule = false;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gaussian blur followed by the bilateral filter used before every Canny call.
Image blur_for_canny(const Image& img, const LabelingConfig& cfg);

/// Round-0 labels (high-threshold Canny) and the frozen low-threshold upper bound.
PseudoLabelStore make_initial_labels(std::span<const Sample> samples, const LabelingConfig& cfg, int workers = 1);

/// Loads every image under `dir`, optionally restricted/ordered by a manifest
/// (one file name per line). Unreadable files are skipped with a warning.
std::vector<Sample> load_dataset(const std::filesystem::path& dir,
                                 const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Trains for `epochs` epochs. With `perturbed` the loss is L_wce + mu * L_mlc;
/// without it L_wce only. `epoch_salt` decorrelates shuffles across calls.
std::vector<double> train_epochs(model::NetworkParams& params, std::span<const Image> images,
                                 std::span<const Image> perturbed, std::span<const BinaryEdgeMap> labels,
                                 const TrainConfig& cfg, int epochs, std::uint64_t epoch_salt);

/// Phase one: seeded initialization, then L_wce-only training on the initial labels.
model::NetworkParams phase_one_train(std::span<const Sample> samples, const PseudoLabelStore& store,
                                     const TrainConfig& cfg, std::vector<double>* epoch_losses = nullptr);

/// adaptive_binarize(fused) AND upper_bound, then the connectivity filter.
BinaryEdgeMap post_process(const EdgeProbMap& fused, const BinaryEdgeMap& upper_bound,
                           const imgproc::AdaptiveBinarizeParams& binarize = {}, std::size_t min_size = 30);

/// Fused maps for every image at native resolution.
std::vector<EdgeProbMap> predict_fused(const model::NetworkParams& params, std::span<const Sample> samples,
                                       int workers = 1);

/// Inputs resized to the backbone's training size.
std::vector<Image> training_inputs(std::span<const Sample> samples, const model::BackboneConfig& backbone);

/// Perturbed counterparts X' (computed at native resolution, then resized).
std::vector<Image> perturbed_inputs(std::span<const Sample> samples, const TrainConfig& cfg);

/// One round: infer, post-process into new labels, record N_edge, train E epochs
/// with the combined loss. `previous_fused` (if non-empty) is used to measure
/// the change of the fused maps and is replaced by this round's maps.
RoundRecord run_round(RoundState& state, model::NetworkParams& params, std::span<const Sample> samples,
                      std::span<const Image> train_images, std::span<const Image> train_perturbed,
                      PseudoLabelStore& store, const TrainConfig& cfg, std::vector<EdgeProbMap>& previous_fused);

/// (N_k - N_{k-1}) / N_k < T / 100, and true when N_k = 0.
bool should_terminate(std::span<const std::size_t> edge_counts, double termination_pct);
bool should_terminate(const RoundState& state);

/// Optional per-round side effects (artifact writing).
using RoundCallback = std::function<void(const RoundRecord&, const model::NetworkParams&, const PseudoLabelStore&)>;

/// Phase one followed by rounds until the termination rule fires or max_rounds is reached.
SelfTrainResult self_train(std::span<const Sample> samples, const TrainConfig& cfg,
                           const RoundCallback& on_round = {});

/// Writes round_k/{labels/*.png, checkpoint.bin, stats.json} under `run_dir`.
void write_round_artifacts(const std::filesystem::path& run_dir, const RoundRecord& record,
                           const model::NetworkParams& params, const PseudoLabelStore& store);

}  // namespace stedge::selftrain
