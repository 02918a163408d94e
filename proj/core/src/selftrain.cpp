#include "stedge/selftrain.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "stedge/io.hpp"
#include "stedge/log.hpp"
#include "stedge/parallel.hpp"

namespace stedge::selftrain {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ItemResult {
    double loss = 0.0;
    std::vector<double> grads;
};

ItemResult item_gradient(const model::NetworkParams& params, const Image& image, const Image* perturbed,
                         const BinaryEdgeMap& label, const losses::LossConfig& loss_cfg) {
    model::ForwardCache clean_cache;
    const model::SideOutputs clean = model::forward(params, image, &clean_cache);
    ItemResult r;
    if (perturbed == nullptr) {
        losses::MultiLoss wce = losses::wce_multi_layer(clean.maps, label, loss_cfg);
        r.loss = wce.loss;
        r.grads = model::backward(params, clean_cache, wce.grads);
        return r;
    }
    model::ForwardCache pert_cache;
    const model::SideOutputs pert = model::forward(params, *perturbed, &pert_cache);
    losses::MultiPairLoss total = losses::total_loss(clean.maps, pert.maps, label, loss_cfg);
    r.loss = total.loss;
    r.grads = model::backward(params, clean_cache, total.grads_first);
    if (loss_cfg.mu != 0.0) {
        const std::vector<double> g2 = model::backward(params, pert_cache, total.grads_second);
        for (std::size_t i = 0; i < g2.size(); ++i) r.grads[i] += g2[i];
    }
    return r;
}

double mean_abs_difference(std::span<const EdgeProbMap> a, std::span<const EdgeProbMap> b) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t p = 0; p < a[i].size(); ++p) total += std::abs(a[i][p] - b[i][p]);
        n += a[i].size();
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

void TrainConfig::validate() const {
    backbone.validate();
    loss.validate();
    l0.validate();
    if (loss.delta.size() != static_cast<std::size_t>(backbone.num_blocks)) {
        throw std::invalid_argument("TrainConfig: loss.delta has " + std::to_string(loss.delta.size()) +
                                    " entries but backbone.num_blocks is " + std::to_string(backbone.num_blocks));
    }
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs_phase1 < 0 || epochs_per_round < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (max_rounds < 0) throw std::invalid_argument("TrainConfig: max_rounds must be >= 0");
    if (!(termination_pct >= 0.0)) throw std::invalid_argument("TrainConfig: termination_pct must be >= 0");
    if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    const auto& lab = labeling;
    if (lab.canny_low.low > lab.canny_low.high || lab.canny_high.low > lab.canny_high.high) {
        throw std::invalid_argument("TrainConfig: canny low threshold exceeds high threshold");
    }
}

std::size_t PseudoLabelStore::total_edges() const noexcept {
    std::size_t n = 0;
    for (const auto& l : labels) n += count_true(l);
    return n;
}

std::size_t PseudoLabelStore::upper_bound_edges() const noexcept {
    std::size_t n = 0;
    for (const auto& c : upper_bound) n += count_true(c);
    return n;
}

Image blur_for_canny(const Image& img, const LabelingConfig& cfg) {
    const Image blurred = imgproc::gaussian_blur(img, cfg.blur_kernel);
    return imgproc::bilateral_filter(blurred, cfg.bilateral_diameter, cfg.bilateral_sigma_color,
                                     cfg.bilateral_sigma_space);
}

PseudoLabelStore make_initial_labels(std::span<const Sample> samples, const LabelingConfig& cfg, int workers) {
    PseudoLabelStore store;
    store.ids.resize(samples.size());
    store.labels.resize(samples.size());
    store.upper_bound.resize(samples.size());
    parallel_for(samples.size(), workers, [&](std::size_t i) {
        const Image blurred = blur_for_canny(samples[i].image, cfg);
        const Image gray = imgproc::to_grayscale(blurred);
        const imgproc::GradientField g = imgproc::sobel(gray.channel(0));
        store.ids[i] = samples[i].id;
        store.labels[i] = imgproc::canny(g, cfg.canny_high);
        store.upper_bound[i] = imgproc::canny(g, cfg.canny_low);
    });
    return store;
}

std::vector<Sample> load_dataset(const fs::path& dir, const std::optional<fs::path>& manifest) {
    std::vector<fs::path> files;
    if (manifest) {
        std::ifstream is(*manifest);
        if (!is) throw std::runtime_error("cannot read manifest " + manifest->string());
        std::string line;
        while (std::getline(is, line)) {
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (line.empty() || line.front() == '#') continue;
            files.push_back(dir / line);
        }
    } else {
        files = io::list_images(dir);
    }
    std::vector<Sample> samples;
    samples.reserve(files.size());
    for (const fs::path& f : files) {
        try {
            samples.push_back({f.stem().string(), io::read_image(f)});
        } catch (const std::exception& e) {
            spdlog::warn("skipping unreadable image {}: {}", f.string(), e.what());
        }
    }
    return samples;
}

std::vector<Image> training_inputs(std::span<const Sample> samples, const model::BackboneConfig& backbone) {
    std::vector<Image> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        const Image img = model::match_channels(s.image, backbone.in_channels);
        out.push_back(imgproc::resize_bilinear(img, backbone.input_height, backbone.input_width));
    }
    return out;
}

std::vector<Image> perturbed_inputs(std::span<const Sample> samples, const TrainConfig& cfg) {
    std::vector<Image> out(samples.size());
    parallel_for(samples.size(), cfg.workers, [&](std::size_t i) {
        const Image pert = smoothing::perturb(model::match_channels(samples[i].image, cfg.backbone.in_channels), cfg.l0);
        out[i] = imgproc::resize_bilinear(pert, cfg.backbone.input_height, cfg.backbone.input_width);
    });
    return out;
}

std::vector<double> train_epochs(model::NetworkParams& params, std::span<const Image> images,
                                 std::span<const Image> perturbed, std::span<const BinaryEdgeMap> labels,
                                 const TrainConfig& cfg, int epochs, std::uint64_t epoch_salt) {
    if (images.size() != labels.size() || (!perturbed.empty() && perturbed.size() != images.size())) {
        throw std::invalid_argument("train_epochs: inconsistent corpus sizes");
    }
    std::vector<double> epoch_losses;
    if (images.empty() || epochs <= 0) return epoch_losses;

    // Labels at the training resolution.
    std::vector<BinaryEdgeMap> train_labels(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        train_labels[i] = imgproc::resize_nearest(labels[i], images[i].height(), images[i].width());
    }

    const std::size_t n = images.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    std::vector<std::size_t> order(n);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (epoch_salt + 1)) ^ static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            std::vector<ItemResult> results(count);
            parallel_for(count, cfg.workers, [&](std::size_t j) {
                const std::size_t idx = order[start + j];
                results[j] = item_gradient(params, images[idx], perturbed.empty() ? nullptr : &perturbed[idx],
                                           train_labels[idx], cfg.loss);
            });
            // Reduce in item order so the result does not depend on the worker count.
            std::vector<double> grads(params.parameter_count(), 0.0);
            for (const ItemResult& r : results) {
                if (!std::isfinite(r.loss)) {
                    throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch));
                }
                epoch_loss += r.loss;
                for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += r.grads[k];
            }
            for (double g : grads) {
                if (!std::isfinite(g)) throw TrainingDiverged("non-finite gradient at epoch " + std::to_string(epoch));
            }
            model::adam_step(params, grads, cfg.adam);
        }
        epoch_losses.push_back(epoch_loss / static_cast<double>(n));
        spdlog::debug("epoch {} mean loss {:.6f}", epoch, epoch_losses.back());
    }
    return epoch_losses;
}

model::NetworkParams phase_one_train(std::span<const Sample> samples, const PseudoLabelStore& store,
                                     const TrainConfig& cfg, std::vector<double>* epoch_losses) {
    cfg.validate();
    model::NetworkParams params = model::NetworkParams::initialize(cfg.backbone, cfg.seed);
    const std::vector<Image> inputs = training_inputs(samples, cfg.backbone);
    std::vector<double> losses = train_epochs(params, inputs, {}, store.labels, cfg, cfg.epochs_phase1, 0);
    if (epoch_losses != nullptr) *epoch_losses = std::move(losses);
    return params;
}

BinaryEdgeMap post_process(const EdgeProbMap& fused, const BinaryEdgeMap& upper_bound,
                           const imgproc::AdaptiveBinarizeParams& binarize, std::size_t min_size) {
    if (!fused.same_shape(upper_bound)) throw std::invalid_argument("post_process: shape mismatch");
    const BinaryEdgeMap binary = imgproc::adaptive_binarize(fused, binarize);
    return imgproc::connectivity_filter(imgproc::hadamard_mask(binary, upper_bound), min_size);
}

std::vector<EdgeProbMap> predict_fused(const model::NetworkParams& params, std::span<const Sample> samples,
                                       int workers) {
    std::vector<EdgeProbMap> out(samples.size());
    parallel_for(samples.size(), workers,
                 [&](std::size_t i) { out[i] = model::predict(params, samples[i].image).fused(); });
    return out;
}

RoundRecord run_round(RoundState& state, model::NetworkParams& params, std::span<const Sample> samples,
                      std::span<const Image> train_images, std::span<const Image> train_perturbed,
                      PseudoLabelStore& store, const TrainConfig& cfg, std::vector<EdgeProbMap>& previous_fused) {
    const auto start = Clock::now();
    RoundRecord record;
    record.round = state.round_index + 1;

    std::vector<EdgeProbMap> fused = predict_fused(params, samples, cfg.workers);
    std::vector<BinaryEdgeMap> next(samples.size());
    parallel_for(samples.size(), cfg.workers, [&](std::size_t i) {
        next[i] = post_process(fused[i], store.upper_bound[i], cfg.labeling.binarize, cfg.labeling.min_component);
    });
    store.labels = std::move(next);
    record.edge_count = store.total_edges();
    if (previous_fused.size() == fused.size()) record.fused_change = mean_abs_difference(fused, previous_fused);
    previous_fused = std::move(fused);

    record.epoch_losses = train_epochs(params, train_images, train_perturbed, store.labels, cfg,
                                       state.epochs_per_round, static_cast<std::uint64_t>(record.round));

    state.round_index = record.round;
    state.edge_counts.push_back(record.edge_count);
    record.wall_seconds = seconds_since(start);
    return record;
}

bool should_terminate(std::span<const std::size_t> edge_counts, double termination_pct) {
    if (edge_counts.size() < 2) throw std::invalid_argument("should_terminate: need at least two edge counts");
    const double current = static_cast<double>(edge_counts.back());
    const double previous = static_cast<double>(edge_counts[edge_counts.size() - 2]);
    if (current == 0.0) return true;
    return (current - previous) / current < termination_pct / 100.0;
}

bool should_terminate(const RoundState& state) {
    return should_terminate(state.edge_counts, state.termination_pct);
}

SelfTrainResult self_train(std::span<const Sample> samples, const TrainConfig& cfg, const RoundCallback& on_round) {
    cfg.validate();
    SelfTrainResult result;
    auto start = Clock::now();

    result.store = make_initial_labels(samples, cfg.labeling, cfg.workers);
    RoundRecord phase_one;
    phase_one.round = 0;
    phase_one.edge_count = result.store.total_edges();
    result.params = phase_one_train(samples, result.store, cfg, &phase_one.epoch_losses);
    result.phase_one_params = result.params;
    phase_one.wall_seconds = seconds_since(start);
    spdlog::info("phase one: {} initial edge pixels (upper bound {}), {} epochs", phase_one.edge_count,
                 result.store.upper_bound_edges(), phase_one.epoch_losses.size());
    result.history.push_back(phase_one);
    if (on_round) on_round(phase_one, result.params, result.store);

    result.state.round_index = 0;
    result.state.edge_counts = {phase_one.edge_count};
    result.state.epochs_per_round = cfg.epochs_per_round;
    result.state.termination_pct = cfg.termination_pct;
    if (cfg.max_rounds == 0) return result;

    const std::vector<Image> train_images = training_inputs(samples, cfg.backbone);
    const std::vector<Image> train_perturbed = perturbed_inputs(samples, cfg);
    std::vector<EdgeProbMap> previous_fused;
    for (int k = 0; k < cfg.max_rounds; ++k) {
        RoundRecord record = run_round(result.state, result.params, samples, train_images, train_perturbed,
                                       result.store, cfg, previous_fused);
        spdlog::info("round {}: N_edge={} fused change={:.5f} final loss={:.4f} ({:.1f}s)", record.round,
                     record.edge_count, record.fused_change,
                     record.epoch_losses.empty() ? 0.0 : record.epoch_losses.back(), record.wall_seconds);
        result.history.push_back(record);
        if (on_round) on_round(record, result.params, result.store);
        if (should_terminate(result.state)) {
            result.terminated_by_rule = true;
            break;
        }
    }
    return result;
}

void write_round_artifacts(const fs::path& run_dir, const RoundRecord& record, const model::NetworkParams& params,
                           const PseudoLabelStore& store) {
    const fs::path dir = run_dir / ("round_" + std::to_string(record.round));
    fs::create_directories(dir / "labels");
    for (std::size_t i = 0; i < store.size(); ++i) {
        io::write_png(dir / "labels" / (store.ids[i] + ".png"), store.labels[i]);
    }
    model::save_checkpoint(params, dir / "checkpoint.bin");
    nlohmann::json stats;
    stats["round"] = record.round;
    stats["n_edge"] = record.edge_count;
    stats["upper_bound_edges"] = store.upper_bound_edges();
    stats["loss_curve"] = record.epoch_losses;
    stats["fused_change"] = record.fused_change;
    stats["wall_time_s"] = record.wall_seconds;
    std::ofstream os(dir / "stats.json");
    os << stats.dump(2) << '\n';
}

}  // namespace stedge::selftrain
