#pragma once

// Reference multi-scale edge network: an encoder of (num_blocks - 1) stages,
// one deeply supervised side output per stage, and a fused output.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::model {

struct BackboneConfig {
    int num_blocks = 7;       // side outputs including the fused map
    int base_channels = 16;
    int in_channels = 3;
    int input_height = 400;   // training resize target
    int input_width = 400;

    int num_stages() const noexcept { return num_blocks - 1; }
    /// Channel width of stage `s`: base * 2^s, capped at 8 * base.
    int stage_channels(int s) const noexcept;
    /// Total downsampling factor; inputs must be divisible by it.
    int stride() const noexcept { return 1 << (num_stages() - 1); }
    void validate() const;

    bool operator==(const BackboneConfig&) const = default;
};

/// Location of one parameter tensor inside the flat parameter vector.
struct ParamSlot {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;

    bool operator==(const ParamSlot&) const = default;
};

/// Trainable weights plus Adam state, all stored flat in declaration order.
class NetworkParams {
public:
    NetworkParams() = default;
    explicit NetworkParams(const BackboneConfig& config);

    /// He-style fan-in initialization from a seeded generator.
    static NetworkParams initialize(const BackboneConfig& config, std::uint64_t seed);

    const BackboneConfig& config() const noexcept { return config_; }
    const std::vector<ParamSlot>& layout() const noexcept { return layout_; }
    const ParamSlot& slot(std::string_view name) const;

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& first_moment() noexcept { return m_; }
    const std::vector<double>& first_moment() const noexcept { return m_; }
    std::vector<double>& second_moment() noexcept { return v_; }
    const std::vector<double>& second_moment() const noexcept { return v_; }

    std::span<const double> tensor(std::string_view name) const;
    std::span<double> tensor(std::string_view name);

    std::uint64_t step() const noexcept { return step_; }
    void set_step(std::uint64_t step) noexcept { step_ = step; }
    std::size_t parameter_count() const noexcept { return values_.size(); }

    bool operator==(const NetworkParams&) const = default;

private:
    BackboneConfig config_;
    std::vector<ParamSlot> layout_;
    std::vector<double> values_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t step_ = 0;
};

/// Ordered side-output maps; the last entry is the fused map.
struct SideOutputs {
    std::vector<EdgeProbMap> maps;

    const EdgeProbMap& fused() const { return maps.back(); }
    std::size_t size() const noexcept { return maps.size(); }
};

/// Channel-major activation tensor.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
};

/// Intermediate activations retained for the reverse pass.
struct ForwardCache {
    struct Stage {
        Tensor input;
        Tensor pre_a, act_a;
        Tensor pre_b, act_b;
        FloatMap logit;  // head output upsampled to input size
    };
    std::vector<Stage> stages;
    FloatMap fused_logit;
    SideOutputs outputs;
};

/// Deterministic forward pass. Throws if the spatial size is not divisible by
/// the network stride or the channel count does not match.
SideOutputs forward(const NetworkParams& params, const Image& img, ForwardCache* cache = nullptr);

/// Reverse-mode gradient of sum_i <upstream_i, maps_i> w.r.t. all parameters.
std::vector<double> backward(const NetworkParams& params, const ForwardCache& cache,
                             std::span<const EdgeProbMap> upstream);

/// Runs forward internally, then backward.
std::vector<double> backward(const NetworkParams& params, const Image& img, std::span<const EdgeProbMap> upstream);

/// Inference at native resolution: replicate-pad to the stride, forward, crop back.
SideOutputs predict(const NetworkParams& params, const Image& img);

/// Replicate-pads to a multiple of the stride. Returns the input if already aligned.
Image pad_to_stride(const Image& img, int stride);

/// Converts 1-channel images to the configured channel count by replication.
Image match_channels(const Image& img, int channels);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam update; increments the step counter.
void adam_step(NetworkParams& params, std::span<const double> grads, const AdamConfig& config);

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace stedge::model
