#pragma once

// Multi-layer weighted cross-entropy teaching and multi-layer L2 consistency.
// All losses are sums over pixels; gradients are w.r.t. the probability maps.

#include <span>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::losses {

struct LossConfig {
    double lambda = 1.1;
    std::vector<double> delta = {0.7, 0.7, 1.1, 1.1, 0.3, 0.3, 1.3};
    double mu = 1.0;

    void validate() const;
};

/// alpha weights the background class, beta the edge class.
struct ClassWeights {
    double alpha = 0.0;
    double beta = 0.0;
};

/// Predictions are clamped to [kProbEpsilon, 1 - kProbEpsilon] inside the logarithms.
inline constexpr double kProbEpsilon = 1e-7;

struct MapLoss {
    double loss = 0.0;
    FloatMap grad;
};

struct PairLoss {
    double loss = 0.0;
    FloatMap grad_first;
    FloatMap grad_second;
};

struct MultiLoss {
    double loss = 0.0;
    std::vector<FloatMap> grads;
};

struct MultiPairLoss {
    double loss = 0.0;
    std::vector<FloatMap> grads_first;
    std::vector<FloatMap> grads_second;
};

ClassWeights class_weights(const BinaryEdgeMap& label, double lambda);

MapLoss wce_block(const EdgeProbMap& pred, const BinaryEdgeMap& label, ClassWeights weights);

MultiLoss wce_multi_layer(std::span<const EdgeProbMap> preds, const BinaryEdgeMap& label, const LossConfig& cfg);

PairLoss mlc_block(const EdgeProbMap& pred, const EdgeProbMap& pred_perturbed);

MultiPairLoss mlc_multi_layer(std::span<const EdgeProbMap> preds, std::span<const EdgeProbMap> preds_perturbed,
                              const LossConfig& cfg);

/// L_wce on the clean predictions plus mu * L_mlc between clean and perturbed.
MultiPairLoss total_loss(std::span<const EdgeProbMap> preds, std::span<const EdgeProbMap> preds_perturbed,
                         const BinaryEdgeMap& label, const LossConfig& cfg);

}  // namespace stedge::losses
