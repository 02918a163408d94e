#include "stedge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stedge::losses {

void LossConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("LossConfig: lambda must be > 0");
    if (!(mu >= 0.0)) throw std::invalid_argument("LossConfig: mu must be >= 0");
    if (delta.empty()) throw std::invalid_argument("LossConfig: delta must not be empty");
    for (double d : delta) {
        if (!(d >= 0.0)) throw std::invalid_argument("LossConfig: delta entries must be >= 0");
    }
}

ClassWeights class_weights(const BinaryEdgeMap& label, double lambda) {
    const double positives = static_cast<double>(count_true(label));
    const double total = static_cast<double>(label.size());
    if (total == 0.0) return {};
    const double negatives = total - positives;
    return {lambda * positives / total, negatives / total};
}

MapLoss wce_block(const EdgeProbMap& pred, const BinaryEdgeMap& label, ClassWeights weights) {
    if (!pred.same_shape(label)) throw std::invalid_argument("wce_block: shape mismatch");
    MapLoss out{0.0, FloatMap(pred.height(), pred.width())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        const double clamped = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
        const bool inside = clamped == p;
        if (label[i]) {
            out.loss -= weights.beta * std::log(clamped);
            out.grad[i] = inside ? -weights.beta / p : 0.0;
        } else {
            out.loss -= weights.alpha * std::log(1.0 - clamped);
            out.grad[i] = inside ? weights.alpha / (1.0 - p) : 0.0;
        }
    }
    return out;
}

MultiLoss wce_multi_layer(std::span<const EdgeProbMap> preds, const BinaryEdgeMap& label, const LossConfig& cfg) {
    if (preds.size() != cfg.delta.size()) {
        throw std::invalid_argument("wce_multi_layer: " + std::to_string(preds.size()) + " maps but " +
                                    std::to_string(cfg.delta.size()) + " layer weights");
    }
    const ClassWeights weights = class_weights(label, cfg.lambda);
    MultiLoss out;
    out.grads.reserve(preds.size());
    for (std::size_t n = 0; n < preds.size(); ++n) {
        MapLoss block = wce_block(preds[n], label, weights);
        out.loss += cfg.delta[n] * block.loss;
        for (double& g : block.grad.raw()) g *= cfg.delta[n];
        out.grads.push_back(std::move(block.grad));
    }
    return out;
}

PairLoss mlc_block(const EdgeProbMap& pred, const EdgeProbMap& pred_perturbed) {
    if (!pred.same_shape(pred_perturbed)) throw std::invalid_argument("mlc_block: shape mismatch");
    PairLoss out{0.0, FloatMap(pred.height(), pred.width()), FloatMap(pred.height(), pred.width())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - pred_perturbed[i];
        out.loss += d * d;
        out.grad_first[i] = 2.0 * d;
        out.grad_second[i] = -2.0 * d;
    }
    return out;
}

MultiPairLoss mlc_multi_layer(std::span<const EdgeProbMap> preds, std::span<const EdgeProbMap> preds_perturbed,
                              const LossConfig& cfg) {
    if (preds.size() != cfg.delta.size() || preds_perturbed.size() != cfg.delta.size()) {
        throw std::invalid_argument("mlc_multi_layer: map count does not match layer weights");
    }
    MultiPairLoss out;
    for (std::size_t n = 0; n < preds.size(); ++n) {
        PairLoss block = mlc_block(preds[n], preds_perturbed[n]);
        out.loss += cfg.delta[n] * block.loss;
        for (double& g : block.grad_first.raw()) g *= cfg.delta[n];
        for (double& g : block.grad_second.raw()) g *= cfg.delta[n];
        out.grads_first.push_back(std::move(block.grad_first));
        out.grads_second.push_back(std::move(block.grad_second));
    }
    return out;
}

MultiPairLoss total_loss(std::span<const EdgeProbMap> preds, std::span<const EdgeProbMap> preds_perturbed,
                         const BinaryEdgeMap& label, const LossConfig& cfg) {
    MultiLoss wce = wce_multi_layer(preds, label, cfg);
    MultiPairLoss mlc = mlc_multi_layer(preds, preds_perturbed, cfg);
    MultiPairLoss out;
    out.loss = wce.loss + cfg.mu * mlc.loss;
    for (std::size_t n = 0; n < preds.size(); ++n) {
        FloatMap first = std::move(wce.grads[n]);
        FloatMap second = std::move(mlc.grads_second[n]);
        for (std::size_t i = 0; i < first.size(); ++i) {
            first[i] += cfg.mu * mlc.grads_first[n][i];
            second[i] *= cfg.mu;
        }
        out.grads_first.push_back(std::move(first));
        out.grads_second.push_back(std::move(second));
    }
    return out;
}

}  // namespace stedge::losses
