#pragma once

#include <span>
#include <vector>

#include "regcl/mlp.hpp"
#include "regcl/snapshot.hpp"

namespace regcl {

/// Focal logit-matching regularizer against the previous model version:
/// old-correct samples get extra distillation weight, so decision regions
/// that already worked are the most expensive to move.
struct PctConfig {
    bool enabled = false;
    double alpha = 1.0;  // base weight on every sample
    double beta = 0.5;   // bonus on samples the old model got right
    double lambda = 1.0; // overall scale

    void validate() const {
        if (alpha < 0.0 || beta < 0.0 || lambda < 0.0)
            throw config_error("pct weights must be non-negative");
    }
};

struct FdLm {
    double loss = 0.0;
    std::vector<double> dlogits;
};

/// Squared logit distance: loss = 0.5*||new - old||^2, dlogits = new - old.
inline FdLm fd_lm(std::span<const double> new_logits, std::span<const double> old_logits) {
    if (new_logits.size() != old_logits.size())
        throw config_error("fd_lm: logit vectors differ in length");
    FdLm r;
    r.dlogits.resize(new_logits.size());
    for (std::size_t i = 0; i < new_logits.size(); ++i) {
        const double d = new_logits[i] - old_logits[i];
        r.dlogits[i] = d;
        r.loss += 0.5 * d * d;
    }
    return r;
}

inline double focal_weight(int old_prediction, int true_label, double alpha, double beta) {
    return old_prediction == true_label ? alpha + beta : alpha;
}

/// Batch-mean focal distillation of the current model against a frozen
/// snapshot, compared only on the classes the snapshot was trained over.
/// Returns the loss and its exact gradient in current parameters.
inline LossGrad pct_loss(const MlpModel& model, const ModelSnapshot& old_snapshot,
                         std::span<const SparseSample> samples,
                         std::span<const std::size_t> batch, const PctConfig& cfg,
                         const ClassMask& old_class_mask) {
    cfg.validate();
    if (old_snapshot.model().output_dim() != model.output_dim() ||
        old_snapshot.model().input_dim() != model.input_dim())
        throw config_error("pct: snapshot dimensions do not match the live model");
    if (old_class_mask.size() != model.output_dim())
        throw config_error("pct: old class mask does not match output dimension");
    if (batch.empty()) return {0.0, std::vector<double>(model.parameter_count(), 0.0)};

    const int o = model.output_dim();
    auto new_cache = forward_cache(model, samples, batch);
    auto old_cache = forward_cache(old_snapshot.model(), samples, batch);
    const ClassMask old_pred_mask = old_snapshot.mask();

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    LogitMatrix dlogits;
    dlogits.rows = batch.size();
    dlogits.cols = o;
    dlogits.v.assign(batch.size() * o, 0.0);

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const int y = samples[batch[b]].label;
        const int old_pred = argmax_active(old_cache.logits.row(b), old_pred_mask);
        const double w = focal_weight(old_pred, y, cfg.alpha, cfg.beta);
        for (int c = 0; c < o; ++c) {
            if (!old_class_mask.is_active(c)) continue;
            const double d = new_cache.logits.at(b, c) - old_cache.logits.at(b, c);
            loss += w * 0.5 * d * d;
            dlogits.at(b, c) = cfg.lambda * w * d * inv_b;
        }
    }
    loss *= cfg.lambda * inv_b;

    return {loss, backprop_from_dlogits(model, samples, batch, new_cache, dlogits)};
}

} // namespace regcl
