#pragma once

#include "regcl/mlp.hpp"
#include "regcl/pct.hpp"
#include "regcl/snapshot.hpp"
#include "regcl/strategies.hpp"

namespace regcl {

struct TrainSettings {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double momentum = 0.9;
};

/// Trains the model on one experience under a strategy and an optional
/// regression penalty, then freezes a snapshot.
///
/// Per step: total loss = CE + strategy extra loss (+ scaled regression
/// penalty when enabled); the summed gradient goes through the strategy's
/// gradient transform, one SGD step is taken, and the strategy sees the
/// (grad, delta) pair if it asked for step deltas.
inline ModelSnapshot run_experience(const TrainSettings& settings, Strategy& strategy,
                                    const PctConfig& pct, MlpModel& model,
                                    OptimizerState& opt, const Experience& experience,
                                    const ExperienceContext& ctx,
                                    std::uint64_t train_seed) {
    pct.validate();
    const bool pct_active = pct.enabled && ctx.k >= 2;
    if (pct_active && !ctx.prev_snapshot)
        throw config_error("regression penalty enabled but no previous snapshot available");

    const ClassMask mask = ctx.mask(model.output_dim());
    ClassMask old_mask = mask;
    if (pct_active) old_mask = ctx.prev_snapshot->mask();

    opt.learning_rate = settings.learning_rate;
    opt.momentum = settings.momentum;
    opt.reset(model); // momentum buffers start fresh at each experience

    strategy.on_experience_start(model, experience, ctx);
    const Dataset train_set = strategy.augment_training_set(experience.train);
    if (train_set.empty()) throw data_error("experience has an empty training set");

    Rng shuffle_rng = make_rng(derive_seed(train_seed, "shuffle"));
    Rng strategy_rng = make_rng(derive_seed(train_seed, "strategy-step"));
    const bool track_deltas = strategy.wants_step_deltas();

    auto order = all_indices(train_set.size());
    std::vector<double> theta_before;
    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(settings.batch_size)) {
            const std::size_t len =
                std::min<std::size_t>(settings.batch_size, order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);

            auto lg = ce_loss_and_grad(model, train_set.samples, batch, mask);

            auto extra = strategy.extra_loss(model, train_set.samples, batch, mask);
            if (!extra.grad.empty())
                for (std::size_t i = 0; i < lg.grad.size(); ++i) lg.grad[i] += extra.grad[i];

            if (pct_active) {
                auto pg = pct_loss(model, *ctx.prev_snapshot, train_set.samples, batch, pct,
                                   old_mask);
                for (std::size_t i = 0; i < lg.grad.size(); ++i) lg.grad[i] += pg.grad[i];
            }

            strategy.transform_gradient(model, mask, lg.grad, strategy_rng);

            if (track_deltas)
                theta_before.assign(model.parameters().begin(), model.parameters().end());
            sgd_step(model, opt, lg.grad);
            if (track_deltas) {
                auto params = model.parameters();
                for (std::size_t i = 0; i < theta_before.size(); ++i)
                    theta_before[i] = params[i] - theta_before[i];
                strategy.after_step(lg.grad, theta_before);
            }
        }
    }

    strategy.on_experience_end(model, experience.train, ctx);

    SnapshotMeta meta;
    meta.experience_id = ctx.k;
    meta.seed = static_cast<std::uint32_t>(ctx.run_seed);
    meta.scenario = ctx.scenario;
    meta.seen_classes = ctx.seen_classes;
    return {model, std::move(meta)};
}

} // namespace regcl
