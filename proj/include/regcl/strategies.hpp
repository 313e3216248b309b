#pragma once

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "regcl/mlp.hpp"
#include "regcl/pct.hpp"
#include "regcl/scenario.hpp"
#include "regcl/snapshot.hpp"

namespace regcl {

/// Per-experience state the engine hands to strategy hooks.
struct ExperienceContext {
    Scenario scenario = Scenario::dil;
    int k = 1;     // current experience id, 1-based
    int total = 1; // stream length K
    std::vector<int> seen_classes; // union through experience k
    const ModelSnapshot* prev_snapshot = nullptr; // f_{k-1}; null at k=1
    std::uint64_t strategy_seed = 0;
    std::uint64_t run_seed = 0; // master seed, recorded in snapshot metadata

    ClassMask mask(int output_dim) const {
        if (scenario == Scenario::dil) return ClassMask::all(output_dim);
        return ClassMask::of_classes(output_dim, seen_classes);
    }
};

/// Lifecycle contract shared by every continual-learning strategy. All hooks
/// default to the identity, so plain fine-tuning is the all-defaults case.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;

    virtual void on_experience_start(const MlpModel&, const Experience&,
                                     const ExperienceContext&) {}

    /// May extend the training set (replay, cumulative). Returns a copy.
    virtual Dataset augment_training_set(const Dataset& train) { return train; }

    /// Additional loss term with its flat parameter gradient; an empty
    /// gradient vector means "no contribution".
    virtual LossGrad extra_loss(const MlpModel&, std::span<const SparseSample>,
                                std::span<const std::size_t>, const ClassMask&) {
        return {0.0, {}};
    }

    /// In-place gradient transform, applied after all loss terms are summed.
    virtual void transform_gradient(const MlpModel&, const ClassMask&,
                                    std::vector<double>&, Rng&) {}

    /// Whether the engine must report (grad, delta-theta) after each step.
    virtual bool wants_step_deltas() const { return false; }
    virtual void after_step(std::span<const double> /*grad*/,
                            std::span<const double> /*delta*/) {}

    virtual void on_experience_end(const MlpModel&, const Dataset& /*train*/,
                                   const ExperienceContext&) {}
};

class NaiveStrategy final : public Strategy {
public:
    std::string name() const override { return "naive"; }
};

/// Upper-bound baseline: retrains on the union of all training sets so far.
class CumulativeStrategy final : public Strategy {
public:
    std::string name() const override { return "cumulative"; }

    Dataset augment_training_set(const Dataset& train) override {
        Dataset out;
        out.feature_dim = train.feature_dim;
        out.class_count = train.class_count;
        out.class_names = train.class_names;
        for (const auto& past : past_)
            for (const auto& s : past.samples) out.samples.push_back(s);
        for (const auto& s : train.samples) out.samples.push_back(s);
        return out;
    }

    void on_experience_end(const MlpModel&, const Dataset& train,
                           const ExperienceContext&) override {
        past_.push_back(train);
    }

private:
    std::vector<Dataset> past_; // in arrival order
};

// ---------------------------------------------------------------------------
// Replay buffer (shared by Replay and the episodic memory of A-GEM)

struct ReplayBuffer {
    std::size_t capacity = 200;
    std::vector<SparseSample> stored;
    std::vector<int> source_experience; // parallel to stored

    std::size_t size() const { return stored.size(); }
    bool empty() const { return stored.empty(); }
};

/// Appends up to capacity/K_total samples from the experience's training set,
/// drawn uniformly without replacement and stratified across the classes
/// present. Existing entries are never evicted.
inline void replay_update(ReplayBuffer& buffer, const Dataset& train, int experience_id,
                          int k_total, std::uint64_t seed) {
    if (k_total <= 0) throw config_error("replay: stream length must be positive");
    const std::size_t quota = buffer.capacity / static_cast<std::size_t>(k_total);
    if (quota == 0) return;

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < train.size(); ++i)
        by_class[train.samples[i].label].push_back(i);

    std::vector<std::size_t> chosen;
    if (quota >= train.size()) {
        chosen = all_indices(train.size());
    } else {
        // proportional allocation, largest remainder
        const double n = static_cast<double>(train.size());
        std::vector<std::pair<int, std::size_t>> alloc; // class -> count
        std::vector<std::pair<double, int>> remainders;
        std::size_t assigned = 0;
        for (const auto& [c, idx] : by_class) {
            const double share = static_cast<double>(quota) * static_cast<double>(idx.size()) / n;
            auto base = static_cast<std::size_t>(share);
            alloc.emplace_back(c, base);
            remainders.emplace_back(-(share - static_cast<double>(base)), c);
            assigned += base;
        }
        std::sort(remainders.begin(), remainders.end());
        for (const auto& [neg_rem, c] : remainders) {
            if (assigned >= quota) break;
            for (auto& [ac, count] : alloc)
                if (ac == c && count < by_class[c].size()) {
                    ++count;
                    ++assigned;
                    break;
                }
        }
        Rng rng = make_rng(seed);
        for (auto& [c, count] : alloc) {
            auto idx = by_class[c];
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t i = 0; i < count && i < idx.size(); ++i)
                chosen.push_back(idx[i]);
        }
        std::sort(chosen.begin(), chosen.end());
    }

    for (std::size_t i : chosen) {
        buffer.stored.push_back(train.samples[i]);
        buffer.source_experience.push_back(experience_id);
    }
}

class ReplayStrategy final : public Strategy {
public:
    explicit ReplayStrategy(std::size_t capacity) { buffer_.capacity = capacity; }

    std::string name() const override { return "replay"; }

    Dataset augment_training_set(const Dataset& train) override {
        Dataset out = train;
        for (const auto& s : buffer_.stored) out.samples.push_back(s);
        return out;
    }

    void on_experience_end(const MlpModel&, const Dataset& train,
                           const ExperienceContext& ctx) override {
        replay_update(buffer_, train, ctx.k, ctx.total,
                      derive_seed(ctx.strategy_seed, "replay"));
    }

    const ReplayBuffer& buffer() const { return buffer_; }

private:
    ReplayBuffer buffer_;
};

// ---------------------------------------------------------------------------
// A-GEM

/// Projects grad away from the half-space that conflicts with ref_grad:
/// returns grad unchanged when grad.ref >= 0, otherwise
/// grad - (grad.ref / ref.ref) * ref.
inline std::vector<double> agem_project(std::span<const double> grad,
                                        std::span<const double> ref_grad) {
    if (grad.size() != ref_grad.size())
        throw config_error("agem: gradient length mismatch");
    double dot = 0.0, ref_sq = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        dot += grad[i] * ref_grad[i];
        ref_sq += ref_grad[i] * ref_grad[i];
    }
    std::vector<double> out(grad.begin(), grad.end());
    if (ref_sq == 0.0 || dot >= 0.0) return out;
    const double scale = dot / ref_sq;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= scale * ref_grad[i];
    return out;
}

class AgemStrategy final : public Strategy {
public:
    AgemStrategy(std::size_t capacity, int ref_batch_size)
        : ref_batch_size_(ref_batch_size) {
        memory_.capacity = capacity;
    }

    std::string name() const override { return "agem"; }

    void transform_gradient(const MlpModel& model, const ClassMask& mask,
                            std::vector<double>& grad, Rng& rng) override {
        if (memory_.empty()) return;
        // fresh memory batch each step, reference gradient recomputed at the
        // current parameters
        const std::size_t want = std::min<std::size_t>(ref_batch_size_, memory_.size());
        auto idx = all_indices(memory_.size());
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(want);
        auto ref = ce_loss_and_grad(model, memory_.stored, idx, mask);
        grad = agem_project(grad, ref.grad);
    }

    void on_experience_end(const MlpModel&, const Dataset& train,
                           const ExperienceContext& ctx) override {
        replay_update(memory_, train, ctx.k, ctx.total,
                      derive_seed(ctx.strategy_seed, "agem-mem"));
    }

    const ReplayBuffer& memory() const { return memory_; }

private:
    ReplayBuffer memory_;
    std::size_t ref_batch_size_;
};

// ---------------------------------------------------------------------------
// EWC

struct EwcAnchor {
    std::vector<double> reference; // theta* after an experience
    std::vector<double> fisher;    // diagonal, >= 0
};

struct EwcState {
    std::vector<EwcAnchor> anchors; // one per completed experience
    double lambda = 0.001;
};

/// Empirical diagonal Fisher: mean squared gradient of the per-sample true
/// label log-likelihood, over up to sample_cap samples (evenly strided).
inline std::vector<double> ewc_fisher(const MlpModel& model, const Dataset& train,
                                      const ClassMask& mask, std::size_t sample_cap) {
    std::vector<double> fisher(model.parameter_count(), 0.0);
    if (train.empty()) return fisher;
    const std::size_t n = train.size();
    const std::size_t used = sample_cap == 0 ? n : std::min(n, sample_cap);
    for (std::size_t i = 0; i < used; ++i) {
        const std::size_t pick = i * n / used;
        const std::size_t one[] = {pick};
        // d log p(y|x) / d theta is the negated single-sample CE gradient;
        // squaring drops the sign
        auto lg = ce_loss_and_grad(model, train.samples, one, mask);
        for (std::size_t p = 0; p < fisher.size(); ++p) fisher[p] += lg.grad[p] * lg.grad[p];
    }
    for (auto& f : fisher) f /= static_cast<double>(used);
    return fisher;
}

/// loss = (lambda/2) * sum over anchors of F (theta - theta*)^2.
inline LossGrad ewc_penalty(const MlpModel& model, const EwcState& state) {
    LossGrad out;
    out.grad.assign(model.parameter_count(), 0.0);
    auto params = model.parameters();
    for (const auto& anchor : state.anchors) {
        if (anchor.reference.size() != params.size() || anchor.fisher.size() != params.size())
            throw config_error("ewc: anchor length does not match parameter count");
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double d = params[i] - anchor.reference[i];
            out.loss += 0.5 * state.lambda * anchor.fisher[i] * d * d;
            out.grad[i] += state.lambda * anchor.fisher[i] * d;
        }
    }
    return out;
}

class EwcStrategy final : public Strategy {
public:
    EwcStrategy(double lambda, std::size_t fisher_sample_cap)
        : fisher_cap_(fisher_sample_cap) {
        state_.lambda = lambda;
    }

    std::string name() const override { return "ewc"; }

    LossGrad extra_loss(const MlpModel& model, std::span<const SparseSample>,
                        std::span<const std::size_t>, const ClassMask&) override {
        if (state_.anchors.empty()) return {0.0, {}};
        return ewc_penalty(model, state_);
    }

    void on_experience_end(const MlpModel& model, const Dataset& train,
                           const ExperienceContext& ctx) override {
        EwcAnchor anchor;
        anchor.reference.assign(model.parameters().begin(), model.parameters().end());
        anchor.fisher = ewc_fisher(model, train, ctx.mask(model.output_dim()), fisher_cap_);
        state_.anchors.push_back(std::move(anchor));
    }

    const EwcState& state() const { return state_; }

private:
    EwcState state_;
    std::size_t fisher_cap_;
};

// ---------------------------------------------------------------------------
// Synaptic importance (path-integral) regularization

struct SiState {
    std::vector<double> omega;      // per-step path accumulator, current experience
    std::vector<double> importance; // consolidated, >= 0
    std::vector<double> reference;  // theta* at last consolidation
    double lambda = 0.001;
    double damping = 0.1; // epsilon

    void init(const MlpModel& model) {
        omega.assign(model.parameter_count(), 0.0);
        importance.assign(model.parameter_count(), 0.0);
        reference.assign(model.parameters().begin(), model.parameters().end());
    }
    bool initialized() const { return !reference.empty(); }
};

/// omega_i <- omega_i - g_i * dtheta_i (positive when the step descends).
inline void si_accumulate(SiState& state, std::span<const double> grad,
                          std::span<const double> delta_theta) {
    for (std::size_t i = 0; i < state.omega.size(); ++i)
        state.omega[i] -= grad[i] * delta_theta[i];
}

inline void si_consolidate(SiState& state, const MlpModel& model) {
    auto params = model.parameters();
    for (std::size_t i = 0; i < state.omega.size(); ++i) {
        const double moved = params[i] - state.reference[i];
        state.importance[i] += std::max(state.omega[i], 0.0) / (moved * moved + state.damping);
        state.reference[i] = params[i];
        state.omega[i] = 0.0;
    }
}

/// loss = lambda * sum Omega_i (theta_i - theta*_i)^2.
inline LossGrad si_penalty(const MlpModel& model, const SiState& state) {
    LossGrad out;
    out.grad.assign(model.parameter_count(), 0.0);
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double d = params[i] - state.reference[i];
        out.loss += state.lambda * state.importance[i] * d * d;
        out.grad[i] = 2.0 * state.lambda * state.importance[i] * d;
    }
    return out;
}

class SiStrategy final : public Strategy {
public:
    SiStrategy(double lambda, double damping) {
        state_.lambda = lambda;
        state_.damping = damping;
    }

    std::string name() const override { return "si"; }

    void on_experience_start(const MlpModel& model, const Experience&,
                             const ExperienceContext&) override {
        if (!state_.initialized()) state_.init(model);
    }

    LossGrad extra_loss(const MlpModel& model, std::span<const SparseSample>,
                        std::span<const std::size_t>, const ClassMask&) override {
        return si_penalty(model, state_);
    }

    bool wants_step_deltas() const override { return true; }

    void after_step(std::span<const double> grad, std::span<const double> delta) override {
        si_accumulate(state_, grad, delta);
    }

    void on_experience_end(const MlpModel& model, const Dataset&,
                           const ExperienceContext&) override {
        si_consolidate(state_, model);
    }

    const SiState& state() const { return state_; }

private:
    SiState state_;
};

// ---------------------------------------------------------------------------
// Distillation of the previous model's outputs on current data

struct DistillResult {
    double loss = 0.0;
    std::vector<double> dlogits; // w.r.t. new logits
};

/// Cross-entropy between the old and new temperature-softened distributions
/// over the old model's classes, scaled by T^2.
inline DistillResult lwf_distill(std::span<const double> new_logits,
                                 std::span<const double> old_logits, double temperature,
                                 const ClassMask& old_class_mask) {
    if (new_logits.size() != old_logits.size())
        throw config_error("lwf: logit vectors differ in length");
    if (old_class_mask.size() != static_cast<int>(new_logits.size()))
        throw config_error("lwf: class mask does not match logits");
    const double t = temperature;
    std::vector<double> old_t(old_logits.size()), new_t(new_logits.size());
    for (std::size_t c = 0; c < old_logits.size(); ++c) {
        old_t[c] = old_logits[c] / t;
        new_t[c] = new_logits[c] / t;
    }
    auto q = masked_softmax(old_t, old_class_mask);
    auto p = masked_softmax(new_t, old_class_mask);

    DistillResult r;
    r.dlogits.assign(new_logits.size(), 0.0);
    for (std::size_t c = 0; c < new_logits.size(); ++c) {
        if (!old_class_mask.is_active(static_cast<int>(c))) continue;
        if (q[c] > 0.0) r.loss += t * t * q[c] * -std::log(p[c]);
        r.dlogits[c] = t * (p[c] - q[c]);
    }
    return r;
}

class LwfStrategy final : public Strategy {
public:
    LwfStrategy(double alpha, double temperature) : alpha_(alpha), temperature_(temperature) {}

    std::string name() const override { return "lwf"; }

    void on_experience_start(const MlpModel&, const Experience&,
                             const ExperienceContext& ctx) override {
        // distillation is disabled on the first experience: no old model yet
        if (ctx.prev_snapshot)
            snapshot_.emplace(*ctx.prev_snapshot);
        else
            snapshot_.reset();
    }

    LossGrad extra_loss(const MlpModel& model, std::span<const SparseSample> samples,
                        std::span<const std::size_t> batch, const ClassMask&) override {
        if (!snapshot_ || batch.empty()) return {0.0, {}};
        const ClassMask old_mask = snapshot_->mask();
        auto new_cache = forward_cache(model, samples, batch);
        auto old_cache = forward_cache(snapshot_->model(), samples, batch);

        const double scale = alpha_ / static_cast<double>(batch.size());
        LogitMatrix dlogits;
        dlogits.rows = batch.size();
        dlogits.cols = model.output_dim();
        dlogits.v.assign(dlogits.rows * dlogits.cols, 0.0);

        double loss = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto d = lwf_distill(new_cache.logits.row(b), old_cache.logits.row(b),
                                 temperature_, old_mask);
            loss += d.loss;
            for (int c = 0; c < dlogits.cols; ++c) dlogits.at(b, c) = scale * d.dlogits[c];
        }
        loss *= scale;

        return {loss, backprop_from_dlogits(model, samples, batch, new_cache, dlogits)};
    }

private:
    double alpha_;
    double temperature_;
    std::optional<ModelSnapshot> snapshot_;
};

// ---------------------------------------------------------------------------
// Composition: "si+replay" etc. run all hooks of their parts

class CompositeStrategy final : public Strategy {
public:
    explicit CompositeStrategy(std::vector<std::unique_ptr<Strategy>> parts)
        : parts_(std::move(parts)) {}

    std::string name() const override {
        std::string n;
        for (const auto& p : parts_) {
            if (!n.empty()) n += '+';
            n += p->name();
        }
        return n;
    }

    void on_experience_start(const MlpModel& m, const Experience& e,
                             const ExperienceContext& ctx) override {
        for (auto& p : parts_) p->on_experience_start(m, e, ctx);
    }

    Dataset augment_training_set(const Dataset& train) override {
        Dataset out = train;
        for (auto& p : parts_) out = p->augment_training_set(out);
        return out;
    }

    LossGrad extra_loss(const MlpModel& m, std::span<const SparseSample> samples,
                        std::span<const std::size_t> batch, const ClassMask& mask) override {
        LossGrad total{0.0, {}};
        for (auto& p : parts_) {
            auto part = p->extra_loss(m, samples, batch, mask);
            total.loss += part.loss;
            if (part.grad.empty()) continue;
            if (total.grad.empty()) {
                total.grad = std::move(part.grad);
            } else {
                for (std::size_t i = 0; i < total.grad.size(); ++i)
                    total.grad[i] += part.grad[i];
            }
        }
        return total;
    }

    void transform_gradient(const MlpModel& m, const ClassMask& mask,
                            std::vector<double>& grad, Rng& rng) override {
        for (auto& p : parts_) p->transform_gradient(m, mask, grad, rng);
    }

    bool wants_step_deltas() const override {
        for (const auto& p : parts_)
            if (p->wants_step_deltas()) return true;
        return false;
    }

    void after_step(std::span<const double> grad, std::span<const double> delta) override {
        for (auto& p : parts_) p->after_step(grad, delta);
    }

    void on_experience_end(const MlpModel& m, const Dataset& train,
                           const ExperienceContext& ctx) override {
        for (auto& p : parts_) p->on_experience_end(m, train, ctx);
    }

private:
    std::vector<std::unique_ptr<Strategy>> parts_;
};

struct StrategyParams {
    std::size_t replay_capacity = 200;
    std::size_t agem_capacity = 200;
    int agem_ref_batch = 32;
    double ewc_lambda = 0.001;
    std::size_t ewc_fisher_cap = 1000;
    double si_lambda = 0.001;
    double si_damping = 0.1;
    double lwf_alpha = 1.0;
    double lwf_temperature = 1.0;
};

/// Builds a strategy from a '+'-separated name, e.g. "si+replay".
inline std::unique_ptr<Strategy> make_strategy(const std::string& spec,
                                               const StrategyParams& params) {
    std::vector<std::string> tokens;
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, '+'))
        if (!tok.empty()) tokens.push_back(tok);
    if (tokens.empty()) throw config_error("empty strategy name");

    std::vector<std::unique_ptr<Strategy>> parts;
    for (const auto& t : tokens) {
        for (const auto& other : parts)
            if (other->name() == t)
                throw config_error("strategy part repeated: " + t);
        if (t == "naive")
            parts.push_back(std::make_unique<NaiveStrategy>());
        else if (t == "cumulative")
            parts.push_back(std::make_unique<CumulativeStrategy>());
        else if (t == "replay")
            parts.push_back(std::make_unique<ReplayStrategy>(params.replay_capacity));
        else if (t == "agem")
            parts.push_back(std::make_unique<AgemStrategy>(params.agem_capacity,
                                                           params.agem_ref_batch));
        else if (t == "ewc")
            parts.push_back(std::make_unique<EwcStrategy>(params.ewc_lambda,
                                                          params.ewc_fisher_cap));
        else if (t == "si")
            parts.push_back(std::make_unique<SiStrategy>(params.si_lambda, params.si_damping));
        else if (t == "lwf")
            parts.push_back(std::make_unique<LwfStrategy>(params.lwf_alpha,
                                                          params.lwf_temperature));
        else
            throw config_error("unknown strategy: " + t);
    }
    if (tokens.size() > 1) {
        for (const auto& t : tokens)
            if (t == "naive" || t == "cumulative")
                throw config_error("strategy '" + t + "' cannot be combined");
        return std::make_unique<CompositeStrategy>(std::move(parts));
    }
    return std::move(parts.front());
}

} // namespace regcl
