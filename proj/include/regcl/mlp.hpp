#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "regcl/dataset.hpp"
#include "regcl/errors.hpp"
#include "regcl/rng.hpp"

namespace regcl {

/// Which output units take part in softmax/argmax. In the fixed-label-space
/// scenario all classes are active; in the growing-label-space scenario
/// exactly the classes seen so far are.
struct ClassMask {
    std::vector<char> active;

    static ClassMask all(int output_dim) {
        ClassMask m;
        m.active.assign(output_dim, 1);
        return m;
    }

    static ClassMask of_classes(int output_dim, std::span<const int> classes) {
        ClassMask m;
        m.active.assign(output_dim, 0);
        for (int c : classes) {
            if (c < 0 || c >= output_dim)
                throw config_error("class " + std::to_string(c) + " outside output layer of size " +
                                   std::to_string(output_dim));
            m.active[c] = 1;
        }
        m.check();
        return m;
    }

    int size() const { return static_cast<int>(active.size()); }
    bool is_active(int c) const { return active[c] != 0; }

    int active_count() const {
        int n = 0;
        for (char a : active) n += a != 0;
        return n;
    }

    void check() const {
        if (active_count() < 1) throw config_error("class mask must keep at least one class active");
    }
};

/// One-hidden-layer rectifier network over binary sparse inputs. Parameters
/// live in a single flat vector (w1 row-major, b1, w2 row-major, b2), so
/// flattening is the identity and optimizer/penalty code can treat the model
/// as one coordinate vector.
class MlpModel {
public:
    MlpModel(int input_dim, int hidden_dim, int output_dim)
        : input_dim_(input_dim), hidden_dim_(hidden_dim), output_dim_(output_dim) {
        if (input_dim <= 0 || hidden_dim <= 0 || output_dim <= 0)
            throw config_error("model dimensions must be positive");
        params_.assign(parameter_count(), 0.0);
    }

    /// Fan-based uniform init in +-sqrt(6/(fan_in+fan_out)) per layer, biases 0.
    static MlpModel init_random(int input_dim, int hidden_dim, int output_dim,
                                std::uint64_t seed) {
        MlpModel m(input_dim, hidden_dim, output_dim);
        Rng rng = make_rng(seed);
        const double lim1 = std::sqrt(6.0 / (input_dim + hidden_dim));
        std::uniform_real_distribution<double> d1(-lim1, lim1);
        for (std::size_t i = 0; i < m.b1_off_(); ++i) m.params_[i] = d1(rng);
        const double lim2 = std::sqrt(6.0 / (hidden_dim + output_dim));
        std::uniform_real_distribution<double> d2(-lim2, lim2);
        for (std::size_t i = m.w2_off_(); i < m.b2_off_(); ++i) m.params_[i] = d2(rng);
        return m;
    }

    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_dim_; }
    int output_dim() const { return output_dim_; }

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(hidden_dim_) * (input_dim_ + 1) +
               static_cast<std::size_t>(output_dim_) * (hidden_dim_ + 1);
    }

    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }

    void set_parameters(std::span<const double> flat) {
        if (flat.size() != params_.size())
            throw config_error("parameter vector length mismatch: expected " +
                               std::to_string(params_.size()) + ", got " +
                               std::to_string(flat.size()));
        std::copy(flat.begin(), flat.end(), params_.begin());
    }

    double w1(int j, int i) const { return params_[w1_idx_(j, i)]; }
    double& w1(int j, int i) { return params_[w1_idx_(j, i)]; }
    double b1(int j) const { return params_[b1_off_() + j]; }
    double& b1(int j) { return params_[b1_off_() + j]; }
    double w2(int c, int j) const { return params_[w2_idx_(c, j)]; }
    double& w2(int c, int j) { return params_[w2_idx_(c, j)]; }
    double b2(int c) const { return params_[b2_off_() + c]; }
    double& b2(int c) { return params_[b2_off_() + c]; }

    bool all_finite() const {
        for (double p : params_)
            if (!std::isfinite(p)) return false;
        return true;
    }

    // flat-layout offsets, shared with gradient code
    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return b1_off_(); }
    std::size_t w2_offset() const { return w2_off_(); }
    std::size_t b2_offset() const { return b2_off_(); }

private:
    std::size_t w1_idx_(int j, int i) const {
        return static_cast<std::size_t>(j) * input_dim_ + i;
    }
    std::size_t b1_off_() const { return static_cast<std::size_t>(hidden_dim_) * input_dim_; }
    std::size_t w2_off_() const { return b1_off_() + hidden_dim_; }
    std::size_t w2_idx_(int c, int j) const {
        return w2_off_() + static_cast<std::size_t>(c) * hidden_dim_ + j;
    }
    std::size_t b2_off_() const {
        return w2_off_() + static_cast<std::size_t>(output_dim_) * hidden_dim_;
    }

    int input_dim_, hidden_dim_, output_dim_;
    std::vector<double> params_;
};

inline std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

/// Row-major batch-by-output logits.
struct LogitMatrix {
    std::size_t rows = 0;
    int cols = 0;
    std::vector<double> v;

    double at(std::size_t r, int c) const { return v[r * cols + c]; }
    double& at(std::size_t r, int c) { return v[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, static_cast<std::size_t>(cols)}; }
    std::span<double> row(std::size_t r) { return {v.data() + r * cols, static_cast<std::size_t>(cols)}; }
};

/// Per-batch forward state kept for backpropagation. Logits are raw (no mask).
struct ForwardCache {
    std::size_t batch = 0;
    std::vector<double> hidden; // [batch x hidden], post-rectifier
    LogitMatrix logits;         // [batch x output]
};

inline ForwardCache forward_cache(const MlpModel& model,
                                  std::span<const SparseSample> samples,
                                  std::span<const std::size_t> batch) {
    const int h = model.hidden_dim();
    const int o = model.output_dim();
    ForwardCache cache;
    cache.batch = batch.size();
    cache.hidden.assign(batch.size() * h, 0.0);
    cache.logits.rows = batch.size();
    cache.logits.cols = o;
    cache.logits.v.assign(batch.size() * o, 0.0);

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const SparseSample& s = samples[batch[b]];
        double* hid = cache.hidden.data() + b * h;
        for (int j = 0; j < h; ++j) hid[j] = model.b1(j);
        for (std::uint32_t f : s.features) {
            if (f >= static_cast<std::uint32_t>(model.input_dim()))
                throw data_error("feature index " + std::to_string(f) +
                                 " out of range for input dimension " +
                                 std::to_string(model.input_dim()));
            for (int j = 0; j < h; ++j) hid[j] += model.w1(j, static_cast<int>(f));
        }
        for (int j = 0; j < h; ++j) hid[j] = hid[j] > 0.0 ? hid[j] : 0.0;
        for (int c = 0; c < o; ++c) {
            double z = model.b2(c);
            for (int j = 0; j < h; ++j) z += model.w2(c, j) * hid[j];
            cache.logits.at(b, c) = z;
        }
    }
    return cache;
}

constexpr double kMaskedLogit = -std::numeric_limits<double>::infinity();

/// Logits with masked-out classes forced to -inf, so they never win argmax
/// and take exactly zero softmax mass.
inline LogitMatrix forward_logits(const MlpModel& model,
                                  std::span<const SparseSample> samples,
                                  std::span<const std::size_t> batch,
                                  const ClassMask& mask) {
    if (mask.size() != model.output_dim())
        throw config_error("class mask size " + std::to_string(mask.size()) +
                           " does not match output dimension " +
                           std::to_string(model.output_dim()));
    mask.check();
    auto cache = forward_cache(model, samples, batch);
    for (std::size_t b = 0; b < cache.batch; ++b)
        for (int c = 0; c < model.output_dim(); ++c)
            if (!mask.is_active(c)) cache.logits.at(b, c) = kMaskedLogit;
    return std::move(cache.logits);
}

inline LogitMatrix forward_logits(const MlpModel& model,
                                  std::span<const SparseSample> samples,
                                  const ClassMask& mask) {
    auto idx = all_indices(samples.size());
    return forward_logits(model, samples, idx, mask);
}

/// Softmax restricted to active classes; inactive classes get exactly 0.
inline std::vector<double> masked_softmax(std::span<const double> logits, const ClassMask& mask) {
    std::vector<double> p(logits.size(), 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.size(); ++c)
        if (mask.is_active(static_cast<int>(c))) mx = std::max(mx, logits[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c)
        if (mask.is_active(static_cast<int>(c))) {
            p[c] = std::exp(logits[c] - mx);
            z += p[c];
        }
    for (std::size_t c = 0; c < logits.size(); ++c)
        if (mask.is_active(static_cast<int>(c))) p[c] /= z;
    return p;
}

/// Backpropagates per-sample logit gradients to a flat parameter gradient.
inline std::vector<double> backprop_from_dlogits(const MlpModel& model,
                                                 std::span<const SparseSample> samples,
                                                 std::span<const std::size_t> batch,
                                                 const ForwardCache& cache,
                                                 const LogitMatrix& dlogits) {
    const int h = model.hidden_dim();
    const int o = model.output_dim();
    std::vector<double> grad(model.parameter_count(), 0.0);
    double* gw1 = grad.data() + model.w1_offset();
    double* gb1 = grad.data() + model.b1_offset();
    double* gw2 = grad.data() + model.w2_offset();
    double* gb2 = grad.data() + model.b2_offset();

    std::vector<double> dhidden(h);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const SparseSample& s = samples[batch[b]];
        const double* hid = cache.hidden.data() + b * h;
        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (int c = 0; c < o; ++c) {
            const double dz = dlogits.at(b, c);
            if (dz == 0.0) continue;
            gb2[c] += dz;
            double* gw2row = gw2 + static_cast<std::size_t>(c) * h;
            for (int j = 0; j < h; ++j) {
                gw2row[j] += dz * hid[j];
                dhidden[j] += dz * model.w2(c, j);
            }
        }
        for (int j = 0; j < h; ++j) {
            if (hid[j] <= 0.0) continue; // rectifier gate
            const double dj = dhidden[j];
            gb1[j] += dj;
            double* gw1row = gw1 + static_cast<std::size_t>(j) * model.input_dim();
            for (std::uint32_t f : s.features) gw1row[f] += dj;
        }
    }
    return grad;
}

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean cross-entropy of the true class under the mask-restricted softmax,
/// with its exact analytic gradient over all parameters.
inline LossGrad ce_loss_and_grad(const MlpModel& model,
                                 std::span<const SparseSample> samples,
                                 std::span<const std::size_t> batch,
                                 const ClassMask& mask) {
    if (mask.size() != model.output_dim())
        throw config_error("class mask size does not match output dimension");
    mask.check();
    if (batch.empty()) return {0.0, std::vector<double>(model.parameter_count(), 0.0)};

    auto cache = forward_cache(model, samples, batch);
    const int o = model.output_dim();
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    LogitMatrix dlogits;
    dlogits.rows = batch.size();
    dlogits.cols = o;
    dlogits.v.assign(batch.size() * o, 0.0);

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const int y = samples[batch[b]].label;
        if (y < 0 || y >= o || !mask.is_active(y))
            throw data_error("label " + std::to_string(y) + " outside the active class mask");
        auto p = masked_softmax(cache.logits.row(b), mask);
        loss += -std::log(p[y]);
        for (int c = 0; c < o; ++c)
            if (mask.is_active(c))
                dlogits.at(b, c) = (p[c] - (c == y ? 1.0 : 0.0)) * inv_b;
    }
    loss *= inv_b;

    return {loss, backprop_from_dlogits(model, samples, batch, cache, dlogits)};
}

/// SGD with momentum: v <- momentum*v + g; theta <- theta - lr*v.
struct OptimizerState {
    std::vector<double> velocity;
    double learning_rate = 1e-3;
    double momentum = 0.9;

    void reset(const MlpModel& model) { velocity.assign(model.parameter_count(), 0.0); }
};

inline void sgd_step(MlpModel& model, OptimizerState& opt, std::span<const double> grad) {
    if (opt.velocity.size() != model.parameter_count())
        throw config_error("optimizer state does not match model parameter count");
    if (grad.size() != model.parameter_count())
        throw config_error("gradient length " + std::to_string(grad.size()) +
                           " does not match parameter count " +
                           std::to_string(model.parameter_count()));
    for (double g : grad)
        if (!std::isfinite(g)) throw numeric_error("non-finite gradient entry, step refused");

    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        opt.velocity[i] = opt.momentum * opt.velocity[i] + grad[i];
        params[i] -= opt.learning_rate * opt.velocity[i];
    }
}

/// Argmax over active logits; ties break toward the smallest class index.
inline int argmax_active(std::span<const double> logits, const ClassMask& mask) {
    int best = -1;
    double best_v = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        if (!mask.is_active(static_cast<int>(c))) continue;
        if (best < 0 || logits[c] > best_v) {
            best = static_cast<int>(c);
            best_v = logits[c];
        }
    }
    return best;
}

inline std::vector<int> predict(const MlpModel& model,
                                std::span<const SparseSample> samples,
                                std::span<const std::size_t> batch,
                                const ClassMask& mask) {
    auto logits = forward_logits(model, samples, batch, mask);
    std::vector<int> labels(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        labels[b] = argmax_active(logits.row(b), mask);
    return labels;
}

inline std::vector<int> predict(const MlpModel& model,
                                std::span<const SparseSample> samples,
                                const ClassMask& mask) {
    auto idx = all_indices(samples.size());
    return predict(model, samples, idx, mask);
}

} // namespace regcl
