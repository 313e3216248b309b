#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regcl/errors.hpp"
#include "regcl/scenario.hpp"

namespace regcl {

// ---------------------------------------------------------------------------
// Classification metrics (binary, positive class = malware)

struct ConfusionBinary {
    long long tp = 0, fp = 0, tn = 0, fn = 0;
    long long total() const { return tp + fp + tn + fn; }
};

struct ClassificationMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

/// Degenerate counts resolve to 0 (never NaN) so cross-seed averages stay defined.
inline ClassificationMetrics classification_metrics(const ConfusionBinary& c) {
    ClassificationMetrics m;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.accuracy = c.total() > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Flip counting

constexpr int kAllClasses = -1;

struct FlipRates {
    std::optional<double> nfr, pfr; // absent when the class subset is empty
    long long nf = 0, pf = 0, n = 0;
};

/// Counts prediction flips across an update, restricted to samples whose true
/// class is `cls` (kAllClasses keeps every sample).
inline FlipRates flip_rates(std::span<const int> old_preds, std::span<const int> new_preds,
                            std::span<const int> labels, int cls) {
    if (old_preds.size() != new_preds.size() || old_preds.size() != labels.size())
        throw data_error("flip_rates: prediction/label vectors differ in length");
    FlipRates r;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (cls != kAllClasses && labels[i] != cls) continue;
        ++r.n;
        const bool old_ok = old_preds[i] == labels[i];
        const bool new_ok = new_preds[i] == labels[i];
        if (old_ok && !new_ok) ++r.nf;
        if (!old_ok && new_ok) ++r.pf;
    }
    if (r.n > 0) {
        r.nfr = static_cast<double>(r.nf) / static_cast<double>(r.n);
        r.pfr = static_cast<double>(r.pf) / static_cast<double>(r.n);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Per-(update, test experience) evaluation record

struct ClassFlipStats {
    long long n = 0, nf = 0, pf = 0, old_correct = 0, new_correct = 0;
};

struct EvalRecord {
    int update_k = 0;
    int test_j = 0;
    long long n = 0;
    bool has_old = false; // old-model predictions exist for this pair

    ClassFlipStats all;                   // all-class counts
    std::map<int, ClassFlipStats> per_class; // keyed by true class
    ConfusionBinary confusion;            // new model, only meaningful for 2 classes

    double new_accuracy = 0.0;
    double old_accuracy = 0.0; // valid when has_old

    std::optional<double> nfr(int cls) const { return rate_(cls, true); }
    std::optional<double> pfr(int cls) const { return rate_(cls, false); }

private:
    std::optional<double> rate_(int cls, bool negative) const {
        if (!has_old) return std::nullopt;
        const ClassFlipStats* s = &all;
        if (cls != kAllClasses) {
            auto it = per_class.find(cls);
            if (it == per_class.end() || it->second.n == 0) return std::nullopt;
            s = &it->second;
        }
        if (s->n == 0) return std::nullopt;
        return static_cast<double>(negative ? s->nf : s->pf) / static_cast<double>(s->n);
    }
};

inline EvalRecord make_eval_record(int update_k, int test_j, std::span<const int> labels,
                                   std::span<const int> new_preds,
                                   const std::vector<int>* old_preds) {
    if (labels.size() != new_preds.size())
        throw data_error("eval record: label/prediction length mismatch");
    if (old_preds && old_preds->size() != labels.size())
        throw data_error("eval record: old prediction length mismatch");

    EvalRecord rec;
    rec.update_k = update_k;
    rec.test_j = test_j;
    rec.n = static_cast<long long>(labels.size());
    rec.has_old = old_preds != nullptr;

    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const bool new_ok = new_preds[i] == y;
        auto& pc = rec.per_class[y];
        ++pc.n;
        ++rec.all.n;
        if (new_ok) {
            ++pc.new_correct;
            ++rec.all.new_correct;
        }
        if (rec.has_old) {
            const bool old_ok = (*old_preds)[i] == y;
            if (old_ok) {
                ++pc.old_correct;
                ++rec.all.old_correct;
            }
            if (old_ok && !new_ok) {
                ++pc.nf;
                ++rec.all.nf;
            }
            if (!old_ok && new_ok) {
                ++pc.pf;
                ++rec.all.pf;
            }
        }
        // binary confusion with class 1 as the positive
        if (y == 1)
            new_preds[i] == 1 ? ++rec.confusion.tp : ++rec.confusion.fn;
        else
            new_preds[i] == 1 ? ++rec.confusion.fp : ++rec.confusion.tn;
    }
    if (rec.n > 0) {
        rec.new_accuracy = static_cast<double>(rec.all.new_correct) / static_cast<double>(rec.n);
        if (rec.has_old)
            rec.old_accuracy = static_cast<double>(rec.all.old_correct) / static_cast<double>(rec.n);
    }
    return rec;
}

/// Exact bookkeeping identity on one (update, experience) pair: the
/// previous-model accuracy drop equals NFR - PFR over the same test set.
/// Returns the residual, which must vanish to rounding (< 1e-12).
inline double forgetting_identity_residual(const EvalRecord& rec) {
    if (!rec.has_old || rec.n == 0)
        throw std::logic_error("identity check needs old-model predictions");
    const double n = static_cast<double>(rec.n);
    const double forgetting_prev = rec.old_accuracy - rec.new_accuracy;
    const double nfr = static_cast<double>(rec.all.nf) / n;
    const double pfr = static_cast<double>(rec.all.pf) / n;
    return forgetting_prev - (nfr - pfr);
}

// ---------------------------------------------------------------------------
// Backward / forward aggregation across test experiences

/// Mean all-class NFR over past experiences j = 1..k' where k' = k for the
/// fixed-label-space scenario and k' = k-1 for the growing one (evaluation is
/// restricted to classes both model versions know).
inline double backward_nfr(std::span<const EvalRecord> records_for_update, Scenario kind) {
    if (records_for_update.empty()) throw std::logic_error("backward_nfr: no records");
    const int k = records_for_update.front().update_k;
    const int k_prime = kind == Scenario::dil ? k : k - 1;
    if (k_prime < 1)
        throw std::logic_error("backward_nfr undefined before the second update");
    double sum = 0.0;
    int count = 0;
    for (const auto& rec : records_for_update) {
        if (rec.update_k != k) throw data_error("backward_nfr: mixed updates in record set");
        if (rec.test_j < 1 || rec.test_j > k_prime) continue;
        auto v = rec.nfr(kAllClasses);
        if (!v) throw data_error("backward_nfr: missing old-model predictions for j=" +
                                 std::to_string(rec.test_j));
        sum += *v;
        ++count;
    }
    if (count != k_prime)
        throw data_error("backward_nfr: expected records for j=1.." + std::to_string(k_prime));
    return sum / static_cast<double>(count);
}

/// Mean all-class NFR over current and future experiences j = k..K.
/// Only defined when the label space is fixed across the stream.
inline double forward_nfr(std::span<const EvalRecord> records_for_update, Scenario kind, int K) {
    if (kind == Scenario::cil)
        throw std::logic_error("forward mode is undefined for class-incremental streams");
    if (records_for_update.empty()) throw std::logic_error("forward_nfr: no records");
    const int k = records_for_update.front().update_k;
    double sum = 0.0;
    int count = 0;
    for (const auto& rec : records_for_update) {
        if (rec.update_k != k) throw data_error("forward_nfr: mixed updates in record set");
        if (rec.test_j < k || rec.test_j > K) continue;
        auto v = rec.nfr(kAllClasses);
        if (!v) throw data_error("forward_nfr: missing old-model predictions for j=" +
                                 std::to_string(rec.test_j));
        sum += *v;
        ++count;
    }
    if (count != K - k + 1)
        throw data_error("forward_nfr: expected records for j=" + std::to_string(k) + ".." +
                         std::to_string(K));
    return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Forgetting

enum class ForgettingMode { max, prev, self };

inline ForgettingMode forgetting_mode_from_string(const std::string& s) {
    if (s == "max") return ForgettingMode::max;
    if (s == "prev") return ForgettingMode::prev;
    if (s == "self") return ForgettingMode::self;
    throw config_error("unknown forgetting mode: " + s + " (expected max|prev|self)");
}

/// A[o][j]: accuracy of the model after update o on test experience j.
/// Entries may be missing (growing label spaces only evaluate j <= o).
class AccuracyTable {
public:
    explicit AccuracyTable(int total) : total_(total), a_(static_cast<std::size_t>(total) * total) {}

    void set(int o, int j, double accuracy) { a_[idx_(o, j)] = accuracy; }
    std::optional<double> get(int o, int j) const { return a_[idx_(o, j)]; }
    int total() const { return total_; }

private:
    std::size_t idx_(int o, int j) const {
        if (o < 1 || o > total_ || j < 1 || j > total_)
            throw std::logic_error("accuracy table index out of range");
        return static_cast<std::size_t>(o - 1) * total_ + (j - 1);
    }
    int total_;
    std::vector<std::optional<double>> a_;
};

struct ForgettingResult {
    std::map<int, double> per_j; // F_j^k for j < k
    double average = 0.0;
};

/// F_j^k compares the current accuracy on experience j against a reference:
/// the best previous update (max), the immediately preceding one (prev), or
/// the update that introduced j (self). Negative values mean improvement.
inline ForgettingResult forgetting(const AccuracyTable& table, int k, ForgettingMode mode) {
    if (k < 2) throw std::logic_error("forgetting undefined before the second update");
    ForgettingResult out;
    double sum = 0.0;
    for (int j = 1; j < k; ++j) {
        auto current = table.get(k, j);
        if (!current) continue;
        std::optional<double> ref;
        switch (mode) {
        case ForgettingMode::max:
            for (int o = 1; o < k; ++o)
                if (auto v = table.get(o, j)) ref = ref ? std::max(*ref, *v) : *v;
            break;
        case ForgettingMode::prev:
            ref = table.get(k - 1, j);
            break;
        case ForgettingMode::self:
            ref = table.get(j, j);
            break;
        }
        if (!ref) continue;
        out.per_j[j] = *ref - *current;
        sum += out.per_j[j];
    }
    if (!out.per_j.empty()) out.average = sum / static_cast<double>(out.per_j.size());
    return out;
}

// ---------------------------------------------------------------------------
// Cross-seed aggregation

struct MetricCurve {
    std::vector<int> updates;
    std::vector<double> values;
};

struct AggregateCurve {
    std::vector<int> updates;
    std::vector<double> mean;   // pointwise across seeds
    std::vector<double> stddev; // sample std (n-1); 0 for a single seed
    double overall_mean = 0.0;  // mean of per-seed curve means
    double overall_std = 0.0;   // sample std of per-seed curve means
    double worst = 0.0;         // direction-aware extreme of the mean curve
    bool single_seed = false;
};

inline AggregateCurve seed_aggregate(std::span<const MetricCurve> per_seed,
                                     bool higher_is_better) {
    if (per_seed.empty()) throw data_error("seed_aggregate: no curves");
    const auto& updates = per_seed.front().updates;
    for (const auto& c : per_seed)
        if (c.updates != updates || c.values.size() != updates.size())
            throw data_error("seed_aggregate: curves differ in length or update grid");

    AggregateCurve agg;
    agg.updates = updates;
    agg.single_seed = per_seed.size() == 1;
    const double n_seeds = static_cast<double>(per_seed.size());

    for (std::size_t i = 0; i < updates.size(); ++i) {
        double m = 0.0;
        for (const auto& c : per_seed) m += c.values[i];
        m /= n_seeds;
        double var = 0.0;
        if (per_seed.size() > 1) {
            for (const auto& c : per_seed) var += (c.values[i] - m) * (c.values[i] - m);
            var /= n_seeds - 1.0;
        }
        agg.mean.push_back(m);
        agg.stddev.push_back(std::sqrt(var));
    }

    std::vector<double> seed_means;
    for (const auto& c : per_seed) {
        double m = 0.0;
        for (double v : c.values) m += v;
        seed_means.push_back(c.values.empty() ? 0.0 : m / static_cast<double>(c.values.size()));
    }
    for (double m : seed_means) agg.overall_mean += m;
    agg.overall_mean /= n_seeds;
    if (per_seed.size() > 1) {
        double var = 0.0;
        for (double m : seed_means) var += (m - agg.overall_mean) * (m - agg.overall_mean);
        agg.overall_std = std::sqrt(var / (n_seeds - 1.0));
    }

    if (!agg.mean.empty()) {
        agg.worst = agg.mean.front();
        for (double v : agg.mean)
            agg.worst = higher_is_better ? std::min(agg.worst, v) : std::max(agg.worst, v);
    }
    return agg;
}

inline bool metric_higher_is_better(const std::string& metric) {
    return !(metric.rfind("nfr", 0) == 0 || metric == "forgetting");
}

} // namespace regcl
