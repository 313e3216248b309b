#include <catch2/catch_amalgamated.hpp>

#include "regcl/metrics.hpp"

using namespace regcl;

namespace {

EvalRecord record_from(int k, int j, const std::vector<int>& labels,
                       const std::vector<int>& new_preds,
                       const std::vector<int>* old_preds = nullptr) {
    return make_eval_record(k, j, labels, new_preds, old_preds);
}

EvalRecord record_with_nfr(int k, int j, double nfr, int n = 100) {
    // old model perfect, new model flips the first nfr*n samples
    std::vector<int> labels(n, 1), old_preds(n, 1), new_preds(n, 1);
    const int flips = static_cast<int>(nfr * n + 0.5);
    for (int i = 0; i < flips; ++i) new_preds[i] = 0;
    return make_eval_record(k, j, labels, new_preds, &old_preds);
}

} // namespace

TEST_CASE("classification metrics from counts") {
    ConfusionBinary c;
    c.tp = 9;
    c.fp = 1;
    c.fn = 3;
    auto m = classification_metrics(c);
    CHECK(m.precision == Catch::Approx(0.9));
    CHECK(m.recall == Catch::Approx(0.75));
    CHECK(m.f1 == Catch::Approx(2.0 * 0.675 / 1.65));
}

TEST_CASE("division-by-zero conventions resolve to 0") {
    ConfusionBinary none;
    auto m = classification_metrics(none);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.accuracy == 0.0);
}

TEST_CASE("perfect predictions score 1 everywhere") {
    ConfusionBinary c;
    c.tp = 10;
    c.tn = 90;
    auto m = classification_metrics(c);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.accuracy == 1.0);
}

TEST_CASE("flip rates: identical models never flip") {
    std::vector<int> labels = {0, 1, 0, 1};
    std::vector<int> preds = {0, 1, 1, 0};
    auto r = flip_rates(preds, preds, labels, kAllClasses);
    CHECK(*r.nfr == 0.0);
    CHECK(*r.pfr == 0.0);
}

TEST_CASE("flip rates: hand-enumerated example") {
    std::vector<int> labels = {1, 0, 1, 0};
    std::vector<int> old_preds = {1, 0, 1, 1};
    std::vector<int> new_preds = {1, 1, 0, 1};
    auto r = flip_rates(old_preds, new_preds, labels, kAllClasses);
    CHECK(*r.nfr == Catch::Approx(0.5)); // samples 2 and 3 regress
    CHECK(*r.pfr == 0.0);
}

TEST_CASE("swapping old and new exchanges NFR and PFR") {
    std::vector<int> labels = {1, 0, 1, 0, 1};
    std::vector<int> a = {1, 1, 0, 0, 1};
    std::vector<int> b = {0, 0, 1, 1, 1};
    auto fwd = flip_rates(a, b, labels, kAllClasses);
    auto rev = flip_rates(b, a, labels, kAllClasses);
    CHECK(*fwd.nfr == *rev.pfr);
    CHECK(*fwd.pfr == *rev.nfr);
}

TEST_CASE("per-class flip rates use per-class denominators; empty class is absent") {
    std::vector<int> labels = {1, 1, 0};
    std::vector<int> old_preds = {1, 1, 0};
    std::vector<int> new_preds = {0, 1, 0};
    auto mw = flip_rates(old_preds, new_preds, labels, 1);
    CHECK(*mw.nfr == Catch::Approx(0.5));
    auto missing = flip_rates(old_preds, new_preds, labels, 7);
    CHECK(!missing.nfr.has_value());
    CHECK(!missing.pfr.has_value());
}

TEST_CASE("backward aggregation: fixed label space averages j=1..k") {
    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(3, 1, 0.02));
    recs.push_back(record_with_nfr(3, 2, 0.04));
    recs.push_back(record_with_nfr(3, 3, 0.00));
    CHECK(backward_nfr(recs, Scenario::dil) == Catch::Approx(0.02));
}

TEST_CASE("backward aggregation: growing label space averages j=1..k-1") {
    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(2, 1, 0.10));
    CHECK(backward_nfr(recs, Scenario::cil) == Catch::Approx(0.10));

    // at k=3, j=3 records must be ignored even if present
    std::vector<EvalRecord> recs3;
    recs3.push_back(record_with_nfr(3, 1, 0.10));
    recs3.push_back(record_with_nfr(3, 2, 0.30));
    recs3.push_back(record_with_nfr(3, 3, 0.90));
    CHECK(backward_nfr(recs3, Scenario::cil) == Catch::Approx(0.20));
}

TEST_CASE("backward aggregation is undefined at the first update in CIL") {
    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(1, 1, 0.0));
    CHECK_THROWS_AS(backward_nfr(recs, Scenario::cil), std::logic_error);
}

TEST_CASE("all-zero per-experience rates average to zero") {
    std::vector<EvalRecord> recs;
    for (int j = 1; j <= 4; ++j) recs.push_back(record_with_nfr(4, j, 0.0));
    CHECK(backward_nfr(recs, Scenario::dil) == 0.0);
}

TEST_CASE("forward aggregation: boundary and interior cases") {
    std::vector<EvalRecord> boundary;
    boundary.push_back(record_with_nfr(4, 4, 0.07));
    CHECK(forward_nfr(boundary, Scenario::dil, 4) == Catch::Approx(0.07));

    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(2, 2, 0.03));
    recs.push_back(record_with_nfr(2, 3, 0.01));
    recs.push_back(record_with_nfr(2, 4, 0.02));
    CHECK(forward_nfr(recs, Scenario::dil, 4) == Catch::Approx(0.02));
}

TEST_CASE("forward mode is rejected for growing label spaces") {
    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(2, 2, 0.0));
    CHECK_THROWS_AS(forward_nfr(recs, Scenario::cil, 4), std::logic_error);
}

TEST_CASE("forgetting modes on a hand accuracy history") {
    AccuracyTable table(3);
    table.set(1, 1, 0.90);
    table.set(2, 1, 0.95);
    table.set(3, 1, 0.85);
    table.set(2, 2, 0.80);
    table.set(3, 2, 0.80);

    auto fmax = forgetting(table, 3, ForgettingMode::max);
    CHECK(fmax.per_j[1] == Catch::Approx(0.10)); // best 0.95 minus current 0.85
    auto fprev = forgetting(table, 3, ForgettingMode::prev);
    CHECK(fprev.per_j[1] == Catch::Approx(0.10));
    auto fself = forgetting(table, 3, ForgettingMode::self);
    CHECK(fself.per_j[1] == Catch::Approx(0.05)); // 0.90 - 0.85

    CHECK_THROWS_AS(forgetting(table, 1, ForgettingMode::max), std::logic_error);
}

TEST_CASE("monotone improvement yields non-positive forgetting") {
    AccuracyTable table(3);
    table.set(1, 1, 0.70);
    table.set(2, 1, 0.80);
    table.set(3, 1, 0.90);
    auto f = forgetting(table, 3, ForgettingMode::max);
    CHECK(f.per_j[1] <= 0.0); // negative forgetting is allowed
}

TEST_CASE("identity: accuracy drop equals NFR minus PFR exactly") {
    // the hand example: old accuracy 0.75, new accuracy 0.25
    std::vector<int> labels = {1, 0, 1, 0};
    std::vector<int> old_preds = {1, 0, 1, 1};
    std::vector<int> new_preds = {1, 1, 0, 1};
    auto rec = record_from(2, 1, labels, new_preds, &old_preds);
    CHECK(rec.old_accuracy == Catch::Approx(0.75));
    CHECK(rec.new_accuracy == Catch::Approx(0.25));
    CHECK(forgetting_identity_residual(rec) == 0.0);
}

TEST_CASE("identity residual vanishes for random prediction triples") {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> len(1, 97);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = len(rng);
        std::vector<int> labels(n), old_preds(n), new_preds(n);
        for (int i = 0; i < n; ++i) {
            labels[i] = coin(rng);
            old_preds[i] = coin(rng);
            new_preds[i] = coin(rng);
        }
        auto rec = record_from(2, 1, labels, new_preds, &old_preds);
        CHECK(std::abs(forgetting_identity_residual(rec)) <= 1e-12);
    }
}

TEST_CASE("comparing a model against itself is a fixed point of all flip metrics") {
    std::vector<int> labels = {0, 1, 1, 0, 1};
    std::vector<int> preds = {0, 1, 0, 1, 1};
    auto rec = record_from(2, 1, labels, preds, &preds);
    CHECK(rec.all.nf == 0);
    CHECK(rec.all.pf == 0);
    CHECK(forgetting_identity_residual(rec) == 0.0);
}

TEST_CASE("flip counts are bounded by old-correct and old-wrong counts") {
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> labels(50), old_preds(50), new_preds(50);
        for (int i = 0; i < 50; ++i) {
            labels[i] = coin(rng);
            old_preds[i] = coin(rng);
            new_preds[i] = coin(rng);
        }
        auto rec = record_from(2, 1, labels, new_preds, &old_preds);
        CHECK(rec.all.nf <= rec.all.old_correct);
        CHECK(rec.all.pf <= rec.n - rec.all.old_correct);
        for (const auto& [cls, stats] : rec.per_class) {
            CHECK(stats.nf <= stats.old_correct);
            CHECK(stats.pf <= stats.n - stats.old_correct);
        }
    }
}

TEST_CASE("seed aggregation: two-point mean and sample std") {
    MetricCurve a{{2}, {0.1}};
    MetricCurve b{{2}, {0.3}};
    std::vector<MetricCurve> curves = {a, b};
    auto agg = seed_aggregate(curves, false);
    CHECK(agg.mean[0] == Catch::Approx(0.2));
    CHECK(agg.stddev[0] == Catch::Approx(std::sqrt(0.02)).epsilon(1e-9));
    CHECK(agg.overall_mean == Catch::Approx(0.2));
    CHECK(!agg.single_seed);
}

TEST_CASE("single seed aggregates with zero std and a flag") {
    MetricCurve a{{1, 2}, {0.5, 0.7}};
    std::vector<MetricCurve> curves = {a};
    auto agg = seed_aggregate(curves, true);
    CHECK(agg.single_seed);
    CHECK(agg.stddev[0] == 0.0);
    CHECK(agg.stddev[1] == 0.0);
    CHECK(agg.overall_mean == Catch::Approx(0.6));
}

TEST_CASE("constant curves have zero std; worst follows the metric direction") {
    MetricCurve a{{1, 2, 3}, {0.4, 0.6, 0.5}};
    MetricCurve b{{1, 2, 3}, {0.4, 0.6, 0.5}};
    std::vector<MetricCurve> curves = {a, b};
    auto high = seed_aggregate(curves, true);
    CHECK(high.stddev == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(high.worst == Catch::Approx(0.4)); // min for higher-is-better
    auto low = seed_aggregate(curves, false);
    CHECK(low.worst == Catch::Approx(0.6)); // max for lower-is-better
}

TEST_CASE("mismatched curve grids are rejected") {
    MetricCurve a{{1, 2}, {0.5, 0.7}};
    MetricCurve b{{1, 3}, {0.5, 0.7}};
    std::vector<MetricCurve> curves = {a, b};
    CHECK_THROWS_AS(seed_aggregate(curves, true), data_error);
}

TEST_CASE("aggregates stay within the envelope of their terms") {
    std::vector<EvalRecord> recs;
    recs.push_back(record_with_nfr(3, 1, 0.10));
    recs.push_back(record_with_nfr(3, 2, 0.20));
    recs.push_back(record_with_nfr(3, 3, 0.60));
    const double v = backward_nfr(recs, Scenario::dil);
    CHECK(v >= 0.10);
    CHECK(v <= 0.60);
}
