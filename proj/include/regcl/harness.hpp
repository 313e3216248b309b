#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "regcl/config.hpp"
#include "regcl/engine.hpp"
#include "regcl/metrics.hpp"

namespace regcl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Stream assembly

struct BuiltStream {
    ScenarioStream stream;
    std::optional<FeatureFilter> filter;
};

inline void filter_stream(ScenarioStream& stream, const FeatureFilter& filter) {
    for (auto& e : stream.experiences) {
        e.train = apply_filter(filter, e.train);
        e.test = apply_filter(filter, e.test);
    }
}

inline BuiltStream build_stream(const RunConfig& cfg, std::uint64_t seed) {
    BuiltStream built;
    if (cfg.data_source == DataSource::synth) {
        if (cfg.scenario == Scenario::dil) {
            built.stream = make_stream(Scenario::dil,
                                       synth_dil_generate(cfg.synth, derive_seed(seed, "data")));
        } else {
            built.stream = make_stream(Scenario::cil,
                                       synth_cil_generate(cfg.synth, derive_seed(seed, "data"),
                                                          derive_seed(seed, "order")));
        }
    } else {
        SparseTextOptions opt;
        opt.require_timestamps = cfg.scenario == Scenario::dil;
        Dataset ds = load_sparse_text(cfg.data_path, opt);
        if (cfg.scenario == Scenario::dil)
            built.stream = build_dil_stream(ds, cfg.dil_window_days, cfg.dil_train_fraction,
                                            derive_seed(seed, "split"));
        else
            built.stream = build_cil_stream(ds, cfg.cil_classes_per_experience,
                                            derive_seed(seed, "order"), cfg.cil_train_fraction);
    }

    const FilterMode mode = cfg.resolved_filter_mode();
    if (mode == FilterMode::first) {
        built.filter = variance_filter_fit(built.stream.experiences.front().train,
                                           cfg.filter_threshold);
    } else if (mode == FilterMode::global) {
        Dataset all = built.stream.experiences.front().train;
        for (std::size_t i = 1; i < built.stream.experiences.size(); ++i)
            for (const auto& s : built.stream.experiences[i].train.samples)
                all.samples.push_back(s);
        built.filter = variance_filter_fit(all, cfg.filter_threshold);
    }
    if (built.filter) filter_stream(built.stream, *built.filter);
    return built;
}

// ---------------------------------------------------------------------------
// One seed end to end

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::vector<EvalRecord> records; // every evaluated (k, j) pair
    std::optional<AccuracyTable> accuracy;
    std::vector<fs::path> snapshots; // retained on disk
    fs::path records_csv;
    std::string error; // empty on success
    double wall_ms = 0.0;
    int total = 0;
};

namespace detail {

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline void progress(const std::string& msg) {
    std::lock_guard lock(log_mutex());
    std::cerr << msg << "\n";
}

inline fs::path snapshot_path(const fs::path& seed_dir, int k) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_exp%03d.bin", k);
    return seed_dir / name;
}

inline std::string fmt_rate(std::optional<double> v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

inline void write_records_csv(const std::vector<EvalRecord>& records, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write records file: " + path.string());
    out << "k,j,n,old_accuracy,new_accuracy,nf,pf,nfr_all,pfr_all,"
           "nfr_mw,pfr_mw,nfr_gw,pfr_gw,tp,fp,tn,fn,identity_residual\n";
    for (const auto& r : records) {
        out << r.update_k << ',' << r.test_j << ',' << r.n << ',';
        out << (r.has_old ? fmt_rate(r.old_accuracy) : "") << ',' << fmt_rate(r.new_accuracy) << ',';
        if (r.has_old)
            out << r.all.nf << ',' << r.all.pf;
        else
            out << ',';
        out << ',' << fmt_rate(r.nfr(kAllClasses)) << ',' << fmt_rate(r.pfr(kAllClasses)) << ','
            << fmt_rate(r.nfr(1)) << ',' << fmt_rate(r.pfr(1)) << ',' << fmt_rate(r.nfr(0)) << ','
            << fmt_rate(r.pfr(0)) << ',';
        out << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.tn << ','
            << r.confusion.fn << ',';
        if (r.has_old) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3e", forgetting_identity_residual(r));
            out << buf;
        }
        out << '\n';
    }
}

} // namespace detail

inline SeedOutcome run_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& seed_dir) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    SeedOutcome outcome;
    outcome.seed = seed;
    fs::create_directories(seed_dir);

    BuiltStream built = build_stream(cfg, seed);
    ScenarioStream& stream = built.stream;
    const int K = stream.total();
    outcome.total = K;
    outcome.accuracy.emplace(K);

    int class_count = 0;
    for (const auto& e : stream.experiences)
        class_count = std::max(class_count, e.train.class_count);
    const auto input_dim = static_cast<int>(stream.experiences.front().train.feature_dim);
    if (input_dim <= 0) throw data_error("stream has zero input features");

    MlpModel model = MlpModel::init_random(input_dim, cfg.hidden_dim, class_count,
                                           derive_seed(seed, "init"));
    OptimizerState opt;
    TrainSettings settings{cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.momentum};

    StrategyParams params = cfg.strategy_params;
    params.replay_capacity = cfg.resolved_replay_capacity();
    params.agem_capacity = cfg.resolved_agem_capacity();
    auto strategy = make_strategy(cfg.strategy, params);

    std::optional<ModelSnapshot> prev; // in-memory f_{k-1} for the training-side penalties

    for (int k = 1; k <= K; ++k) {
        const Experience& experience = stream.experiences[k - 1];

        ExperienceContext ctx;
        ctx.scenario = stream.kind;
        ctx.k = k;
        ctx.total = K;
        ctx.seen_classes = stream.seen_classes(k);
        ctx.prev_snapshot = prev ? &*prev : nullptr;
        ctx.strategy_seed = derive_seed(seed, "strategy", static_cast<std::uint64_t>(k));
        ctx.run_seed = seed;

        ModelSnapshot snap = run_experience(settings, *strategy, cfg.pct, model, opt, experience,
                                            ctx, derive_seed(seed, "train", static_cast<std::uint64_t>(k)));
        const fs::path snap_path = detail::snapshot_path(seed_dir, k);
        save_snapshot(snap, snap_path);

        // the old model is reloaded from its persisted snapshot, so the
        // metrics path exercises the file format on every run
        std::optional<ModelSnapshot> old_snap;
        if (k >= 2) old_snap = load_snapshot(detail::snapshot_path(seed_dir, k - 1));

        const int j_max = stream.kind == Scenario::dil ? K : k;
        for (int j = 1; j <= j_max; ++j) {
            const Dataset& test = stream.experiences[j - 1].test;
            if (test.empty()) continue;
            std::vector<int> labels;
            labels.reserve(test.size());
            for (const auto& s : test.samples) labels.push_back(s.label);

            auto new_preds = predict(snap, test.samples);
            if (stream.kind == Scenario::cil) {
                const ClassMask m = snap.mask();
                for (int p : new_preds)
                    if (!m.is_active(p))
                        throw numeric_error("masking invariant violated: prediction outside "
                                            "the seen-class set");
            }

            std::optional<std::vector<int>> old_preds;
            const bool eval_old = k >= 2 && (stream.kind == Scenario::dil || j <= k - 1);
            if (eval_old) old_preds = predict(*old_snap, test.samples);

            EvalRecord rec = make_eval_record(k, j, labels, new_preds,
                                              old_preds ? &*old_preds : nullptr);
            if (rec.has_old) {
                const double residual = forgetting_identity_residual(rec);
                if (std::abs(residual) > 1e-12)
                    throw numeric_error("accuracy-drop vs flip-balance identity violated: "
                                        "residual " + std::to_string(residual));
            }
            outcome.accuracy->set(k, j, rec.new_accuracy);
            outcome.records.push_back(std::move(rec));
        }

        if (!cfg.keep_all_snapshots && k >= 3) {
            std::error_code ec;
            fs::remove(detail::snapshot_path(seed_dir, k - 2), ec);
        }
        prev.emplace(std::move(snap));

        detail::progress("[seed " + std::to_string(seed) + "] experience " + std::to_string(k) +
                         "/" + std::to_string(K) + " (" + strategy->name() +
                         (cfg.pct.enabled ? "+pct" : "") + ")");
    }

    for (int k = 1; k <= K; ++k) {
        const fs::path p = detail::snapshot_path(seed_dir, k);
        if (fs::exists(p)) outcome.snapshots.push_back(p);
    }
    outcome.records_csv = seed_dir / "records.csv";
    detail::write_records_csv(outcome.records, outcome.records_csv);

    outcome.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return outcome;
}

// ---------------------------------------------------------------------------
// Curves and aggregation

struct CurveGroup {
    std::vector<std::pair<std::uint64_t, MetricCurve>> per_seed;
    AggregateCurve aggregate;
};

struct RunReport {
    std::string config_digest;
    std::string data_digest;
    Scenario scenario = Scenario::dil;
    int total = 0;
    std::string strategy;
    bool pct_enabled = false;
    std::vector<std::uint64_t> seeds; // seeds that completed
    bool partial = false;             // some seeds failed
    double max_identity_residual = 0.0; // worst |forgetting - (NFR-PFR)| seen
    std::map<std::pair<std::string, std::string>, CurveGroup> curves; // (metric, mode)

    const AggregateCurve& curve(const std::string& metric, const std::string& mode) const {
        auto it = curves.find({metric, mode});
        if (it == curves.end())
            throw data_error("report has no curve " + metric + "/" + mode);
        return it->second.aggregate;
    }
};

namespace detail {

inline std::optional<double> pair_metric(const EvalRecord& rec, const std::string& metric) {
    if (metric == "accuracy") return rec.new_accuracy;
    if (metric == "precision") return classification_metrics(rec.confusion).precision;
    if (metric == "recall") return classification_metrics(rec.confusion).recall;
    if (metric == "f1") return classification_metrics(rec.confusion).f1;
    if (metric == "nfr_all") return rec.nfr(kAllClasses);
    if (metric == "pfr_all") return rec.pfr(kAllClasses);
    if (metric == "nfr_mw") return rec.nfr(1);
    if (metric == "pfr_mw") return rec.pfr(1);
    if (metric == "nfr_gw") return rec.nfr(0);
    if (metric == "pfr_gw") return rec.pfr(0);
    throw std::logic_error("unknown pair metric " + metric);
}

/// Unweighted mean over the mode's test-experience window, skipping pairs
/// where the metric is undefined (e.g. no samples of the class).
inline std::optional<double> window_mean(const std::vector<const EvalRecord*>& by_j,
                                         const std::string& metric, int lo, int hi) {
    double sum = 0.0;
    int count = 0;
    for (int j = lo; j <= hi; ++j) {
        if (j < 1 || j > static_cast<int>(by_j.size()) || !by_j[j - 1]) continue;
        auto v = pair_metric(*by_j[j - 1], metric);
        if (!v) continue;
        sum += *v;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

struct SeedCurves {
    std::map<std::pair<std::string, std::string>, MetricCurve> curves;
};

inline SeedCurves build_seed_curves(const RunConfig& cfg, const SeedOutcome& outcome) {
    const Scenario kind = cfg.scenario;
    const int K = outcome.total;

    // records indexed as by_update[k-1][j-1]
    std::vector<std::vector<const EvalRecord*>> by_update(
        K, std::vector<const EvalRecord*>(K, nullptr));
    for (const auto& rec : outcome.records)
        by_update[rec.update_k - 1][rec.test_j - 1] = &rec;

    std::vector<std::string> class_metrics;
    std::vector<std::string> flip_metrics;
    if (kind == Scenario::dil) {
        class_metrics = {"accuracy", "precision", "recall", "f1"};
        flip_metrics = {"nfr_mw", "nfr_gw", "nfr_all", "pfr_mw", "pfr_gw", "pfr_all"};
    } else {
        class_metrics = {"accuracy"};
        flip_metrics = {"nfr_all", "pfr_all"};
    }
    std::vector<std::string> modes = {"backward"};
    if (kind == Scenario::dil) modes.push_back("forward");

    SeedCurves out;
    auto add_point = [&](const std::string& metric, const std::string& mode, int k,
                         std::optional<double> v) {
        if (!v) return;
        auto& c = out.curves[{metric, mode}];
        c.updates.push_back(k);
        c.values.push_back(*v);
    };

    for (const auto& mode : modes) {
        for (int k = 1; k <= K; ++k) {
            const auto& by_j = by_update[k - 1];
            int lo = 0, hi = 0;
            if (mode == "backward") {
                const int k_prime = kind == Scenario::dil ? k : k - 1;
                lo = 1;
                hi = k_prime;
            } else {
                lo = k;
                hi = K;
            }
            for (const auto& m : class_metrics) {
                // classification metrics describe the new model and need no
                // old predictions; in backward CIL the window still includes j=k
                const int chi = (mode == "backward" && kind == Scenario::cil) ? k : hi;
                if (mode == "backward")
                    add_point(m, mode, k, window_mean(by_j, m, lo, chi));
                else
                    add_point(m, mode, k, window_mean(by_j, m, lo, hi));
            }
            if (k < 2 || hi < lo) continue;
            for (const auto& m : flip_metrics)
                add_point(m, mode, k, window_mean(by_j, m, lo, hi));
        }
    }

    // forgetting is backward-only and starts at the second update
    {
        MetricCurve c;
        for (int k = 2; k <= K; ++k) {
            auto f = forgetting(*outcome.accuracy, k, cfg.forgetting_mode);
            if (f.per_j.empty()) continue;
            c.updates.push_back(k);
            c.values.push_back(f.average);
        }
        if (!c.updates.empty()) out.curves[{"forgetting", "backward"}] = std::move(c);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
    std::string config_digest;
    std::string data_digest;
    fs::path out_dir;
    fs::path report_csv;
    fs::path summary_txt;
    fs::path manifest_path;
    struct SeedEntry {
        std::uint64_t seed = 0;
        std::vector<std::string> snapshots;
        std::string records_csv;
        std::string error;
        double wall_ms = 0.0;
    };
    std::vector<SeedEntry> seeds;
    double total_wall_ms = 0.0;
    double aggregate_wall_ms = 0.0;
};

inline void write_manifest(const RunManifest& m) {
    nlohmann::json j;
    j["config_digest"] = m.config_digest;
    j["data_digest"] = m.data_digest;
    j["out_dir"] = m.out_dir.string();
    j["report_csv"] = m.report_csv.string();
    j["summary_txt"] = m.summary_txt.string();
    j["wall_ms"] = {{"total", m.total_wall_ms}, {"aggregate", m.aggregate_wall_ms}};
    j["seeds"] = nlohmann::json::array();
    for (const auto& s : m.seeds) {
        nlohmann::json e;
        e["seed"] = s.seed;
        e["snapshots"] = s.snapshots;
        e["records_csv"] = s.records_csv;
        e["wall_ms"] = s.wall_ms;
        if (!s.error.empty()) e["error"] = s.error;
        j["seeds"].push_back(e);
    }
    std::ofstream out(m.manifest_path);
    if (!out) throw data_error("cannot write manifest: " + m.manifest_path.string());
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Report files

inline void emit_report(const RunReport& report, const fs::path& report_csv,
                        const fs::path& summary_txt) {
    {
        std::ofstream out(report_csv);
        if (!out) throw data_error("cannot write report: " + report_csv.string());
        out << "metric,mode,update,value,seed\n";
        char buf[64];
        for (const auto& [key, group] : report.curves) {
            const auto& [metric, mode] = key;
            const auto& agg = group.aggregate;
            for (std::size_t i = 0; i < agg.updates.size(); ++i) {
                const int k = agg.updates[i];
                for (const auto& [seed, curve] : group.per_seed) {
                    std::snprintf(buf, sizeof buf, "%.4f", curve.values[i]);
                    out << metric << ',' << mode << ',' << k << ',' << buf << ',' << seed << '\n';
                }
                std::snprintf(buf, sizeof buf, "%.4f", agg.mean[i]);
                out << metric << ',' << mode << ',' << k << ',' << buf << ",mean\n";
                std::snprintf(buf, sizeof buf, "%.4f", agg.stddev[i]);
                out << metric << ',' << mode << ',' << k << ',' << buf << ",std\n";
            }
            std::snprintf(buf, sizeof buf, "%.4f", agg.overall_mean);
            out << metric << ',' << mode << ",all," << buf << ",mean\n";
            std::snprintf(buf, sizeof buf, "%.4f", agg.overall_std);
            out << metric << ',' << mode << ",all," << buf << ",std\n";
            std::snprintf(buf, sizeof buf, "%.4f", agg.worst);
            out << metric << ',' << mode << ",all," << buf << ",worst\n";
        }
    }
    {
        std::ofstream out(summary_txt);
        if (!out) throw data_error("cannot write summary: " + summary_txt.string());
        out << "run " << report.config_digest << "  data " << report.data_digest << '\n';
        out << "scenario " << to_string(report.scenario) << "  strategy " << report.strategy
            << "  pct " << (report.pct_enabled ? "on" : "off") << "  experiences "
            << report.total << '\n';
        out << "seeds";
        for (auto s : report.seeds) out << ' ' << s;
        if (report.partial) out << "  (partial: some seeds failed)";
        out << "\n\n";
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-12s %-9s %16s %10s\n", "metric", "mode",
                      "mean+-std (%)", "worst (%)");
        out << buf;
        for (const auto& [key, group] : report.curves) {
            const auto& [metric, mode] = key;
            const auto& agg = group.aggregate;
            char cell[48];
            std::snprintf(cell, sizeof cell, "%.2f +- %.2f", 100.0 * agg.overall_mean,
                          100.0 * agg.overall_std);
            std::snprintf(buf, sizeof buf, "%-12s %-9s %16s %10.2f\n", metric.c_str(),
                          mode.c_str(), cell, 100.0 * agg.worst);
            out << buf;
        }
        if (report.seeds.size() == 1)
            out << "\nnote: single seed; std is 0 by convention\n";
    }
}

// ---------------------------------------------------------------------------
// Full run

struct RunResult {
    RunReport report;
    RunManifest manifest;
};

inline RunResult run(const RunConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    cfg.validate();

    const fs::path out_dir = cfg.out_dir;
    fs::create_directories(out_dir);

    const std::size_t n_seeds = cfg.seeds.size();
    std::vector<SeedOutcome> outcomes(n_seeds);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::size_t n_threads =
        cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                        : std::min<std::size_t>(n_seeds, hw);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_seeds) return;
            const std::uint64_t seed = cfg.seeds[i];
            const fs::path seed_dir = out_dir / ("seed" + std::to_string(seed));
            try {
                outcomes[i] = run_seed(cfg, seed, seed_dir);
            } catch (const std::exception& e) {
                outcomes[i].seed = seed;
                outcomes[i].error = e.what();
                detail::progress("[seed " + std::to_string(seed) + "] failed: " + e.what());
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const auto t_agg = clock::now();

    RunResult result;
    RunReport& report = result.report;
    report.config_digest = cfg.digest();
    report.data_digest = cfg.data_digest();
    report.scenario = cfg.scenario;
    report.strategy = cfg.strategy;
    report.pct_enabled = cfg.pct.enabled;

    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::uint64_t, MetricCurve>>>
        collected;
    for (const auto& outcome : outcomes) {
        if (!outcome.error.empty()) {
            report.partial = true;
            continue;
        }
        report.seeds.push_back(outcome.seed);
        report.total = outcome.total;
        for (const auto& rec : outcome.records)
            if (rec.has_old)
                report.max_identity_residual = std::max(
                    report.max_identity_residual, std::abs(forgetting_identity_residual(rec)));
        auto curves = detail::build_seed_curves(cfg, outcome);
        for (auto& [key, curve] : curves.curves)
            collected[key].emplace_back(outcome.seed, std::move(curve));
    }
    if (report.seeds.empty()) {
        for (const auto& outcome : outcomes)
            if (!outcome.error.empty()) throw data_error("all seeds failed: " + outcome.error);
        throw data_error("no seeds configured");
    }

    for (auto& [key, per_seed] : collected) {
        CurveGroup group;
        std::vector<MetricCurve> curves_only;
        for (auto& [seed, curve] : per_seed) curves_only.push_back(curve);
        group.aggregate = seed_aggregate(curves_only, metric_higher_is_better(key.first));
        group.per_seed = std::move(per_seed);
        report.curves.emplace(key, std::move(group));
    }

    RunManifest& manifest = result.manifest;
    manifest.config_digest = report.config_digest;
    manifest.data_digest = report.data_digest;
    manifest.out_dir = out_dir;
    manifest.report_csv = out_dir / "report.csv";
    manifest.summary_txt = out_dir / "summary.txt";
    manifest.manifest_path = out_dir / "manifest.json";
    for (const auto& outcome : outcomes) {
        RunManifest::SeedEntry entry;
        entry.seed = outcome.seed;
        for (const auto& p : outcome.snapshots) entry.snapshots.push_back(p.string());
        entry.records_csv = outcome.records_csv.string();
        entry.error = outcome.error;
        entry.wall_ms = outcome.wall_ms;
        manifest.seeds.push_back(std::move(entry));
    }

    emit_report(report, manifest.report_csv, manifest.summary_txt);
    manifest.aggregate_wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t_agg).count();
    manifest.total_wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    write_manifest(manifest);
    return result;
}

// ---------------------------------------------------------------------------
// Standalone flip audit (the `eval` subcommand)

struct EvalCliResult {
    FlipRates rates;
    double old_accuracy = 0.0;
    double new_accuracy = 0.0;
    long long n_total = 0;
};

inline int eval_class_from_string(const std::string& name) {
    if (name == "mw") return 1;
    if (name == "gw") return 0;
    if (name == "all") return kAllClasses;
    throw config_error("unknown class selector '" + name + "' (expected mw|gw|all)");
}

inline EvalCliResult eval_flips(const fs::path& old_path, const fs::path& new_path,
                                const fs::path& test_path, const std::string& cls) {
    const int target = eval_class_from_string(cls);
    ModelSnapshot old_snap = load_snapshot(old_path);
    ModelSnapshot new_snap = load_snapshot(new_path);
    if (old_snap.model().input_dim() != new_snap.model().input_dim() ||
        old_snap.model().output_dim() != new_snap.model().output_dim())
        throw config_error("snapshots disagree on model dimensions");

    Dataset test = load_sparse_text(test_path);
    for (const auto& s : test.samples)
        if (s.label >= old_snap.model().output_dim())
            throw data_error("test label " + std::to_string(s.label) +
                             " outside the snapshots' output layer");

    std::vector<int> labels;
    for (const auto& s : test.samples) labels.push_back(s.label);
    auto old_preds = predict(old_snap, test.samples);
    auto new_preds = predict(new_snap, test.samples);

    EvalCliResult r;
    r.rates = flip_rates(old_preds, new_preds, labels, target);
    r.n_total = static_cast<long long>(labels.size());
    long long old_ok = 0, new_ok = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        old_ok += old_preds[i] == labels[i];
        new_ok += new_preds[i] == labels[i];
    }
    r.old_accuracy = static_cast<double>(old_ok) / static_cast<double>(labels.size());
    r.new_accuracy = static_cast<double>(new_ok) / static_cast<double>(labels.size());
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic dataset materialization (the `synth` subcommand)

inline fs::path materialize_synth(const SynthConfig& synth, Scenario scenario,
                                  std::uint64_t seed, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<Experience> experiences =
        scenario == Scenario::dil
            ? synth_dil_generate(synth, derive_seed(seed, "data"))
            : synth_cil_generate(synth, derive_seed(seed, "data"), derive_seed(seed, "order"));

    Dataset all;
    all.feature_dim = synth.feature_dim;
    for (const auto& e : experiences) {
        for (const auto& s : e.train.samples) all.samples.push_back(s);
        for (const auto& s : e.test.samples) all.samples.push_back(s);
        all.class_count = std::max(all.class_count, e.train.class_count);
    }
    const fs::path path = out_dir / (scenario == Scenario::dil ? "dil.txt" : "cil.txt");
    save_sparse_text(all, path);
    return path;
}

} // namespace regcl
