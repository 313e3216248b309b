#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "regcl/dataset.hpp"
#include "regcl/engine.hpp"
#include "regcl/synth.hpp"

using namespace regcl;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream f(path);
    f << body;
    return path;
}

bool same_samples(const SparseSample& a, const SparseSample& b) {
    return a.features == b.features && a.label == b.label && a.timestamp == b.timestamp;
}

bool same_dataset(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.feature_dim != b.feature_dim) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_samples(a.samples[i], b.samples[i])) return false;
    return true;
}

} // namespace

TEST_CASE("sparse text grammar") {
    const auto path = write_temp("regcl_ok.txt",
                                 "# a comment\n"
                                 "1 t=17532 4:1 9:1\n"
                                 "\n"
                                 "0 7:1\n");
    Dataset ds = load_sparse_text(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.samples[0].label == 1);
    CHECK(ds.samples[0].timestamp == 17532);
    CHECK(ds.samples[0].features == std::vector<std::uint32_t>{4, 9});
    CHECK(!ds.samples[1].timestamp);
    CHECK(ds.feature_dim == 10);
    CHECK(ds.class_count == 2);
    std::filesystem::remove(path);
}

TEST_CASE("missing timestamp fails when timestamps are required") {
    const auto path = write_temp("regcl_nots.txt", "0 7:1\n");
    SparseTextOptions opt;
    opt.require_timestamps = true;
    CHECK_THROWS_AS(load_sparse_text(path, opt), data_error);
    std::filesystem::remove(path);
}

TEST_CASE("parse errors carry line numbers") {
    const auto dup = write_temp("regcl_dup.txt", "# c\n1 3:1 3:1\n");
    try {
        load_sparse_text(dup);
        FAIL("expected parse error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    std::filesystem::remove(dup);

    const auto unordered = write_temp("regcl_ord.txt", "1 5:1 3:1\n");
    CHECK_THROWS_AS(load_sparse_text(unordered), data_error);
    std::filesystem::remove(unordered);

    const auto badval = write_temp("regcl_val.txt", "1 5:2\n");
    CHECK_THROWS_AS(load_sparse_text(badval), data_error);
    std::filesystem::remove(badval);
}

TEST_CASE("empty file is an empty-dataset error") {
    const auto path = write_temp("regcl_empty.txt", "# nothing here\n");
    CHECK_THROWS_AS(load_sparse_text(path), data_error);
    std::filesystem::remove(path);
}

TEST_CASE("save/load round-trip preserves samples") {
    Dataset ds;
    ds.feature_dim = 6;
    ds.class_count = 2;
    SparseSample a;
    a.label = 1;
    a.timestamp = 5;
    a.features = {0, 5};
    SparseSample b;
    b.label = 0;
    b.features = {2};
    ds.samples = {a, b};
    const auto path = std::filesystem::temp_directory_path() / "regcl_rt.txt";
    save_sparse_text(ds, path);
    Dataset back = load_sparse_text(path);
    CHECK(same_dataset(ds, back));
    std::filesystem::remove(path);
}

TEST_CASE("variance filter thresholds at p(1-p)") {
    Dataset train;
    train.feature_dim = 3;
    train.class_count = 2;
    // feature 0: never active; feature 1: active once in 1000; feature 2: 500/1000
    for (int i = 0; i < 1000; ++i) {
        SparseSample s;
        s.label = 0;
        if (i == 0) s.features.push_back(1);
        if (i < 500) s.features.push_back(2);
        std::sort(s.features.begin(), s.features.end());
        train.samples.push_back(std::move(s));
    }
    FeatureFilter f = variance_filter_fit(train, 1e-3);
    // var(0)=0 removed; var(1)=0.000999 < 1e-3 removed; var(2)=0.25 kept
    CHECK(f.kept == std::vector<std::uint32_t>{2});
}

TEST_CASE("apply_filter remaps and guards") {
    Dataset ds;
    ds.feature_dim = 8;
    ds.class_count = 2;
    SparseSample s;
    s.label = 1;
    s.features = {2, 5, 7};
    ds.samples = {s};

    FeatureFilter keep25;
    keep25.kept = {2, 5};
    keep25.original_dim = 8;
    Dataset out = apply_filter(keep25, ds);
    CHECK(out.feature_dim == 2);
    CHECK(out.samples[0].features == std::vector<std::uint32_t>{0, 1});

    FeatureFilter empty;
    empty.original_dim = 8;
    CHECK_THROWS_AS(apply_filter(empty, ds), data_error);

    FeatureFilter identity;
    for (std::uint32_t i = 0; i < 8; ++i) identity.kept.push_back(i);
    identity.original_dim = 8;
    Dataset same = apply_filter(identity, ds);
    CHECK(same_dataset(same, ds));

    FeatureFilter small;
    small.kept = {0};
    small.original_dim = 4; // sample has feature 7 beyond this space
    CHECK_THROWS_AS(apply_filter(small, ds), data_error);
}

TEST_CASE("filtered-out samples are kept as all-zero inputs") {
    Dataset ds;
    ds.feature_dim = 4;
    ds.class_count = 2;
    SparseSample s;
    s.label = 0;
    s.features = {1};
    ds.samples = {s};
    FeatureFilter f;
    f.kept = {0, 2};
    f.original_dim = 4;
    Dataset out = apply_filter(f, ds);
    REQUIRE(out.size() == 1);
    CHECK(out.samples[0].features.empty());
}

TEST_CASE("filter file round-trip") {
    FeatureFilter f;
    f.threshold = 0.002;
    f.kept = {1, 4, 9};
    const auto path = std::filesystem::temp_directory_path() / "regcl_filter.txt";
    save_filter(f, path);
    FeatureFilter back = load_filter(path);
    CHECK(back.threshold == Catch::Approx(0.002));
    CHECK(back.kept == f.kept);
    std::filesystem::remove(path);
}

TEST_CASE("synthetic generators are pure functions of (cfg, seed)") {
    SynthConfig cfg;
    cfg.feature_dim = 50;
    cfg.experiences = 3;
    cfg.samples_per_class = 20;
    auto a = synth_dil_generate(cfg, 7);
    auto b = synth_dil_generate(cfg, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(same_dataset(a[k].train, b[k].train));
        CHECK(same_dataset(a[k].test, b[k].test));
    }
    auto c = synth_dil_generate(cfg, 8);
    CHECK(!same_dataset(a[0].train, c[0].train));
}

TEST_CASE("dil synth: noise-free, drift-free samples equal the prototype") {
    SynthConfig cfg;
    cfg.feature_dim = 60;
    cfg.experiences = 3;
    cfg.samples_per_class = 10;
    cfg.drift_rate = 0.0;
    cfg.flip_noise = 0.0;
    auto stream = synth_dil_generate(cfg, 5);
    // within each class, every sample in every experience is the same vector
    for (int c = 0; c < 2; ++c) {
        const SparseSample* proto = nullptr;
        for (const auto& e : stream) {
            for (const auto& ds : {e.train, e.test})
                for (const auto& s : ds.samples) {
                    if (s.label != c) continue;
                    if (!proto)
                        proto = &s;
                    else
                        CHECK(s.features == proto->features);
                }
        }
    }
}

TEST_CASE("dil synth: timestamps fill non-decreasing half-open windows") {
    SynthConfig cfg;
    cfg.feature_dim = 40;
    cfg.experiences = 4;
    cfg.samples_per_class = 15;
    auto stream = synth_dil_generate(cfg, 3);
    REQUIRE(stream.size() == 4);
    std::int64_t prev_end = 0;
    for (const auto& e : stream) {
        REQUIRE(e.window.has_value());
        CHECK(e.window->first == prev_end);
        prev_end = e.window->second;
        for (const auto& ds : {e.train, e.test})
            for (const auto& s : ds.samples) {
                REQUIRE(s.timestamp.has_value());
                CHECK(*s.timestamp >= e.window->first);
                CHECK(*s.timestamp < e.window->second);
            }
    }
}

TEST_CASE("dil synth keeps the configured class ratio") {
    SynthConfig cfg;
    cfg.feature_dim = 30;
    cfg.experiences = 2;
    cfg.samples_per_class = 100; // 200 total -> 180 goodware, 20 malware
    auto stream = synth_dil_generate(cfg, 9);
    for (const auto& e : stream) {
        int mw = 0, total = 0;
        for (const auto& ds : {e.train, e.test})
            for (const auto& s : ds.samples) {
                mw += s.label == 1;
                ++total;
            }
        CHECK(total == 200);
        CHECK(mw == 20);
    }
}

TEST_CASE("cil synth: disjoint class groups covering all classes") {
    SynthConfig cfg;
    cfg.feature_dim = 40;
    cfg.samples_per_class = 10;
    cfg.classes_total = 100;
    cfg.classes_per_experience = 10;
    auto stream = synth_cil_generate(cfg, 4, 4);
    REQUIRE(stream.size() == 10);
    std::set<int> all;
    for (const auto& e : stream) {
        REQUIRE(e.classes.has_value());
        CHECK(e.classes->size() == 10);
        for (int c : *e.classes) {
            CHECK(!all.count(c)); // pairwise disjoint
            all.insert(c);
        }
        for (const auto& ds : {e.train, e.test})
            for (const auto& s : ds.samples)
                CHECK(std::find(e.classes->begin(), e.classes->end(), s.label) !=
                      e.classes->end());
    }
    CHECK(all.size() == 100);
}

TEST_CASE("cil synth: order seed permutes groups but leaves class contents alone") {
    SynthConfig cfg;
    cfg.feature_dim = 40;
    cfg.samples_per_class = 12;
    cfg.classes_total = 20;
    cfg.classes_per_experience = 5;
    auto a = synth_cil_generate(cfg, 6, 1);
    auto b = synth_cil_generate(cfg, 6, 2);

    auto collect = [](const std::vector<Experience>& stream) {
        std::map<int, std::vector<SparseSample>> by_class;
        for (const auto& e : stream)
            for (const auto& ds : {e.train, e.test})
                for (const auto& s : ds.samples) by_class[s.label].push_back(s);
        return by_class;
    };
    auto ca = collect(a), cb = collect(b);
    REQUIRE(ca.size() == cb.size());
    for (auto& [cls, sa] : ca) {
        auto& sb = cb[cls];
        REQUIRE(sa.size() == sb.size());
        for (std::size_t i = 0; i < sa.size(); ++i) CHECK(same_samples(sa[i], sb[i]));
    }

    std::vector<std::vector<int>> ga, gb;
    for (const auto& e : a) ga.push_back(*e.classes);
    for (const auto& e : b) gb.push_back(*e.classes);
    CHECK(ga != gb); // different ordering
}

TEST_CASE("cil synth: zero noise makes same-class samples identical") {
    SynthConfig cfg;
    cfg.feature_dim = 30;
    cfg.samples_per_class = 8;
    cfg.classes_total = 6;
    cfg.classes_per_experience = 3;
    cfg.flip_noise = 0.0;
    auto stream = synth_cil_generate(cfg, 2, 2);
    for (const auto& e : stream) {
        std::map<int, std::vector<std::uint32_t>> proto;
        for (const auto& ds : {e.train, e.test})
            for (const auto& s : ds.samples) {
                auto it = proto.find(s.label);
                if (it == proto.end())
                    proto[s.label] = s.features;
                else
                    CHECK(it->second == s.features);
            }
    }
}

namespace {

/// Trains a plain model on one experience and returns accuracy on each test set.
std::vector<double> train_on_first_and_eval(const std::vector<Experience>& stream,
                                            std::uint64_t seed) {
    const auto input_dim = static_cast<int>(stream.front().train.feature_dim);
    MlpModel model = MlpModel::init_random(input_dim, 32, 2, derive_seed(seed, "init"));
    OptimizerState opt;
    TrainSettings settings;
    settings.epochs = 15;
    NaiveStrategy naive;
    ExperienceContext ctx;
    ctx.scenario = Scenario::dil;
    ctx.k = 1;
    ctx.total = static_cast<int>(stream.size());
    ctx.seen_classes = {0, 1};
    ctx.run_seed = seed;
    run_experience(settings, naive, PctConfig{}, model, opt, stream.front(), ctx,
                   derive_seed(seed, "train", 1));

    std::vector<double> acc;
    for (const auto& e : stream) {
        auto preds = predict(model, e.test.samples, ClassMask::all(2));
        int ok = 0;
        for (std::size_t i = 0; i < preds.size(); ++i)
            ok += preds[i] == e.test.samples[i].label;
        acc.push_back(static_cast<double>(ok) / static_cast<double>(preds.size()));
    }
    return acc;
}

double malware_recall(const MlpModel& model, const Dataset& test) {
    auto preds = predict(model, test.samples, ClassMask::all(2));
    int tp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (test.samples[i].label != 1) continue;
        preds[i] == 1 ? ++tp : ++fn;
    }
    return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
}

} // namespace

TEST_CASE("drift sanity oracle: training once, recall decays under drift") {
    SynthConfig cfg;
    cfg.feature_dim = 200;
    cfg.experiences = 8;
    cfg.samples_per_class = 150;
    cfg.drift_rate = 0.2;
    cfg.flip_noise = 0.01;

    double recall_first = 0.0, recall_last = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto stream = synth_dil_generate(cfg, seed);
        const auto input_dim = static_cast<int>(stream.front().train.feature_dim);
        MlpModel model = MlpModel::init_random(input_dim, 32, 2, derive_seed(seed, "init"));
        OptimizerState opt;
        TrainSettings settings;
        settings.epochs = 15;
        NaiveStrategy naive;
        ExperienceContext ctx;
        ctx.scenario = Scenario::dil;
        ctx.k = 1;
        ctx.total = 8;
        ctx.seen_classes = {0, 1};
        ctx.run_seed = seed;
        run_experience(settings, naive, PctConfig{}, model, opt, stream.front(), ctx,
                       derive_seed(seed, "train", 1));
        recall_first += malware_recall(model, stream.front().test);
        recall_last += malware_recall(model, stream.back().test);
    }
    recall_first /= 5.0;
    recall_last /= 5.0;
    INFO("mean recall on experience 1: " << recall_first << ", on experience 8: " << recall_last);
    CHECK(recall_last < recall_first);
}

TEST_CASE("no-drift control: accuracy is statistically flat across experiences") {
    SynthConfig cfg;
    cfg.feature_dim = 200;
    cfg.experiences = 8;
    cfg.samples_per_class = 150;
    cfg.drift_rate = 0.0;
    cfg.flip_noise = 0.01;

    double mean_slope = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto stream = synth_dil_generate(cfg, seed);
        auto acc = train_on_first_and_eval(stream, seed);
        // least-squares slope of accuracy against experience index
        const double n = static_cast<double>(acc.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double x = static_cast<double>(i + 1);
            sx += x;
            sy += acc[i];
            sxx += x * x;
            sxy += x * acc[i];
        }
        mean_slope += (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    mean_slope /= 5.0;
    INFO("mean accuracy slope per experience: " << mean_slope);
    CHECK(mean_slope > -0.005);
}
