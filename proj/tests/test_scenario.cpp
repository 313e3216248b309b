#include <catch2/catch_amalgamated.hpp>

#include "regcl/scenario.hpp"

using namespace regcl;

namespace {

Dataset timed_dataset(const std::vector<std::pair<std::int64_t, int>>& ts_label,
                      std::uint32_t dim = 4) {
    Dataset ds;
    ds.feature_dim = dim;
    ds.class_count = 2;
    for (auto [t, y] : ts_label) {
        SparseSample s;
        s.label = y;
        s.timestamp = t;
        s.features = {0};
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset class_dataset(int classes, int per_class, std::uint32_t dim = 4) {
    Dataset ds;
    ds.feature_dim = dim;
    ds.class_count = classes;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            SparseSample s;
            s.label = c;
            s.features = {static_cast<std::uint32_t>(i % dim)};
            ds.samples.push_back(std::move(s));
        }
    return ds;
}

} // namespace

TEST_CASE("timestamps spanning 270 days with 90-day windows give 3 experiences") {
    std::vector<std::pair<std::int64_t, int>> rows;
    for (int d = 0; d < 270; d += 5) rows.push_back({d, d % 2});
    auto stream = build_dil_stream(timed_dataset(rows), 90, 0.8, 1);
    CHECK(stream.total() == 3);
    CHECK(stream.kind == Scenario::dil);
}

TEST_CASE("100 samples per window split 80/20") {
    std::vector<std::pair<std::int64_t, int>> rows;
    for (int w = 0; w < 2; ++w)
        for (int i = 0; i < 100; ++i) rows.push_back({w * 90 + i % 90, i % 2});
    auto stream = build_dil_stream(timed_dataset(rows), 90, 0.8, 3);
    REQUIRE(stream.total() == 2);
    for (const auto& e : stream.experiences) {
        CHECK(e.train.size() == 80);
        CHECK(e.test.size() == 20);
    }
}

TEST_CASE("window boundaries are half-open") {
    // samples at t=0 and exactly t=90: the latter belongs to the second window
    auto ds = timed_dataset({{0, 0}, {0, 1}, {90, 0}, {90, 1}});
    auto stream = build_dil_stream(ds, 90, 0.5, 1);
    REQUIRE(stream.total() == 2);
    CHECK(stream.experiences[0].window->first == 0);
    CHECK(stream.experiences[0].window->second == 90);
    for (const auto& ds2 : {stream.experiences[1].train, stream.experiences[1].test})
        for (const auto& s : ds2.samples) CHECK(*s.timestamp == 90);
}

TEST_CASE("empty windows are dropped, too few windows error out") {
    // gap between day 10 and day 400 leaves empty windows in between
    auto ds = timed_dataset({{0, 0}, {10, 1}, {400, 0}, {410, 1}});
    auto stream = build_dil_stream(ds, 90, 0.5, 5);
    CHECK(stream.total() == 2);

    auto single = timed_dataset({{0, 0}, {10, 1}});
    CHECK_THROWS_AS(build_dil_stream(single, 90, 0.5, 5), config_error);
}

TEST_CASE("dil stream requires timestamps") {
    Dataset ds = class_dataset(2, 4);
    CHECK_THROWS_AS(build_dil_stream(ds, 90, 0.8, 1), data_error);
}

TEST_CASE("dil windows partition all samples exactly once") {
    std::vector<std::pair<std::int64_t, int>> rows;
    for (int i = 0; i < 313; ++i) rows.push_back({(i * 7) % 500, i % 2});
    auto ds = timed_dataset(rows);
    auto stream = build_dil_stream(ds, 90, 0.8, 2);
    std::size_t covered = 0;
    for (const auto& e : stream.experiences) covered += e.train.size() + e.test.size();
    CHECK(covered == ds.size());
}

TEST_CASE("cil stream: 100 classes in groups of 10") {
    auto ds = class_dataset(100, 10);
    auto stream = build_cil_stream(ds, 10, 7);
    REQUIRE(stream.total() == 10);
    std::set<int> all;
    for (const auto& e : stream.experiences) {
        REQUIRE(e.classes.has_value());
        CHECK(e.classes->size() == 10);
        for (int c : *e.classes) all.insert(c);
    }
    CHECK(all.size() == 100); // exactly once
    CHECK(stream.seen_classes(2).size() == 20);
}

TEST_CASE("cil order seed changes membership, not sizes") {
    auto ds = class_dataset(20, 5);
    auto a = build_cil_stream(ds, 5, 1);
    auto b = build_cil_stream(ds, 5, 2);
    REQUIRE(a.total() == b.total());
    bool any_diff = false;
    for (int k = 0; k < a.total(); ++k) {
        CHECK(a.experiences[k].classes->size() == b.experiences[k].classes->size());
        if (*a.experiences[k].classes != *b.experiences[k].classes) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("cil stratified split arithmetic: 4 classes, 2 per experience, 10 per class") {
    auto ds = class_dataset(4, 10);
    auto stream = build_cil_stream(ds, 2, 3, 0.9);
    REQUIRE(stream.total() == 2);
    for (const auto& e : stream.experiences) {
        CHECK(e.train.size() == 18);
        CHECK(e.test.size() == 2);
    }
}

TEST_CASE("cil rejects an indivisible class count") {
    auto ds = class_dataset(7, 4);
    CHECK_THROWS_AS(build_cil_stream(ds, 3, 1), config_error);
}

TEST_CASE("splits are deterministic under a fixed seed") {
    std::vector<std::pair<std::int64_t, int>> rows;
    for (int i = 0; i < 200; ++i) rows.push_back({i % 180, i % 2});
    auto ds = timed_dataset(rows);
    auto a = build_dil_stream(ds, 90, 0.8, 42);
    auto b = build_dil_stream(ds, 90, 0.8, 42);
    REQUIRE(a.total() == b.total());
    for (int k = 0; k < a.total(); ++k) {
        REQUIRE(a.experiences[k].train.size() == b.experiences[k].train.size());
        for (std::size_t i = 0; i < a.experiences[k].train.size(); ++i)
            CHECK(a.experiences[k].train.samples[i].timestamp ==
                  b.experiences[k].train.samples[i].timestamp);
    }
}
