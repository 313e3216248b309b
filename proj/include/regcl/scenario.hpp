#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "regcl/dataset.hpp"
#include "regcl/rng.hpp"

namespace regcl {

enum class Scenario { dil, cil };

inline const char* to_string(Scenario s) { return s == Scenario::dil ? "dil" : "cil"; }

/// One unit of the training stream: a train/test pair arriving at step k,
/// carrying either a half-open time window (DIL) or a class set (CIL).
struct Experience {
    int id = 0; // 1-based
    Dataset train;
    Dataset test;
    std::optional<std::pair<std::int64_t, std::int64_t>> window; // [t_start, t_end)
    std::optional<std::vector<int>> classes;                     // sorted
};

struct ScenarioStream {
    Scenario kind = Scenario::dil;
    std::vector<Experience> experiences;

    int total() const { return static_cast<int>(experiences.size()); }

    /// Union of class sets of experiences 1..k (CIL); all classes for DIL.
    std::vector<int> seen_classes(int k) const {
        std::set<int> seen;
        if (kind == Scenario::dil) {
            int cc = 0;
            for (const auto& e : experiences) cc = std::max(cc, e.train.class_count);
            for (int c = 0; c < cc; ++c) seen.insert(c);
        } else {
            for (int i = 0; i < k && i < total(); ++i)
                for (int c : *experiences[i].classes) seen.insert(c);
        }
        return {seen.begin(), seen.end()};
    }
};

/// Buckets samples into consecutive windows of `window_length_days` starting
/// at the earliest timestamp, then splits each bucket train/test by a seeded
/// shuffle. Windows are half-open: a sample at t_end belongs to the next one.
/// Empty windows are dropped with a warning.
inline ScenarioStream build_dil_stream(const Dataset& dataset,
                                       std::int64_t window_length_days,
                                       double train_fraction,
                                       std::uint64_t seed) {
    if (window_length_days <= 0)
        throw config_error("window length must be positive");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw config_error("train fraction must lie in (0, 1)");
    for (const auto& s : dataset.samples)
        if (!s.timestamp)
            throw data_error("DIL stream requires timestamps on every sample");

    std::int64_t t0 = *dataset.samples.front().timestamp;
    std::int64_t tmax = t0;
    for (const auto& s : dataset.samples) {
        t0 = std::min(t0, *s.timestamp);
        tmax = std::max(tmax, *s.timestamp);
    }
    const std::int64_t n_windows = (tmax - t0) / window_length_days + 1;

    std::vector<std::vector<std::size_t>> buckets(n_windows);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto w = (*dataset.samples[i].timestamp - t0) / window_length_days;
        buckets[w].push_back(i);
    }

    ScenarioStream stream;
    stream.kind = Scenario::dil;
    int next_id = 1;
    for (std::int64_t w = 0; w < n_windows; ++w) {
        if (buckets[w].empty()) {
            std::cerr << "warning: dropping empty window "
                      << (t0 + w * window_length_days) << ".."
                      << (t0 + (w + 1) * window_length_days) << "\n";
            continue;
        }
        auto idx = buckets[w];
        Rng rng = make_rng(derive_seed(seed, "dil-split", static_cast<std::uint64_t>(w)));
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train =
            static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));

        Experience e;
        e.id = next_id++;
        e.window = {t0 + w * window_length_days, t0 + (w + 1) * window_length_days};
        e.train.feature_dim = e.test.feature_dim = dataset.feature_dim;
        e.train.class_count = e.test.class_count = dataset.class_count;
        e.train.class_names = e.test.class_names = dataset.class_names;
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? e.train : e.test).samples.push_back(dataset.samples[idx[i]]);
        stream.experiences.push_back(std::move(e));
    }

    if (stream.total() < 2)
        throw config_error("DIL stream needs at least 2 non-empty windows, got " +
                           std::to_string(stream.total()));
    return stream;
}

/// Permutes class ids with `order_seed`, chunks them into groups of
/// `classes_per_experience`, and splits each class 90/10 (stratified).
inline ScenarioStream build_cil_stream(const Dataset& dataset,
                                       int classes_per_experience,
                                       std::uint64_t order_seed,
                                       double train_fraction = 0.9) {
    if (classes_per_experience <= 0)
        throw config_error("classes per experience must be positive");
    if (dataset.class_count % classes_per_experience != 0)
        throw config_error("class count " + std::to_string(dataset.class_count) +
                           " not divisible by classes per experience " +
                           std::to_string(classes_per_experience));
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw config_error("train fraction must lie in (0, 1)");

    std::vector<int> order(dataset.class_count);
    std::iota(order.begin(), order.end(), 0);
    {
        Rng rng = make_rng(derive_seed(order_seed, "cil-order"));
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[dataset.samples[i].label].push_back(i);

    ScenarioStream stream;
    stream.kind = Scenario::cil;
    const int k_total = dataset.class_count / classes_per_experience;
    for (int k = 0; k < k_total; ++k) {
        Experience e;
        e.id = k + 1;
        std::vector<int> classes(order.begin() + k * classes_per_experience,
                                 order.begin() + (k + 1) * classes_per_experience);
        std::sort(classes.begin(), classes.end());
        e.classes = classes;
        e.train.feature_dim = e.test.feature_dim = dataset.feature_dim;
        e.train.class_count = e.test.class_count = dataset.class_count;
        e.train.class_names = e.test.class_names = dataset.class_names;
        for (int c : classes) {
            auto it = by_class.find(c);
            if (it == by_class.end() || it->second.empty()) continue;
            auto idx = it->second;
            Rng rng = make_rng(derive_seed(order_seed, "cil-split", static_cast<std::uint64_t>(c)));
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto n_train =
                static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_train ? e.train : e.test).samples.push_back(dataset.samples[idx[i]]);
        }
        stream.experiences.push_back(std::move(e));
    }
    return stream;
}

} // namespace regcl
