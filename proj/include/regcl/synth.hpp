#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "regcl/rng.hpp"
#include "regcl/scenario.hpp"

namespace regcl {

/// Synthetic stream generator: class prototypes are sparse random bit
/// vectors; samples are prototypes with per-feature flip noise; DIL drift
/// resamples a fraction of prototype coordinates between experiences.
struct SynthConfig {
    std::uint32_t feature_dim = 500;
    int experiences = 8;       // DIL stream length
    int samples_per_class = 300;
    int ratio_goodware = 9;    // DIL class ratio goodware:malware
    int ratio_malware = 1;
    double prototype_density = 0.05; // p1
    double drift_rate = 0.05;        // delta
    double flip_noise = 0.01;        // epsilon
    double class_separation = 0.02;  // DIL: fraction of coordinates flipped
                                     // between the two class prototypes
    int classes_total = 50;          // CIL
    int classes_per_experience = 10; // CIL
    std::int64_t window_days = 90;   // DIL timestamp window per experience
    double dil_train_fraction = 0.8;
    double cil_train_fraction = 0.9;

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(prototype_density) || !in01(drift_rate) || !in01(flip_noise) ||
            !in01(class_separation))
            throw config_error("synth: density/drift/noise/separation must lie in [0, 1]");
        if (feature_dim == 0) throw config_error("synth: feature_dim must be positive");
        if (experiences < 2) throw config_error("synth: need at least 2 experiences");
        if (samples_per_class <= 0) throw config_error("synth: samples_per_class must be positive");
        if (ratio_goodware <= 0 || ratio_malware <= 0)
            throw config_error("synth: class ratio parts must be positive");
        if (classes_total <= 0 || classes_per_experience <= 0 ||
            classes_total % classes_per_experience != 0)
            throw config_error("synth: classes_total must be divisible by classes_per_experience");
        if (window_days <= 0) throw config_error("synth: window_days must be positive");
    }
};

namespace detail {

using BitVector = std::vector<std::uint8_t>;

inline BitVector random_prototype(std::uint32_t dim, double density, Rng& rng) {
    std::bernoulli_distribution bit(density);
    BitVector proto(dim, 0);
    for (auto& b : proto) b = bit(rng) ? 1 : 0;
    return proto;
}

/// Resamples floor(rate * dim) distinct coordinates as fresh Bernoulli(density) bits.
inline void drift_prototype(BitVector& proto, double rate, double density, Rng& rng) {
    const auto dim = static_cast<std::uint32_t>(proto.size());
    auto n_resample = static_cast<std::uint32_t>(std::floor(rate * dim));
    if (n_resample == 0) return;
    std::vector<std::uint32_t> coords(dim);
    std::iota(coords.begin(), coords.end(), 0u);
    std::shuffle(coords.begin(), coords.end(), rng);
    std::bernoulli_distribution bit(density);
    for (std::uint32_t i = 0; i < n_resample; ++i)
        proto[coords[i]] = bit(rng) ? 1 : 0;
}

inline SparseSample noisy_sample(const BitVector& proto, int label, double noise, Rng& rng) {
    std::bernoulli_distribution flip(noise);
    SparseSample s;
    s.label = label;
    for (std::uint32_t i = 0; i < proto.size(); ++i) {
        bool on = proto[i] != 0;
        if (noise > 0.0 && flip(rng)) on = !on;
        if (on) s.features.push_back(i);
    }
    return s;
}

/// Stratified split: the first round(fraction*n) of a seeded shuffle train, rest test.
inline void split_samples(std::vector<SparseSample> samples, double fraction,
                          std::uint64_t seed, Dataset& train, Dataset& test) {
    Rng rng = make_rng(seed);
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto n_train =
        static_cast<std::size_t>(std::lround(fraction * static_cast<double>(samples.size())));
    for (std::size_t i = 0; i < samples.size(); ++i)
        (i < n_train ? train : test).samples.push_back(std::move(samples[i]));
}

} // namespace detail

/// Two-class drifting stream mimicking a thin-margin detector task: both
/// prototypes share a drifting base pattern and differ only on a small
/// discriminative coordinate set, which itself relocates at the drift rate.
/// Timestamps fill consecutive windows so the result round-trips through
/// build_dil_stream.
inline std::vector<Experience> synth_dil_generate(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();

    const std::uint32_t d = cfg.feature_dim;
    Rng chain = make_rng(derive_seed(seed, "proto-chain"));
    detail::BitVector base = detail::random_prototype(d, cfg.prototype_density, chain);

    // coordinates where the malware prototype is the goodware one, flipped
    const auto n_disc = std::min<std::uint32_t>(
        d, static_cast<std::uint32_t>(std::lround(cfg.class_separation * d)));
    std::vector<std::uint32_t> disc;
    std::vector<char> in_disc(d, 0);
    {
        std::vector<std::uint32_t> coords(d);
        std::iota(coords.begin(), coords.end(), 0u);
        std::shuffle(coords.begin(), coords.end(), chain);
        disc.assign(coords.begin(), coords.begin() + n_disc);
        for (auto c : disc) in_disc[c] = 1;
    }

    const int total = 2 * cfg.samples_per_class;
    const double ratio_sum = cfg.ratio_goodware + cfg.ratio_malware;
    int n_mw = std::max(1, static_cast<int>(std::lround(total * cfg.ratio_malware / ratio_sum)));
    int n_gw = total - n_mw;

    std::vector<Experience> stream;
    for (int k = 1; k <= cfg.experiences; ++k) {
        if (k > 1) {
            detail::drift_prototype(base, cfg.drift_rate, cfg.prototype_density, chain);
            // each discriminative coordinate relocates with probability delta,
            // mirroring the per-coordinate resampling of the base pattern
            std::bernoulli_distribution move(cfg.drift_rate);
            std::uniform_int_distribution<std::uint32_t> pick(0, d - 1);
            for (auto& coord : disc) {
                if (!move(chain)) continue;
                in_disc[coord] = 0;
                std::uint32_t fresh;
                do {
                    fresh = pick(chain);
                } while (in_disc[fresh]);
                coord = fresh;
                in_disc[fresh] = 1;
            }
        }
        detail::BitVector protos[2];
        protos[0] = base;
        protos[1] = base;
        for (auto c : disc) protos[1][c] = protos[1][c] ? 0 : 1;

        Experience e;
        e.id = k;
        const std::int64_t t_start = static_cast<std::int64_t>(k - 1) * cfg.window_days;
        e.window = {t_start, t_start + cfg.window_days};
        e.train.feature_dim = e.test.feature_dim = cfg.feature_dim;
        e.train.class_count = e.test.class_count = 2;
        e.train.class_names = e.test.class_names = {"goodware", "malware"};

        for (int c = 0; c < 2; ++c) {
            const int n = c == 0 ? n_gw : n_mw;
            Rng rng = make_rng(derive_seed(seed, "samples",
                                           static_cast<std::uint64_t>(k) * 2 + c));
            std::uniform_int_distribution<std::int64_t> ts(t_start, t_start + cfg.window_days - 1);
            std::vector<SparseSample> samples;
            samples.reserve(n);
            for (int i = 0; i < n; ++i) {
                auto s = detail::noisy_sample(protos[c], c, cfg.flip_noise, rng);
                s.timestamp = ts(rng);
                samples.push_back(std::move(s));
            }
            detail::split_samples(std::move(samples), cfg.dil_train_fraction,
                                  derive_seed(seed, "dil-split",
                                              static_cast<std::uint64_t>(k) * 2 + c),
                                  e.train, e.test);
        }
        stream.push_back(std::move(e));
    }
    return stream;
}

/// Multi-class stream with a growing label space. Class contents depend only
/// on (cfg, seed); order_seed controls just the partition of classes into
/// experiences, so two orders of the same seed see identical class data.
inline std::vector<Experience> synth_cil_generate(const SynthConfig& cfg, std::uint64_t seed,
                                                  std::uint64_t order_seed) {
    cfg.validate();

    struct ClassData {
        Dataset train, test;
    };
    std::vector<ClassData> classes(cfg.classes_total);
    for (int c = 0; c < cfg.classes_total; ++c) {
        Rng prng = make_rng(derive_seed(seed, "proto", static_cast<std::uint64_t>(c)));
        auto proto = detail::random_prototype(cfg.feature_dim, cfg.prototype_density, prng);
        Rng srng = make_rng(derive_seed(seed, "class-samples", static_cast<std::uint64_t>(c)));
        std::vector<SparseSample> samples;
        samples.reserve(cfg.samples_per_class);
        for (int i = 0; i < cfg.samples_per_class; ++i)
            samples.push_back(detail::noisy_sample(proto, c, cfg.flip_noise, srng));
        detail::split_samples(std::move(samples), cfg.cil_train_fraction,
                              derive_seed(seed, "cil-split", static_cast<std::uint64_t>(c)),
                              classes[c].train, classes[c].test);
    }

    std::vector<int> order(cfg.classes_total);
    std::iota(order.begin(), order.end(), 0);
    {
        Rng rng = make_rng(derive_seed(order_seed, "cil-order"));
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<Experience> stream;
    const int k_total = cfg.classes_total / cfg.classes_per_experience;
    for (int k = 0; k < k_total; ++k) {
        Experience e;
        e.id = k + 1;
        std::vector<int> group(order.begin() + k * cfg.classes_per_experience,
                               order.begin() + (k + 1) * cfg.classes_per_experience);
        std::sort(group.begin(), group.end());
        e.classes = group;
        e.train.feature_dim = e.test.feature_dim = cfg.feature_dim;
        e.train.class_count = e.test.class_count = cfg.classes_total;
        for (int c : group) {
            for (const auto& s : classes[c].train.samples) e.train.samples.push_back(s);
            for (const auto& s : classes[c].test.samples) e.test.samples.push_back(s);
        }
        stream.push_back(std::move(e));
    }
    return stream;
}

/// Wraps a generated experience list into a stream.
inline ScenarioStream make_stream(Scenario kind, std::vector<Experience> experiences) {
    ScenarioStream stream;
    stream.kind = kind;
    stream.experiences = std::move(experiences);
    return stream;
}

} // namespace regcl
