#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "regcl/errors.hpp"
#include "regcl/metrics.hpp"
#include "regcl/pct.hpp"
#include "regcl/strategies.hpp"
#include "regcl/synth.hpp"

namespace regcl {

enum class DataSource { synth, sparse };
enum class FilterMode { automatic, off, first, global };

/// Fully-defaulted experiment description. Flat dotted keys, so configs stay
/// diff-friendly across experiment matrices.
struct RunConfig {
    Scenario scenario = Scenario::dil;

    DataSource data_source = DataSource::synth;
    std::string data_path;

    FilterMode filter_mode = FilterMode::automatic; // resolves to first (sparse) or off (synth)
    double filter_threshold = 1e-3;

    SynthConfig synth;

    std::int64_t dil_window_days = 90;
    double dil_train_fraction = 0.8;
    int cil_classes_per_experience = 10;
    double cil_train_fraction = 0.9;

    std::string strategy = "naive";
    StrategyParams strategy_params;
    std::size_t replay_capacity = 0; // 0 = per-scenario default (200 / 1000)
    std::size_t agem_capacity = 0;

    PctConfig pct;

    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int hidden_dim = 512;

    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    ForgettingMode forgetting_mode = ForgettingMode::max;

    std::string out_dir = "out";
    bool keep_all_snapshots = false;
    int threads = 0; // 0 = min(#seeds, hardware)

    FilterMode resolved_filter_mode() const {
        if (filter_mode != FilterMode::automatic) return filter_mode;
        return data_source == DataSource::sparse ? FilterMode::first : FilterMode::off;
    }

    std::size_t resolved_replay_capacity() const {
        if (replay_capacity != 0) return replay_capacity;
        return scenario == Scenario::dil ? 200 : 1000;
    }
    std::size_t resolved_agem_capacity() const {
        if (agem_capacity != 0) return agem_capacity;
        return scenario == Scenario::dil ? 200 : 1000;
    }

    void validate() const;
    std::map<std::string, std::string> canonical() const;
    std::string digest() const;      // all keys
    std::string data_digest() const; // data-shaping keys only
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

inline long long parse_long(const std::string& key, const std::string& value) {
    long long v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw config_error("config key '" + key + "': expected an integer, got '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw config_error("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_long;

    auto positive_long = [&](const char* what) {
        const long long v = parse_long(key, value);
        if (v <= 0) throw config_error("config key '" + key + "': " + what + " must be positive");
        return v;
    };

    if (key == "scenario") {
        if (value == "dil") cfg.scenario = Scenario::dil;
        else if (value == "cil") cfg.scenario = Scenario::cil;
        else throw config_error("config key 'scenario': expected dil|cil, got '" + value + "'");
    } else if (key == "data.source") {
        if (value == "synth") cfg.data_source = DataSource::synth;
        else if (value == "sparse") cfg.data_source = DataSource::sparse;
        else throw config_error("config key 'data.source': expected synth|sparse");
    } else if (key == "data.path") {
        cfg.data_path = value;
    } else if (key == "filter.mode") {
        if (value == "off") cfg.filter_mode = FilterMode::off;
        else if (value == "first") cfg.filter_mode = FilterMode::first;
        else if (value == "global") cfg.filter_mode = FilterMode::global;
        else if (value == "auto") cfg.filter_mode = FilterMode::automatic;
        else throw config_error("config key 'filter.mode': expected off|first|global|auto");
    } else if (key == "filter.threshold") {
        cfg.filter_threshold = parse_double(key, value);
        if (cfg.filter_threshold < 0) throw config_error("filter.threshold must be >= 0");
    } else if (key == "synth.feature_dim") {
        cfg.synth.feature_dim = static_cast<std::uint32_t>(positive_long("feature_dim"));
    } else if (key == "synth.experiences") {
        cfg.synth.experiences = static_cast<int>(positive_long("experiences"));
    } else if (key == "synth.samples_per_class") {
        cfg.synth.samples_per_class = static_cast<int>(positive_long("samples_per_class"));
    } else if (key == "synth.ratio") {
        const auto colon = value.find(':');
        if (colon == std::string::npos)
            throw config_error("config key 'synth.ratio': expected <gw>:<mw>, got '" + value + "'");
        cfg.synth.ratio_goodware = static_cast<int>(parse_long(key, value.substr(0, colon)));
        cfg.synth.ratio_malware = static_cast<int>(parse_long(key, value.substr(colon + 1)));
    } else if (key == "synth.density") {
        cfg.synth.prototype_density = parse_double(key, value);
    } else if (key == "synth.drift") {
        cfg.synth.drift_rate = parse_double(key, value);
    } else if (key == "synth.noise") {
        cfg.synth.flip_noise = parse_double(key, value);
    } else if (key == "synth.class_separation") {
        cfg.synth.class_separation = parse_double(key, value);
    } else if (key == "synth.classes_total") {
        cfg.synth.classes_total = static_cast<int>(positive_long("classes_total"));
    } else if (key == "synth.classes_per_experience") {
        cfg.synth.classes_per_experience = static_cast<int>(positive_long("classes_per_experience"));
    } else if (key == "synth.window_days") {
        cfg.synth.window_days = positive_long("window_days");
    } else if (key == "dil.window_days") {
        cfg.dil_window_days = positive_long("window_days");
    } else if (key == "dil.train_fraction") {
        cfg.dil_train_fraction = parse_double(key, value);
    } else if (key == "cil.classes_per_experience") {
        cfg.cil_classes_per_experience = static_cast<int>(positive_long("classes_per_experience"));
    } else if (key == "cil.train_fraction") {
        cfg.cil_train_fraction = parse_double(key, value);
    } else if (key == "strategy") {
        cfg.strategy = value;
    } else if (key == "replay.capacity") {
        cfg.replay_capacity = static_cast<std::size_t>(positive_long("capacity"));
    } else if (key == "agem.capacity") {
        cfg.agem_capacity = static_cast<std::size_t>(positive_long("capacity"));
    } else if (key == "agem.ref_batch") {
        cfg.strategy_params.agem_ref_batch = static_cast<int>(positive_long("ref_batch"));
    } else if (key == "ewc.lambda") {
        cfg.strategy_params.ewc_lambda = parse_double(key, value);
    } else if (key == "ewc.fisher_cap") {
        cfg.strategy_params.ewc_fisher_cap = static_cast<std::size_t>(positive_long("fisher_cap"));
    } else if (key == "si.lambda") {
        cfg.strategy_params.si_lambda = parse_double(key, value);
    } else if (key == "si.epsilon") {
        cfg.strategy_params.si_damping = parse_double(key, value);
    } else if (key == "lwf.alpha") {
        cfg.strategy_params.lwf_alpha = parse_double(key, value);
    } else if (key == "lwf.temperature") {
        cfg.strategy_params.lwf_temperature = parse_double(key, value);
        if (cfg.strategy_params.lwf_temperature <= 0)
            throw config_error("lwf.temperature must be positive");
    } else if (key == "pct.enabled") {
        cfg.pct.enabled = parse_bool(key, value);
    } else if (key == "pct.alpha") {
        cfg.pct.alpha = parse_double(key, value);
    } else if (key == "pct.beta") {
        cfg.pct.beta = parse_double(key, value);
    } else if (key == "pct.lambda") {
        cfg.pct.lambda = parse_double(key, value);
    } else if (key == "train.epochs") {
        cfg.epochs = static_cast<int>(positive_long("epochs"));
    } else if (key == "train.batch") {
        cfg.batch_size = static_cast<int>(positive_long("batch"));
    } else if (key == "train.lr") {
        cfg.learning_rate = parse_double(key, value);
        if (cfg.learning_rate <= 0) throw config_error("train.lr must be positive");
    } else if (key == "train.momentum") {
        cfg.momentum = parse_double(key, value);
        if (cfg.momentum < 0 || cfg.momentum >= 1)
            throw config_error("train.momentum must lie in [0, 1)");
    } else if (key == "train.hidden") {
        cfg.hidden_dim = static_cast<int>(positive_long("hidden"));
    } else if (key == "seeds") {
        std::vector<std::uint64_t> seeds;
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            seeds.push_back(static_cast<std::uint64_t>(parse_long(key, tok)));
        }
        if (seeds.empty()) throw config_error("config key 'seeds': need at least one seed");
        cfg.seeds = std::move(seeds);
    } else if (key == "forgetting.mode") {
        cfg.forgetting_mode = forgetting_mode_from_string(value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "snapshots.keep_all") {
        cfg.keep_all_snapshots = parse_bool(key, value);
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_long(key, value));
        if (cfg.threads < 0) throw config_error("threads must be >= 0");
    } else {
        throw config_error("unknown config key: '" + key + "'");
    }
}

inline void RunConfig::validate() const {
    pct.validate();
    if (data_source == DataSource::synth) {
        synth.validate();
    } else if (data_path.empty()) {
        throw config_error("data.source=sparse requires data.path");
    }
    if (dil_train_fraction <= 0 || dil_train_fraction >= 1 || cil_train_fraction <= 0 ||
        cil_train_fraction >= 1)
        throw config_error("train fractions must lie in (0, 1)");
    if (strategy_params.ewc_lambda < 0 || strategy_params.si_lambda < 0 ||
        strategy_params.lwf_alpha < 0)
        throw config_error("strategy penalty weights must be >= 0");
    if (strategy_params.si_damping <= 0)
        throw config_error("si.epsilon must be positive");
    // rejects unknown strategy names early, before any work happens
    StrategyParams p = strategy_params;
    p.replay_capacity = resolved_replay_capacity();
    p.agem_capacity = resolved_agem_capacity();
    (void)make_strategy(strategy, p);
}

inline std::map<std::string, std::string> RunConfig::canonical() const {
    using detail::fmt_double;
    std::map<std::string, std::string> kv;
    kv["scenario"] = scenario == Scenario::dil ? "dil" : "cil";
    kv["data.source"] = data_source == DataSource::synth ? "synth" : "sparse";
    kv["data.path"] = data_path;
    switch (resolved_filter_mode()) {
    case FilterMode::off: kv["filter.mode"] = "off"; break;
    case FilterMode::first: kv["filter.mode"] = "first"; break;
    case FilterMode::global: kv["filter.mode"] = "global"; break;
    case FilterMode::automatic: kv["filter.mode"] = "auto"; break;
    }
    kv["filter.threshold"] = fmt_double(filter_threshold);
    kv["synth.feature_dim"] = std::to_string(synth.feature_dim);
    kv["synth.experiences"] = std::to_string(synth.experiences);
    kv["synth.samples_per_class"] = std::to_string(synth.samples_per_class);
    kv["synth.ratio"] = std::to_string(synth.ratio_goodware) + ":" + std::to_string(synth.ratio_malware);
    kv["synth.density"] = fmt_double(synth.prototype_density);
    kv["synth.drift"] = fmt_double(synth.drift_rate);
    kv["synth.noise"] = fmt_double(synth.flip_noise);
    kv["synth.class_separation"] = fmt_double(synth.class_separation);
    kv["synth.classes_total"] = std::to_string(synth.classes_total);
    kv["synth.classes_per_experience"] = std::to_string(synth.classes_per_experience);
    kv["synth.window_days"] = std::to_string(synth.window_days);
    kv["dil.window_days"] = std::to_string(dil_window_days);
    kv["dil.train_fraction"] = fmt_double(dil_train_fraction);
    kv["cil.classes_per_experience"] = std::to_string(cil_classes_per_experience);
    kv["cil.train_fraction"] = fmt_double(cil_train_fraction);
    kv["strategy"] = strategy;
    kv["replay.capacity"] = std::to_string(resolved_replay_capacity());
    kv["agem.capacity"] = std::to_string(resolved_agem_capacity());
    kv["agem.ref_batch"] = std::to_string(strategy_params.agem_ref_batch);
    kv["ewc.lambda"] = fmt_double(strategy_params.ewc_lambda);
    kv["ewc.fisher_cap"] = std::to_string(strategy_params.ewc_fisher_cap);
    kv["si.lambda"] = fmt_double(strategy_params.si_lambda);
    kv["si.epsilon"] = fmt_double(strategy_params.si_damping);
    kv["lwf.alpha"] = fmt_double(strategy_params.lwf_alpha);
    kv["lwf.temperature"] = fmt_double(strategy_params.lwf_temperature);
    kv["pct.enabled"] = pct.enabled ? "true" : "false";
    kv["pct.alpha"] = fmt_double(pct.alpha);
    kv["pct.beta"] = fmt_double(pct.beta);
    kv["pct.lambda"] = fmt_double(pct.lambda);
    kv["train.epochs"] = std::to_string(epochs);
    kv["train.batch"] = std::to_string(batch_size);
    kv["train.lr"] = fmt_double(learning_rate);
    kv["train.momentum"] = fmt_double(momentum);
    kv["train.hidden"] = std::to_string(hidden_dim);
    std::string s;
    for (auto v : seeds) {
        if (!s.empty()) s += ',';
        s += std::to_string(v);
    }
    kv["seeds"] = s;
    switch (forgetting_mode) {
    case ForgettingMode::max: kv["forgetting.mode"] = "max"; break;
    case ForgettingMode::prev: kv["forgetting.mode"] = "prev"; break;
    case ForgettingMode::self: kv["forgetting.mode"] = "self"; break;
    }
    kv["snapshots.keep_all"] = keep_all_snapshots ? "true" : "false";
    return kv;
}

namespace detail {

inline std::string digest_of(const std::map<std::string, std::string>& kv) {
    std::string blob;
    for (const auto& [k, v] : kv) {
        blob += k;
        blob += '=';
        blob += v;
        blob += '\n';
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    return buf;
}

} // namespace detail

inline std::string RunConfig::digest() const { return detail::digest_of(canonical()); }

/// Hash of the keys that shape the data stream only: two runs that differ
/// just in strategy/penalty train on identical experiences.
inline std::string RunConfig::data_digest() const {
    auto kv = canonical();
    std::map<std::string, std::string> data_kv;
    for (const auto& [k, v] : kv) {
        if (k == "scenario" || k == "seeds" || k.rfind("data.", 0) == 0 ||
            k.rfind("filter.", 0) == 0 || k.rfind("synth.", 0) == 0 ||
            k.rfind("dil.", 0) == 0 || k.rfind("cil.", 0) == 0)
            data_kv[k] = v;
    }
    return detail::digest_of(data_kv);
}

/// Reads `key = value` lines ('#' comments). CLI overrides win over file keys.
inline RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    RunConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw config_error("cannot open config file: " + file->string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error(file->filename().string() + ":" + std::to_string(lineno) +
                                   ": expected key = value");
            apply_config_key(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
        }
    }
    for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
    cfg.validate();
    return cfg;
}

} // namespace regcl
