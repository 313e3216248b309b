#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "regcl/errors.hpp"

namespace regcl {

/// One observation: the sorted indices of its active binary features, its
/// class label, and (for time-ordered data) a day-resolution timestamp.
struct SparseSample {
    std::vector<std::uint32_t> features; // strictly increasing
    int label = 0;
    std::optional<std::int64_t> timestamp; // days since epoch

    bool has_feature(std::uint32_t f) const {
        return std::binary_search(features.begin(), features.end(), f);
    }
};

struct Dataset {
    std::vector<SparseSample> samples;
    std::uint32_t feature_dim = 0;
    int class_count = 0;
    std::vector<std::string> class_names; // optional

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

struct SparseTextOptions {
    bool require_timestamps = false;
};

namespace detail {

inline bool parse_int(std::string_view tok, long long& out) {
    if (tok.empty()) return false;
    std::size_t i = tok[0] == '-' ? 1 : 0;
    if (i == tok.size()) return false;
    long long v = 0;
    for (; i < tok.size(); ++i) {
        if (tok[i] < '0' || tok[i] > '9') return false;
        v = v * 10 + (tok[i] - '0');
    }
    out = tok[0] == '-' ? -v : v;
    return true;
}

} // namespace detail

/// Reads the sparse text format: one sample per line,
///   <label> [t=<days>] (<feature>:1)*
/// '#'-prefixed lines are comments. Feature indices must be strictly
/// increasing. feature_dim and class_count are inferred from the data.
inline Dataset load_sparse_text(const std::filesystem::path& path,
                                const SparseTextOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file: " + path.string());

    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    std::uint32_t max_feature = 0;
    int max_label = -1;
    bool any_feature = false;

    auto fail = [&](const std::string& what) {
        throw data_error(path.filename().string() + ":" + std::to_string(lineno) +
                         ": " + what);
    };

    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue; // blank
        if (line[first] == '#') continue;         // comment

        std::istringstream ls(line);
        std::string tok;

        ls >> tok;
        long long label = 0;
        if (!detail::parse_int(tok, label) || label < 0)
            fail("expected non-negative integer label, got '" + tok + "'");

        SparseSample s;
        s.label = static_cast<int>(label);

        bool first_tok = true;
        while (ls >> tok) {
            if (first_tok && tok.rfind("t=", 0) == 0) {
                long long ts = 0;
                if (!detail::parse_int(tok.substr(2), ts))
                    fail("malformed timestamp token '" + tok + "'");
                s.timestamp = ts;
                first_tok = false;
                continue;
            }
            first_tok = false;
            std::size_t colon = tok.find(':');
            if (colon == std::string::npos || tok.substr(colon + 1) != "1")
                fail("malformed feature token '" + tok + "' (expected <index>:1)");
            long long f = 0;
            if (!detail::parse_int(tok.substr(0, colon), f) || f < 0)
                fail("malformed feature index in '" + tok + "'");
            auto fi = static_cast<std::uint32_t>(f);
            if (!s.features.empty()) {
                if (fi == s.features.back())
                    fail("duplicate feature index " + std::to_string(fi));
                if (fi < s.features.back())
                    fail("features must be strictly increasing");
            }
            s.features.push_back(fi);
        }

        if (opt.require_timestamps && !s.timestamp)
            fail("missing timestamp (t=<days>) on a time-ordered sample");

        if (!s.features.empty()) {
            max_feature = std::max(max_feature, s.features.back());
            any_feature = true;
        }
        max_label = std::max(max_label, s.label);
        ds.samples.push_back(std::move(s));
    }

    if (ds.samples.empty()) throw data_error("empty dataset: " + path.string());
    ds.feature_dim = any_feature ? max_feature + 1 : 0;
    ds.class_count = max_label + 1;
    return ds;
}

inline void save_sparse_text(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write dataset file: " + path.string());
    for (const auto& s : ds.samples) {
        out << s.label;
        if (s.timestamp) out << " t=" << *s.timestamp;
        for (auto f : s.features) out << ' ' << f << ":1";
        out << '\n';
    }
}

/// Variance-threshold feature selection. For a binary feature active with
/// frequency p over the training samples, the variance is p(1-p); features
/// with variance below the threshold are dropped. Fit on training data only.
struct FeatureFilter {
    std::vector<std::uint32_t> kept; // sorted original indices
    double threshold = 1e-3;
    std::uint32_t original_dim = 0; // 0 when unknown (filter loaded from file)
};

inline FeatureFilter variance_filter_fit(const Dataset& train, double threshold = 1e-3) {
    if (train.empty()) throw data_error("variance filter: empty training set");
    std::vector<std::uint64_t> counts(train.feature_dim, 0);
    for (const auto& s : train.samples)
        for (auto f : s.features) ++counts[f];
    FeatureFilter filter;
    filter.threshold = threshold;
    filter.original_dim = train.feature_dim;
    const double n = static_cast<double>(train.size());
    for (std::uint32_t f = 0; f < train.feature_dim; ++f) {
        const double p = static_cast<double>(counts[f]) / n;
        if (p * (1.0 - p) >= threshold) filter.kept.push_back(f);
    }
    return filter;
}

/// Remaps surviving features to dense indices, preserving order. Samples whose
/// active set becomes empty are kept: an all-zero input is legal.
inline Dataset apply_filter(const FeatureFilter& filter, const Dataset& ds) {
    if (filter.kept.empty()) throw data_error("feature filter removed all features");
    std::vector<std::int64_t> remap;
    const std::uint32_t dim = std::max<std::uint32_t>(
        filter.original_dim, filter.kept.back() + 1);
    remap.assign(dim, -1);
    for (std::uint32_t i = 0; i < filter.kept.size(); ++i)
        remap[filter.kept[i]] = i;

    Dataset out;
    out.feature_dim = static_cast<std::uint32_t>(filter.kept.size());
    out.class_count = ds.class_count;
    out.class_names = ds.class_names;
    out.samples.reserve(ds.size());
    for (const auto& s : ds.samples) {
        SparseSample r;
        r.label = s.label;
        r.timestamp = s.timestamp;
        for (auto f : s.features) {
            if (filter.original_dim != 0 && f >= filter.original_dim)
                throw data_error("feature index " + std::to_string(f) +
                                 " beyond the filter's original space (" +
                                 std::to_string(filter.original_dim) + ")");
            if (f < dim && remap[f] >= 0)
                r.features.push_back(static_cast<std::uint32_t>(remap[f]));
        }
        out.samples.push_back(std::move(r));
    }
    return out;
}

/// Filter file: first line `threshold=<real>`, then kept indices one per line.
inline void save_filter(const FeatureFilter& filter, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write filter file: " + path.string());
    out << "threshold=" << filter.threshold << '\n';
    for (auto f : filter.kept) out << f << '\n';
}

inline FeatureFilter load_filter(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open filter file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("threshold=", 0) != 0)
        throw data_error("filter file must start with threshold=<real>: " + path.string());
    FeatureFilter filter;
    try {
        filter.threshold = std::stod(line.substr(10));
    } catch (const std::exception&) {
        throw data_error("malformed threshold in filter file: " + path.string());
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long f = 0;
        if (!detail::parse_int(line, f) || f < 0)
            throw data_error(path.filename().string() + ":" + std::to_string(lineno) +
                             ": malformed kept index '" + line + "'");
        if (!filter.kept.empty() && static_cast<std::uint32_t>(f) <= filter.kept.back())
            throw data_error(path.filename().string() + ":" + std::to_string(lineno) +
                             ": kept indices must be strictly increasing");
        filter.kept.push_back(static_cast<std::uint32_t>(f));
    }
    return filter;
}

} // namespace regcl
