#pragma once

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "regcl/mlp.hpp"
#include "regcl/scenario.hpp"

namespace regcl {

struct SnapshotMeta {
    int experience_id = 0;
    std::uint32_t seed = 0;
    Scenario scenario = Scenario::dil;
    std::vector<int> seen_classes; // sorted
};

/// Immutable frozen copy of a model, used as the previous parameterization
/// for distillation penalties and flip metrics.
class ModelSnapshot {
public:
    ModelSnapshot(const MlpModel& model, SnapshotMeta meta)
        : model_(model), meta_(std::move(meta)) {
        std::sort(meta_.seen_classes.begin(), meta_.seen_classes.end());
    }

    const MlpModel& model() const { return model_; }
    const SnapshotMeta& meta() const { return meta_; }

    /// The snapshot's own view of the label space.
    ClassMask mask() const {
        if (meta_.scenario == Scenario::dil || meta_.seen_classes.empty())
            return ClassMask::all(model_.output_dim());
        return ClassMask::of_classes(model_.output_dim(), meta_.seen_classes);
    }

private:
    MlpModel model_;
    SnapshotMeta meta_;
};

inline std::vector<int> predict(const ModelSnapshot& snap,
                                std::span<const SparseSample> samples) {
    return predict(snap.model(), samples, snap.mask());
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    const unsigned char* p;
    const unsigned char* end;
    std::string what;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw data_error("truncated snapshot file: " + what);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

} // namespace detail

// Snapshot file layout (all integers little-endian u32, reals little-endian
// f64): magic "RCL1"; version=1; scenario (0=DIL, 1=CIL); experience_id;
// seed; input_dim; hidden_dim; output_dim; seen_class_count; seen class ids;
// then w1, b1, w2, b2 row-major.
inline void save_snapshot(const ModelSnapshot& snap, const std::filesystem::path& path) {
    std::string out;
    out.append("RCL1");
    detail::put_u32(out, 1);
    detail::put_u32(out, snap.meta().scenario == Scenario::cil ? 1 : 0);
    detail::put_u32(out, static_cast<std::uint32_t>(snap.meta().experience_id));
    detail::put_u32(out, snap.meta().seed);
    detail::put_u32(out, static_cast<std::uint32_t>(snap.model().input_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(snap.model().hidden_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(snap.model().output_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(snap.meta().seen_classes.size()));
    for (int c : snap.meta().seen_classes)
        detail::put_u32(out, static_cast<std::uint32_t>(c));
    for (double p : snap.model().parameters()) detail::put_f64(out, p);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw data_error("cannot write snapshot file: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw data_error("short write on snapshot file: " + path.string());
}

inline ModelSnapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open snapshot file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()),
                         reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size(),
                         path.string()};
    r.need(4);
    if (std::memcmp(r.p, "RCL1", 4) != 0)
        throw data_error("not a snapshot file (bad magic): " + path.string());
    r.p += 4;
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw data_error("unsupported snapshot version " + std::to_string(version));

    SnapshotMeta meta;
    const std::uint32_t scenario = r.u32();
    if (scenario > 1) throw data_error("bad scenario tag in snapshot: " + path.string());
    meta.scenario = scenario == 1 ? Scenario::cil : Scenario::dil;
    meta.experience_id = static_cast<int>(r.u32());
    meta.seed = r.u32();
    const auto input_dim = static_cast<int>(r.u32());
    const auto hidden_dim = static_cast<int>(r.u32());
    const auto output_dim = static_cast<int>(r.u32());
    const std::uint32_t n_seen = r.u32();
    for (std::uint32_t i = 0; i < n_seen; ++i)
        meta.seen_classes.push_back(static_cast<int>(r.u32()));

    MlpModel model(input_dim, hidden_dim, output_dim);
    std::vector<double> params(model.parameter_count());
    for (auto& p : params) p = r.f64();
    if (r.p != r.end) throw data_error("trailing bytes in snapshot file: " + path.string());
    model.set_parameters(params);
    return {model, std::move(meta)};
}

} // namespace regcl
