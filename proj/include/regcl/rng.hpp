#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace regcl {

/// 64-bit FNV-1a, used to turn stage names into seed-stream tags.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed splitting rule: every randomized stage of a run draws its seed as
//   derive_seed(master, stage_name, index)
// where `stage_name` identifies the stage ("data", "init", "train", ...) and
// `index` disambiguates repeats (experience number, usually). Stages are
// independent, so e.g. changing the strategy never perturbs data generation.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index = 0) {
    std::uint64_t x = master;
    x = splitmix64(x ^ fnv1a64(stage));
    x = splitmix64(x ^ (index + 1) * 0x9e3779b97f4a7c15ULL);
    return x;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

} // namespace regcl
