#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ramses {

using Rng = std::mt19937_64;

// 64-bit FNV-1a over an arbitrary byte string.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Per-stage seed derivation: the global seed plus a stage name yield an
// independent, reproducible stream regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    return splitmix64(seed ^ fnv1a64(stage));
}

inline Rng make_rng(std::uint64_t seed, std::string_view stage) {
    return Rng(derive_seed(seed, stage));
}

}  // namespace ramses
