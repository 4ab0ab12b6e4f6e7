#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace jdr {

// All randomness in the library flows from one root seed through named
// sub-streams, so any component can be re-run in isolation and results do
// not depend on execution order or scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive the seed of sub-stream `stream[index]` from a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(root ^ fnv1a(stream)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view stream,
                                std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(root, stream, index));
}

} // namespace jdr
