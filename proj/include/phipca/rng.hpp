#pragma once

#include <cstdint>
#include <random>

namespace phipca {

// splitmix64 step; used to derive independent substreams from a single
// 64-bit seed so results do not depend on scheduling or thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    return h;
}

// Substream engine keyed by (seed, index, purpose).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t purpose = 0) {
    return std::mt19937_64(mix_seed(seed, index, purpose));
}

}  // namespace phipca
