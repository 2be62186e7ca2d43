#ifndef SCMC_RNG_HPP
#define SCMC_RNG_HPP

#include <cstdint>
#include <random>

namespace scmc::rng {

// splitmix64 finalizer; used to derive statistically independent substream
// seeds from (seed, stage, particle, tag) counters. Per-particle substreams
// make results identical for any thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(seed ^ 0x8e9d5a1c6b3f2e71ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    return s;
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stage,
                                 std::uint64_t particle, std::uint64_t tag = 0) {
    return std::mt19937_64(mix(seed, stage, particle, tag));
}

}  // namespace scmc::rng

#endif  // SCMC_RNG_HPP
