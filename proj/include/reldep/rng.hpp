#pragma once

// Deterministic random streams. Every replication and every bootstrap draw
// gets its own engine keyed by a SplitMix64 hash of (seed, rep[, draw]), so
// results do not depend on scheduling or thread count.
//
// Engine: std::mt19937_64 (fully specified by the standard). Distributions
// come from Boost.Random, whose algorithms are fixed per Boost release; the
// stream layout is versioned by kStreamVersion.

#include <cstdint>
#include <random>

namespace reldep {

inline constexpr std::uint64_t kStreamVersion = 1;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t rep) noexcept {
    return splitmix64(splitmix64(splitmix64(seed ^ (kStreamVersion << 56)) ^ 0x5a4d0001ULL) ^ rep);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t rep, std::uint64_t draw) noexcept {
    return splitmix64(splitmix64(stream_key(seed, rep) ^ 0xb0075741ULL) ^ draw);
}

using Engine = std::mt19937_64;

inline Engine data_stream(std::uint64_t seed, std::uint64_t rep) { return Engine(stream_key(seed, rep)); }

inline Engine bootstrap_stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t draw) {
    return Engine(stream_key(seed, rep, draw));
}

} // namespace reldep
