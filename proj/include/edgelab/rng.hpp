#pragma once

#include <cstdint>
#include <random>

namespace edgelab {

/// SplitMix64 step; used to derive independent seed streams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Purpose tags keep per-replicate streams independent of each other and of
/// scheduling: stream(master, replicate, purpose) is a pure function.
enum class StreamPurpose : std::uint64_t {
    SparseMatrix = 0x01,
    GoeMatrix = 0x02,
    GoeReference = 0x03,
    DysonNoise = 0x04,
    Bootstrap = 0x05,
    EntryDraws = 0x06,
    Control = 0x07,
};

/// Counter-based split: mixes (master, replicate, purpose) into a 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                                 StreamPurpose purpose) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0xda3e39cb94b95bdbULL * (replicate + 1);
    splitmix64(s);
    s ^= 0x9e6c63d0876a9a35ULL * static_cast<std::uint64_t>(purpose);
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t replicate,
                                   StreamPurpose purpose) {
    return std::mt19937_64(derive_seed(master, replicate, purpose));
}

}  // namespace edgelab
