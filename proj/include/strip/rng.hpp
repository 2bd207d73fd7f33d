#pragma once

#include <cstdint>
#include <string_view>

// Self-contained counter-free PRNG so that every stream is a pure function of
// its 64-bit seed, bit-identical across platforms and releases.

namespace strip {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed derivation, schema version 1.  Stable contract: the derived seed is
//   mix64(mix64(master ^ fnv1a64(label)) + 0x9e3779b97f4a7c15 * (index + 1)).
// The golden-ratio increment is odd, so distinct indices under the same
// (master, label) never collide.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    std::uint64_t h = mix64(master ^ fnv1a64(label));
    return mix64(h + 0x9e3779b97f4a7c15ULL * (index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// One uniform per (seed, stream, index); used for index-addressable
// environment letters so windows can be grown in either direction without
// replaying a sequential generator.
inline double indexed_uniform(std::uint64_t seed, std::uint64_t stream, std::int64_t index) {
    std::uint64_t h = mix64(seed ^ stream);
    h = mix64(h + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace strip
