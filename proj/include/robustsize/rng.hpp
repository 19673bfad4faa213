#pragma once

#include <cstdint>
#include <random>

#include "robustsize/numeric.hpp"

namespace robustsize {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ bit generator (period 2^256 - 1). Each Monte Carlo
/// replication gets its own engine derived from (seed, stream, index), so
/// results do not depend on worker count or scheduling.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    Xoshiro256pp(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3)
        : s_{s0, s1, s2, s3} {
        if ((s0 | s1 | s2 | s3) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
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

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

/// Deterministic substream for replication `index` of logical stream
/// `stream` under a master seed. The (seed, stream, index) -> engine map is
/// the normative reproducibility contract; the generator algorithm is not.
inline Xoshiro256pp substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t state = seed;
    state ^= 0x6a09e667f3bcc908ULL + splitmix64(state);
    state ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    splitmix64(state);
    state ^= index * 0x9e3779b97f4a7c15ULL;
    const std::uint64_t s0 = splitmix64(state);
    const std::uint64_t s1 = splitmix64(state);
    const std::uint64_t s2 = splitmix64(state);
    const std::uint64_t s3 = splitmix64(state);
    return Xoshiro256pp(s0, s1, s2, s3);
}

template <class Engine>
void fill_standard_normal(Engine& engine, Vector& out) {
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal(engine);
}

}  // namespace robustsize
