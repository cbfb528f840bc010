#pragma once

#include <cstdint>

namespace m2::numerics {

// SplitMix64 finalizer. Used both as the counter-based generator core and as
// the hash for deriving per-sample / per-stream seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Counter-based splittable generator: output i is mix64(key + i). Splitting
// derives an independent key from (key, stream), so seeds for samples, steps
// and rollouts can be derived deterministically without sharing state.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix64(seed)) {}

    Rng split(uint64_t stream) const { return Rng(hash_combine(key_, stream), 0); }

    uint64_t next_u64() { return mix64(key_ + ++ctr_); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double normal();

    // Uniform integer in [0, n), n > 0. Rejection-free modulo is fine here:
    // n is tiny compared to 2^64, the bias is unobservable at desk scale.
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    Rng(uint64_t key, uint64_t ctr) : key_(key), ctr_(ctr) {}

    uint64_t key_;
    uint64_t ctr_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace m2::numerics
