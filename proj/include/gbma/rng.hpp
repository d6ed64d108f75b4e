#pragma once

/**
 * Counter-based random streams.
 *
 * Every random quantity in the simulator is drawn from a stream keyed by
 * (seed, purpose tag, indices...).  A stream is a pure function of its key
 * and an internal counter, so any draw can be reproduced in isolation:
 * the fading gain of node n at iteration k does not depend on how many
 * draws happened before it, on thread scheduling, or on other streams.
 */

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace gbma {

// Stream purpose tags.  Keeping them in one place guarantees distinct
// purposes can never collide on the same key.
enum : std::uint64_t {
    kStreamGains = 0x01,       // per-iteration fading gains
    kStreamNoise = 0x02,       // per-iteration aggregate channel noise
    kStreamDataset = 0x03,     // synthetic dataset generation
    kStreamProbe = 0x04,       // probe-region sampling for bound estimation
    kStreamReplication = 0x05, // per-replication sub-seed derivation
    kStreamValidation = 0x06,  // moment-validator draws
    kStreamMisc = 0x07,        // property-test sampling
};

// SplitMix64 finalizer: a well-mixed 64-bit permutation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds a key path (seed, tag, index, ...) into a single stream key.
// Each element is mixed before being combined so that nearby indices land
// far apart.
inline std::uint64_t derive_key(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t p : path) {
        key = mix64(key ^ mix64(p + 0x9e3779b97f4a7c15ULL));
    }
    return key;
}

/**
 * Counter-mode generator: output i is mix64(key + i * gamma).  Stateless
 * apart from the counter, cheap to construct, and two streams with
 * different keys are independent for simulation purposes.
 */
class StreamRng {
  public:
    explicit StreamRng(std::uint64_t key) : key_(key) {}

    StreamRng(std::uint64_t seed, std::uint64_t tag)
        : key_(derive_key(seed, {tag})) {}
    StreamRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t i0)
        : key_(derive_key(seed, {tag, i0})) {}
    StreamRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t i0,
              std::uint64_t i1)
        : key_(derive_key(seed, {tag, i0, i1})) {}

    std::uint64_t next_u64() {
        return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller (the sine branch is discarded so every
    // draw consumes exactly two counter steps).
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]: keeps log() finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Rayleigh with scale sigma, by inverse CDF (one counter step).
    double rayleigh(double sigma) {
        const double u = 1.0 - uniform();  // (0, 1]
        return sigma * std::sqrt(-2.0 * std::log(u));
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Sub-seed for replication r of a Monte Carlo batch.
inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t r) {
    return derive_key(base_seed, {kStreamReplication, r});
}

}  // namespace gbma
