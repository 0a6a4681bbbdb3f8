#pragma once

#include <cstdint>

namespace fluxcast::num {

// Deterministic PRNG with a bit-exact cross-platform stream.
//
// The generator is SplitMix64 (Steele, Lea, Flood 2014): 64-bit state
// advanced by the golden-gamma constant, output through a two-round
// xor-multiply finalizer. Sub-streams for parallel sweep cells are derived
// by hashing (root seed, key) through the same finalizer, so the child
// stream depends only on the root seed and the key, never on how much of
// the parent stream has been consumed.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53 mantissa bits.
    double next_double();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; draws pairs, caches the second.
    double next_normal();

    // Independent child stream; deterministic in (seed, key).
    RandomSource split(std::uint64_t key) const;

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace fluxcast::num
