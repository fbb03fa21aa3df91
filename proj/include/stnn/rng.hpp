#pragma once

#include <array>
#include <cstdint>

namespace stnn {

// xoshiro256** generator seeded through SplitMix64. The standard library
// distributions are implementation-defined, so uniform, index and normal
// sampling are implemented here to keep streams identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    // Independent child stream. The same (seed, stream) pair always yields the
    // same child, regardless of how much the parent has been advanced.
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer in [0, n), unbiased. n must be positive.
    std::uint64_t index(std::uint64_t n);
    // Standard normal via the Box-Muller transform.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Named child streams so that initialization, pair sampling and synthetic data
// never share draws.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kPairs = 2;
inline constexpr std::uint64_t kSynthetic = 3;
inline constexpr std::uint64_t kGradCheck = 4;
}  // namespace streams

}  // namespace stnn
