#pragma once

#include <cstdint>
#include <vector>

namespace qrd {

// Deterministic generators with stable output across platforms. The standard
// library distributions are implementation-defined, so sampling is done by
// hand: splitmix64 for stream derivation, xoshiro256** as the workhorse,
// Box-Muller for gaussians, Fisher-Yates for shuffles.

std::uint64_t splitmix64_next(std::uint64_t& state);

// Stable derivation of an independent stream seed for (seed, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
  public:
    explicit Rng(std::uint64_t seed);
    // Substream derivation: statistically independent stream for (seed, index).
    static Rng substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double next_double();
    // Uniform integer in [0, bound), bound >= 1. Unbiased (rejection).
    std::uint64_t next_below(std::uint64_t bound);
    // Standard normal via Box-Muller (one spare cached).
    double next_gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

  private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace qrd
