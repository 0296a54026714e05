#pragma once

#include <cmath>
#include <cstdint>

namespace thermnet {

// Counter-based RNG built on the splitmix64 finalizer. A stream is keyed by
// (seed, s1, s2); draws are a pure function of (key, counter), so results are
// independent of thread scheduling and work partitioning.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t s1 = 0, std::uint64_t s2 = 0) {
        key_ = mix(mix(seed + golden * (s1 + 1)) + golden * (s2 + 1));
    }

    std::uint64_t next_u64() { return mix(key_ + golden * ++counter_); }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

  private:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace thermnet
