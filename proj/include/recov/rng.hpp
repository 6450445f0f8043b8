#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace recov {

// SplitMix64 step. Used for seed derivation only, never as the run RNG.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic per-stream seed: run i, role r -> derive_seed(master, i * kSeedStride + r).
// Streams are independent of execution order, which is what makes parallel runs
// reproduce the serial result exactly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL));
}

inline constexpr std::uint64_t kSeedStride = 8;
// Per-run stream roles.
inline constexpr std::uint64_t kStreamSplit = 0;
inline constexpr std::uint64_t kStreamLearner = 1;
inline constexpr std::uint64_t kStreamDrop = 2;
inline constexpr std::uint64_t kStreamGmm = 3;
// Whole-job streams (not per run).
inline constexpr std::uint64_t kStreamWarmStart = 0xFFFF0001;

// mt19937_64 with hand-rolled distributions. The engine is bit-exact per the
// standard; std::uniform_* distributions are not, so we do not use them.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1); never returns 0 so log() is safe.
    double uniform_open01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Marsaglia polar.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential(double rate) { return -std::log(uniform_open01()) / rate; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace recov
