#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace welsch {

/// SplitMix64-style avalanche of (base_seed, key). Replicate r of a sweep
/// always draws from the stream seeded with mix_seed(base_seed, r), so
/// parallel and serial schedules produce identical data.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t key) {
    std::uint64_t z = base ^ (key + 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// mt19937_64 engine with hand-rolled samplers. The engine's output sequence
/// is fixed by the standard and the transforms below are explicit, so streams
/// do not depend on the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; pairs are cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double rademacher() { return (engine_() & 1ULL) ? 1.0 : -1.0; }

    /// Pareto(shape, x_m = 1) standardized to zero mean and unit variance.
    /// Requires shape > 2 so both analytic moments exist.
    double pareto_standardized(double shape) {
        const double mean = shape / (shape - 1.0);
        const double var = shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
        const double raw = std::pow(1.0 - uniform01(), -1.0 / shape);
        return (raw - mean) / std::sqrt(var);
    }

    /// Student-t via Bailey's polar-free transform, standardized to unit
    /// variance. Requires df > 2.
    double student_standardized(double df) {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double t = std::sqrt(df * (std::pow(u1, -2.0 / df) - 1.0)) *
                         std::cos(2.0 * std::numbers::pi * u2);
        return t / std::sqrt(df / (df - 2.0));
    }

    /// Unbiased integer in [0, bound).
    std::uint64_t uniform_index(std::uint64_t bound) {
        const std::uint64_t threshold = (-bound) % bound;
        std::uint64_t v = engine_();
        while (v < threshold) v = engine_();
        return v % bound;
    }

    /// Fisher-Yates shuffle driven by uniform_index.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace welsch
