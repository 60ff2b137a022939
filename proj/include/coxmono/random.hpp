#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace coxmono {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `seed`:
///     derive_seed(s, i) = mix64(mix64(s) ^ mix64(i ^ 0xD1B54A32D192ED03)).
/// Every per-observation and per-replicate stream in the library is obtained
/// this way, so results never depend on generation order or thread count.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index ^ 0xD1B54A32D192ED03ull));
}

/// Three-level variant used when a stream needs a tag (e.g. split vs resample).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t index) noexcept {
    return derive_seed(derive_seed(seed, tag), index);
}

/// Small portable generator (SplitMix64 sequence). Variates are produced by
/// explicit inverse-CDF / Box-Muller formulas rather than <random>
/// distributions, whose algorithms differ between standard libraries.
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Exp(1) by inversion.
    double exponential() noexcept { return -std::log(uniform()); }

    /// Standard normal, Box-Muller with a cached second variate.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    /// Uniform integer in [0, bound) by Lemire's multiply-shift (bound > 0).
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace coxmono
