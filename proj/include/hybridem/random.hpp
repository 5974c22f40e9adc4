#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hybridem {

/// SplitMix64 finalizer. Used to derive independent per-sample seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the stream owned by Monte Carlo sample `index`:
/// splitmix64(splitmix64(master) ^ index). Stable across versions.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ index);
}

/// Explicit random stream handle. Not thread-safe; give each task its own.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0,1), 53-bit resolution; never returns 1.
    double uniform() {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return uniform_exponent_ == 1.0 ? u : std::pow(u, uniform_exponent_);
    }

    double normal() { return normal_(engine_); }

    /// Test hook: every uniform u is replaced by u^exponent. Skews all
    /// samplers driven by this stream, so statistical checks must fail.
    void skew_uniforms(double exponent) { uniform_exponent_ = exponent; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double uniform_exponent_ = 1.0;
};

}  // namespace hybridem
