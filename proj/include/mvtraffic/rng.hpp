#pragma once

// Small portable random source. The standard <random> distributions are
// implementation-defined, so everything seeded in this library goes through
// here to stay bit-identical across toolchains.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mvt::rng {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based key: a pure function of its inputs.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a) noexcept {
    return mix64(mix64(seed) ^ (a * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return derive(derive(seed, a), b);
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Unbiased integer in [0, n), n > 0 (Lemire's multiply-and-reject).
template <class Gen>
std::uint64_t bounded(Gen& gen, std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(gen.next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(gen.next()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

// Uniform in [0, 1) with 53 random bits.
template <class Gen>
double uniform01(Gen& gen) noexcept {
    return static_cast<double>(gen.next() >> 11) * 0x1.0p-53;
}

// Box-Muller, one variate per call so draws stay independent of call pairing.
template <class Gen>
double standard_normal(Gen& gen) noexcept {
    const double u1 = 1.0 - uniform01(gen);  // (0, 1]
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mvt::rng
