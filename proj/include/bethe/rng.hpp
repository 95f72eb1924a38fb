#pragma once

#include <cstdint>
#include <limits>

namespace bethe {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stream domains, so that leaves, pool steps and tree replicas never share a stream.
enum class StreamDomain : std::uint64_t {
    leaf = 1,
    step = 2,
    tree = 3,
    sample = 4,
    property = 5,
};

/// Counter-based random stream keyed by (seed, domain, a, b).
///
/// Every pool slot and tree replica owns its own stream derived purely from
/// its key, so results do not depend on how work is split across threads.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr CounterRng(std::uint64_t seed, StreamDomain domain, std::uint64_t a,
                         std::uint64_t b = 0) noexcept
        : state_(key(seed, domain, a, b)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), multiply-shift reduction.
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

private:
    static constexpr std::uint64_t key(std::uint64_t seed, StreamDomain domain, std::uint64_t a,
                                       std::uint64_t b) noexcept {
        std::uint64_t k = mix64(seed);
        k = mix64(k ^ static_cast<std::uint64_t>(domain));
        k = mix64(k ^ a);
        return mix64(k ^ (b * 0xD1B54A32D192ED03ull));
    }

    std::uint64_t state_;
};

}  // namespace bethe
