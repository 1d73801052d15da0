#pragma once

#include <cstdint>

// Counter-based randomness for the simulator. Every draw is a pure
// function of (seed, stream tag, unit id), so replicates can run in any
// order, on any number of threads, and still produce bit-identical
// output. The mixer is the splitmix64 finalizer.

namespace sit::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Key for draw `id` on stream `tag` under `seed`.
constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t tag,
                            std::uint64_t id) noexcept {
    return mix(mix(seed ^ mix(tag)) + id);
}

// Sub-seed for replicate i of a run: mix(master + (i + 1) * golden ratio).
constexpr std::uint64_t replicate_seed(std::uint64_t master,
                                       std::uint64_t replicate) noexcept {
    return mix(master + (replicate + 1) * kGolden);
}

// Uniform on [0, 1) from the top 53 bits.
constexpr double uniform01(std::uint64_t k) noexcept {
    return static_cast<double>(k >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1); safe to feed a quantile function.
constexpr double uniform_open01(std::uint64_t k) noexcept {
    return static_cast<double>(k >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace sit::rng
