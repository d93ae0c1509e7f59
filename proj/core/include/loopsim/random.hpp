#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace loopsim {

using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent seeds from structured keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of seed components into a single seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Bit pattern of a double, for feeding real-valued keys into derive_seed.
std::uint64_t double_bits(double value) noexcept;

}  // namespace loopsim
