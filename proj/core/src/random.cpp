#include "loopsim/random.hpp"

#include <bit>

namespace loopsim {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t part : parts) h = mix64(h ^ mix64(part));
  return h;
}

std::uint64_t double_bits(double value) noexcept {
  // Fold -0.0 onto 0.0 so equal keys hash equally.
  if (value == 0.0) value = 0.0;
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace loopsim
