#include "rara/random.hpp"

#include <cmath>

namespace rara {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(base) ^ (index * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL));
}

std::complex<double> complex_gaussian(Rng& rng, double variance) {
  if (variance <= 0.0) return {0.0, 0.0};
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

}  // namespace rara
