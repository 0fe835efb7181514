#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace rara {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for stream `index` under `base`. Streams are stable across
/// thread counts because they depend only on (base, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
std::complex<double> complex_gaussian(Rng& rng, double variance);

}  // namespace rara
