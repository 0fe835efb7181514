#include "rara/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rara/errors.hpp"

namespace rara {
namespace {

void check_mean(double mean) {
  if (!std::isfinite(mean) || mean < 0.0)
    throw DomainError("poisson mean must be finite and non-negative, got " + std::to_string(mean));
}

constexpr double kNegligible = 1e-18;

}  // namespace

double poisson_log_pmf(std::int64_t k, double mean) {
  check_mean(mean);
  if (k < 0) throw DomainError("poisson pmf needs k >= 0, got " + std::to_string(k));
  if (mean == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const auto kd = static_cast<double>(k);
  return -mean + kd * std::log(mean) - std::lgamma(kd + 1.0);
}

double poisson_pmf(std::int64_t k, double mean) { return std::exp(poisson_log_pmf(k, mean)); }

double poisson_range_sum(std::int64_t lo, std::int64_t hi, double mean) {
  check_mean(mean);
  lo = std::max<std::int64_t>(lo, 0);
  if (hi < lo) return 0.0;
  if (mean == 0.0) return lo == 0 ? 1.0 : 0.0;

  // The pmf is unimodal with its peak at floor(mean), so the largest term
  // in [lo, hi] is the peak clamped into the range.
  const auto peak = static_cast<std::int64_t>(std::floor(mean));
  const std::int64_t anchor = std::clamp(peak, lo, hi);

  double sum = 1.0;
  double term = 1.0;
  for (std::int64_t k = anchor + 1; k <= hi; ++k) {
    term *= mean / static_cast<double>(k);
    sum += term;
    if (term < kNegligible * sum) break;
  }
  term = 1.0;
  for (std::int64_t k = anchor; k > lo; --k) {
    term *= static_cast<double>(k) / mean;
    sum += term;
    if (term < kNegligible * sum) break;
  }
  return std::min(1.0, std::exp(poisson_log_pmf(anchor, mean) + std::log(sum)));
}

double poisson_cdf(std::int64_t n, double mean) { return poisson_range_sum(0, n, mean); }

double poisson_tail(std::int64_t n, double mean) {
  if (n < 0) {
    check_mean(mean);
    return 1.0;
  }
  if (static_cast<double>(n) >= mean)
    return poisson_range_sum(n + 1, std::numeric_limits<std::int64_t>::max(), mean);
  return std::max(0.0, 1.0 - poisson_cdf(n, mean));
}

std::int64_t poisson_series_cutoff(double mean) {
  check_mean(mean);
  const double reach = std::ceil(mean + 20.0 * std::sqrt(mean));
  return std::max<std::int64_t>(500, static_cast<std::int64_t>(reach));
}

}  // namespace rara
