#pragma once

#include <cstdint>

namespace rara {

/// log Pr(X = k) for X ~ Poisson(mean). Returns -inf when the pmf is zero.
double poisson_log_pmf(std::int64_t k, double mean);

/// e^{-mean} mean^k / k!, evaluated in log space.
double poisson_pmf(std::int64_t k, double mean);

/// Sum of the pmf over lo..hi inclusive.
///
/// The sum is anchored at the largest term in the range (evaluated in log
/// space) and the remaining terms are accumulated relative to it with the
/// ratio recurrence pmf(k+1) = pmf(k) mean / (k+1), so neither large k nor
/// large mean underflows. Terms below 1e-18 of the running sum are dropped.
double poisson_range_sum(std::int64_t lo, std::int64_t hi, double mean);

/// Pr(X <= n).
double poisson_cdf(std::int64_t n, double mean);

/// Pr(X > n), computed as the complement of the cdf.
double poisson_tail(std::int64_t n, double mean);

/// Truncation point for series over k: max(500, ceil(mean + 20 sqrt(mean))).
std::int64_t poisson_series_cutoff(double mean);

}  // namespace rara
