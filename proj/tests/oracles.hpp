#pragma once

// Reference computations used only by the tests. Each one takes a different
// route from the library code it checks.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rara::testing {

/// Poisson pmf by explicit product, no logarithms.
inline double pmf_by_product(int k, double mean) {
  double v = std::exp(-mean);
  for (int i = 1; i <= k; ++i) v *= mean / i;
  return v;
}

/// Upper tail Pr(X > n) as a forward partial sum of `terms` pmf values.
inline double tail_by_partial_sum(int n, double mean, int terms) {
  double s = 0.0;
  for (int k = n + 1; k < n + 1 + terms; ++k) s += pmf_by_product(k, mean);
  return s;
}

/// Gaussian upper tail by composite Simpson quadrature of the density.
inline double q_by_quadrature(double x, double upper = 40.0, int panels = 200000) {
  const double h = (upper - x) / panels;
  auto f = [](double t) { return std::exp(-t * t / 2.0) / std::sqrt(2.0 * std::numbers::pi); };
  double s = f(x) + f(upper);
  for (int i = 1; i < panels; ++i) s += f(x + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

using Matrix4 = std::array<std::array<double, 4>, 4>;

/// Stationary vector by Gaussian elimination on (P^T - I) with the last
/// equation replaced by normalization.
inline std::array<double, 4> stationary_by_elimination(const Matrix4& p) {
  double a[4][5] = {};
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 4; ++i) a[j][i] = p[i][j] - (i == j ? 1.0 : 0.0);
  }
  for (int i = 0; i < 4; ++i) a[3][i] = 1.0;
  a[3][4] = 1.0;
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    for (int k = 0; k < 5; ++k) std::swap(a[c][k], a[piv][k]);
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 5; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::array<double, 4> pi{};
  for (int i = 0; i < 4; ++i) pi[i] = a[i][4] / a[i][i];
  return pi;
}

}  // namespace rara::testing
