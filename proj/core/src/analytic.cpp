#include "rara/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rara/errors.hpp"
#include "rara/poisson.hpp"

namespace rara {
namespace {

constexpr double kSingularDelta = 1e-14;

double clamp_probability(double p) noexcept { return std::clamp(p, 0.0, 1.0); }

// Session lengths in SessionKind order.
std::array<double, kSessionKinds> durations(const SystemParams& params) {
  const double collision = params.relays + 1.0;
  return {params.epsilon, 1.0, collision, collision};
}

}  // namespace

void validate(const SystemParams& params) {
  if (!std::isfinite(params.lambda) || params.lambda < 0.0)
    throw DomainError("lambda must be finite and >= 0, got " + std::to_string(params.lambda));
  if (params.relays < 1)
    throw DomainError("relay count must be >= 1, got " + std::to_string(params.relays));
  if (!(params.epsilon > 0.0 && params.epsilon <= 1.0))
    throw DomainError("epsilon must lie in (0, 1], got " + std::to_string(params.epsilon));
}

const char* to_string(SessionKind kind) noexcept {
  switch (kind) {
    case SessionKind::Idle: return "idle";
    case SessionKind::Single: return "single";
    case SessionKind::Success: return "success";
    case SessionKind::Unsuccess: return "unsuccess";
  }
  return "unknown";
}

double session_length(SessionKind kind, const SystemParams& params) {
  return durations(params)[index(kind)];
}

SessionKind classify(std::int64_t contenders, int relays) noexcept {
  if (contenders <= 0) return SessionKind::Idle;
  if (contenders == 1) return SessionKind::Single;
  if (contenders <= static_cast<std::int64_t>(relays) + 1) return SessionKind::Success;
  return SessionKind::Unsuccess;
}

StateProbs session_probs(const SystemParams& params, double duration) {
  validate(params);
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw DomainError("session duration must be positive, got " + std::to_string(duration));

  const double mean = params.lambda * duration;
  const double p0 = poisson_pmf(0, mean);
  const double p1 = poisson_pmf(1, mean);
  const double ps = poisson_range_sum(2, params.relays + 1, mean);
  const double pu = poisson_tail(params.relays + 1, mean);
  return {p0, p1, ps, pu};
}

TransitionMatrix transition_matrix(const SystemParams& params) {
  validate(params);
  TransitionMatrix m;
  const auto t = durations(params);
  m.p[0] = session_probs(params, t[0]);
  m.p[1] = session_probs(params, t[1]);
  m.p[2] = session_probs(params, t[2]);
  m.p[3] = m.p[2];
  return m;
}

StateProbs left_multiply(const StateProbs& pi, const TransitionMatrix& p) noexcept {
  StateProbs out{};
  for (std::size_t i = 0; i < kSessionKinds; ++i)
    for (std::size_t j = 0; j < kSessionKinds; ++j) out[j] += pi[i] * p.p[i][j];
  return out;
}

StationaryDistribution stationary_closed_form(const SystemParams& params) {
  validate(params);
  if (params.lambda == 0.0) return {{1.0, 0.0, 0.0, 0.0}, false};

  const TransitionMatrix p = transition_matrix(params);
  const StateProbs& idle = p.row(SessionKind::Idle);
  const StateProbs& single = p.row(SessionKind::Single);
  const StateProbs& longer = p.row(SessionKind::Success);

  // Rows S and U coincide, so (pi_0, pi_1, pi_S + pi_U) solves a 3-state
  // chain; eliminating the collision share leaves a 2x2 system.
  const double delta = (longer[0] + 1.0 - idle[0]) * (longer[1] + 1.0 - single[1]) -
                       (longer[0] - single[0]) * (longer[1] - idle[1]);
  if (std::abs(delta) < kSingularDelta)
    throw SingularityError("stationary closed form is singular (|delta| = " +
                           std::to_string(std::abs(delta)) + ")");

  const double pi0 = (longer[0] * (1.0 - single[1]) + longer[1] * single[0]) / delta;
  const double pi1 = (longer[1] * (1.0 - idle[0]) + longer[0] * idle[1]) / delta;
  const double pibar = ((1.0 - single[1]) * (1.0 - idle[0]) - single[0] * idle[1]) / delta;

  StationaryDistribution out;
  out.pi[0] = pi0;
  out.pi[1] = pi1;
  out.pi[2] = idle[2] * pi0 + single[2] * pi1 + longer[2] * pibar;
  out.pi[3] = idle[3] * pi0 + single[3] * pi1 + longer[3] * pibar;
  for (double& v : out.pi) v = clamp_probability(v);
  return out;
}

StationaryDistribution stationary_power_iteration(const TransitionMatrix& p, double tol,
                                                  std::int64_t max_iter) {
  if (!(tol > 0.0)) throw DomainError("power iteration tolerance must be positive");
  StateProbs pi;
  pi.fill(1.0 / kSessionKinds);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    StateProbs next = left_multiply(pi, p);
    double total = 0.0;
    for (double v : next) total += v;
    double change = 0.0;
    for (std::size_t i = 0; i < kSessionKinds; ++i) {
      next[i] /= total;
      change = std::max(change, std::abs(next[i] - pi[i]));
    }
    pi = next;
    if (change < tol) return {pi, false};
  }
  throw ConvergenceError("power iteration did not converge in " + std::to_string(max_iter) +
                         " iterations");
}

StationaryDistribution stationary_distribution(const SystemParams& params) {
  try {
    return stationary_closed_form(params);
  } catch (const SingularityError&) {
    StationaryDistribution pi = stationary_power_iteration(transition_matrix(params));
    pi.from_fallback = true;
    return pi;
  }
}

double occupancy(std::int64_t k, const SystemParams& params, const StationaryDistribution& pi) {
  validate(params);
  const auto t = durations(params);
  double q = 0.0;
  for (std::size_t i = 0; i < kSessionKinds; ++i)
    q += poisson_pmf(k, params.lambda * t[i]) * pi.pi[i];
  return q;
}

double outage(const SystemParams& params, const StationaryDistribution& pi) {
  validate(params);
  const auto t = durations(params);
  double out = 0.0;
  for (std::size_t i = 0; i < kSessionKinds; ++i)
    out += pi.pi[i] * poisson_tail(params.relays + 1, params.lambda * t[i]);
  return clamp_probability(out);
}

double outage_exact(const SystemParams& params) {
  return outage(params, stationary_distribution(params));
}

double mean_session_length(const SystemParams& params, const StationaryDistribution& pi) {
  validate(params);
  return params.epsilon * pi.pi[0] + pi.pi[1] + (params.relays + 1.0) * pi.collision();
}

double mean_success_count(const SystemParams& params, const StationaryDistribution& pi) {
  validate(params);
  const auto t = durations(params);
  double k_bar = 0.0;
  for (std::size_t i = 0; i < kSessionKinds; ++i) {
    const double mean = params.lambda * t[i];
    k_bar += poisson_cdf(params.relays, mean) * mean * pi.pi[i];
  }
  return k_bar;
}

double mean_success_count_moment(const SystemParams& params, const StationaryDistribution& pi) {
  validate(params);
  double k_bar = 0.0;
  for (std::int64_t k = 1; k <= params.relays + 1; ++k)
    k_bar += static_cast<double>(k) * occupancy(k, params, pi);
  return k_bar;
}

std::int64_t series_cutoff(const SystemParams& params) {
  validate(params);
  return poisson_series_cutoff(params.lambda * (params.relays + 1.0));
}

PerformanceMetrics throughput_exact(const SystemParams& params) {
  PerformanceMetrics m;
  m.stationary = stationary_distribution(params);
  m.outage = outage(params, m.stationary);
  m.mean_session_length = mean_session_length(params, m.stationary);
  m.mean_success_count = mean_success_count(params, m.stationary);
  m.throughput = m.mean_success_count / m.mean_session_length;
  return m;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double psi(double lambda, int relays) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("psi needs lambda > 0, got " + std::to_string(lambda));
  if (relays < 1) throw DomainError("psi needs at least one relay");
  return (1.0 - lambda) * std::sqrt(static_cast<double>(relays) / lambda);
}

double throughput_approx(const SystemParams& params) {
  return params.lambda * (1.0 - q_function(psi(params.lambda, params.relays)));
}

double outage_approx(const SystemParams& params) {
  return q_function(psi(params.lambda, params.relays));
}

double asymptotic_throughput(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("asymptotic throughput needs lambda >= 0");
  if (lambda < 1.0) return lambda;
  if (lambda == 1.0) return 0.5;
  return 0.0;
}

}  // namespace rara
