#pragma once

// Markov-chain model of relay-aided random access sessions.
//
// A session is Idle (no contender, length epsilon), Single (one contender,
// length 1), Success (2..M+1 contenders, length M+1) or Unsuccess (M+2 or
// more contenders, length M+1). The number of contenders in a session is
// the Poisson number of activations during the previous session, so the
// session kind forms a four-state chain whose rows depend only on the
// length of the current session.

#include <array>
#include <cstddef>
#include <cstdint>

namespace rara {

struct SystemParams {
  double lambda = 0.0;  // mean activations per unit time
  int relays = 1;       // M
  double epsilon = 0.1; // idle-session length, in (0, 1]
};

/// Throws DomainError unless lambda >= 0, relays >= 1 and 0 < epsilon <= 1.
void validate(const SystemParams& params);

enum class SessionKind : std::size_t { Idle = 0, Single = 1, Success = 2, Unsuccess = 3 };

inline constexpr std::size_t kSessionKinds = 4;
inline constexpr std::array<SessionKind, kSessionKinds> kAllSessionKinds{
    SessionKind::Idle, SessionKind::Single, SessionKind::Success, SessionKind::Unsuccess};

constexpr std::size_t index(SessionKind kind) noexcept { return static_cast<std::size_t>(kind); }

const char* to_string(SessionKind kind) noexcept;

/// epsilon, 1, M+1, M+1.
double session_length(SessionKind kind, const SystemParams& params);

/// Session kind implied by `contenders` under the K <= M+1 decoding rule.
SessionKind classify(std::int64_t contenders, int relays) noexcept;

/// Probability of each next-session kind, indexed by SessionKind.
using StateProbs = std::array<double, kSessionKinds>;

/// Next-session kind probabilities after a session of the given length:
/// Pr(0), Pr(1), Pr(2..M+1) and the complement Pr(>= M+2).
StateProbs session_probs(const SystemParams& params, double duration);

struct TransitionMatrix {
  std::array<StateProbs, kSessionKinds> p{};

  double operator()(SessionKind from, SessionKind to) const noexcept {
    return p[index(from)][index(to)];
  }
  const StateProbs& row(SessionKind from) const noexcept { return p[index(from)]; }
};

TransitionMatrix transition_matrix(const SystemParams& params);

struct StationaryDistribution {
  StateProbs pi{};
  // Set when the closed form was singular and power iteration was used.
  bool from_fallback = false;

  double operator[](SessionKind kind) const noexcept { return pi[index(kind)]; }
  /// pi_S + pi_U, the long-session share.
  double collision() const noexcept { return pi[2] + pi[3]; }
};

/// pi = pi P for a row vector pi.
StateProbs left_multiply(const StateProbs& pi, const TransitionMatrix& p) noexcept;

/// Closed-form solution of pi = pi P exploiting the identical S and U rows.
/// lambda == 0 returns (1, 0, 0, 0) directly. Throws SingularityError when
/// the 2x2 determinant falls below 1e-14 in magnitude.
StationaryDistribution stationary_closed_form(const SystemParams& params);

/// Iterates pi <- pi P from the uniform vector until the largest component
/// change is below `tol`. Throws ConvergenceError after `max_iter` steps.
StationaryDistribution stationary_power_iteration(const TransitionMatrix& p, double tol = 1e-14,
                                                  std::int64_t max_iter = 10'000'000);

/// Closed form, falling back to power iteration (flagged) when singular.
StationaryDistribution stationary_distribution(const SystemParams& params);

/// Q(k): probability that a session in steady state has k contenders.
double occupancy(std::int64_t k, const SystemParams& params, const StationaryDistribution& pi);

/// Sum of Q(k) for k >= M+2, via the complement of each state's Poisson cdf.
double outage(const SystemParams& params, const StationaryDistribution& pi);
double outage_exact(const SystemParams& params);

double mean_session_length(const SystemParams& params, const StationaryDistribution& pi);

/// Mean decoded packets per session, sum_i cdf(M; lambda T_i) lambda T_i pi_i.
double mean_success_count(const SystemParams& params, const StationaryDistribution& pi);

/// Same quantity as the moment sum over occupancy, sum_{k=1}^{M+1} k Q(k).
double mean_success_count_moment(const SystemParams& params, const StationaryDistribution& pi);

/// Truncation point for series over k at these parameters.
std::int64_t series_cutoff(const SystemParams& params);

struct PerformanceMetrics {
  double throughput = 0.0;
  double outage = 0.0;
  double mean_session_length = 0.0;
  double mean_success_count = 0.0;
  StationaryDistribution stationary;
};

PerformanceMetrics throughput_exact(const SystemParams& params);

/// Gaussian upper tail probability, 0.5 erfc(x / sqrt 2).
double q_function(double x);

/// (1 - lambda) sqrt(M / lambda). Requires lambda > 0.
double psi(double lambda, int relays);

/// Large-M approximation lambda (1 - Q(psi)).
double throughput_approx(const SystemParams& params);

/// Large-M approximation Q(psi).
double outage_approx(const SystemParams& params);

/// lambda U(lambda): lambda below unit load, 1/2 at exactly 1, 0 above.
double asymptotic_throughput(double lambda);

}  // namespace rara
