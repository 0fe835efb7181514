#include "rara/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "rara/errors.hpp"
#include "rara/mpr.hpp"

namespace rara::sim {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Sub-streams of a run seed.
enum Stream : std::uint64_t { kArrivals = 0, kPhy = 1 };

struct BatchTotals {
  std::int64_t sessions = 0;
  std::int64_t unsuccess = 0;
  std::int64_t delivered = 0;
  double time = 0.0;
};

// Standard error of the mean of per-batch estimates.
template <class Estimate>
double batch_stderr(const std::vector<BatchTotals>& batches, Estimate estimate) {
  const auto n = static_cast<double>(batches.size());
  if (batches.size() < 2) return 0.0;
  double mean = 0.0;
  for (const auto& b : batches) mean += estimate(b);
  mean /= n;
  double ss = 0.0;
  for (const auto& b : batches) {
    const double d = estimate(b) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

FinitePopulation FinitePopulation::for_load(double lambda, int relays, std::int64_t per_relay) {
  if (relays < 1 || per_relay < 1)
    throw std::invalid_argument("finite population needs relays >= 1 and per_relay >= 1");
  FinitePopulation pop;
  pop.devices = per_relay * relays;
  pop.p_active = lambda / static_cast<double>(pop.devices);
  if (!(pop.p_active >= 0.0 && pop.p_active <= 1.0))
    throw DomainError("lambda " + std::to_string(lambda) + " exceeds the population size");
  return pop;
}

double arrival_rate(const ArrivalModel& model) {
  return std::visit(overloaded{[](const PoissonArrivals& a) { return a.lambda; },
                               [](const FinitePopulation& f) {
                                 return static_cast<double>(f.devices) * f.p_active;
                               }},
                    model);
}

std::int64_t sample_arrivals(const ArrivalModel& model, double duration, Rng& rng) {
  if (!(duration > 0.0)) throw DomainError("arrival window must be positive");
  return std::visit(
      overloaded{[&](const PoissonArrivals& a) -> std::int64_t {
                   const double mean = a.lambda * duration;
                   if (mean <= 0.0) return 0;
                   return std::poisson_distribution<std::int64_t>(mean)(rng);
                 },
                 [&](const FinitePopulation& f) -> std::int64_t {
                   const double q = -std::expm1(duration * std::log1p(-f.p_active));
                   if (q <= 0.0) return 0;
                   return std::binomial_distribution<std::int64_t>(f.devices, q)(rng);
                 }},
      model);
}

SimConfig SimConfig::poisson(const SystemParams& params, std::int64_t n_sessions,
                             std::uint64_t seed) {
  SimConfig c;
  c.params = params;
  c.arrivals = PoissonArrivals{params.lambda};
  c.n_sessions = n_sessions;
  c.seed = seed;
  return c;
}

void validate(const SimConfig& config) {
  rara::validate(config.params);
  if (config.n_sessions < 1) throw std::invalid_argument("n_sessions must be >= 1");
  if (config.warmup_sessions < 0) throw std::invalid_argument("warmup_sessions must be >= 0");
  if (config.batches < 1) throw std::invalid_argument("batches must be >= 1");
  std::visit(overloaded{[](const PoissonArrivals& a) {
                          if (!(a.lambda >= 0.0) || !std::isfinite(a.lambda))
                            throw DomainError("Poisson arrival rate must be >= 0");
                        },
                        [](const FinitePopulation& f) {
                          if (f.devices < 1) throw DomainError("population must be >= 1");
                          if (!(f.p_active >= 0.0 && f.p_active <= 1.0))
                            throw DomainError("activation probability must lie in [0, 1]");
                        }},
             config.arrivals);
}

std::int64_t SimReport::sessions() const noexcept {
  std::int64_t n = 0;
  for (auto c : sessions_by_state) n += c;
  return n;
}

SimReport run(const SimConfig& config) {
  validate(config);
  const SystemParams& params = config.params;
  const double collision_length = params.relays + 1.0;
  const auto* phy_rule = std::get_if<PhyCoupledRule>(&config.rule);
  const double phy_noise = phy_rule ? mpr::noise_variance_for_snr(phy_rule->snr_db) : 0.0;
  const std::uint64_t phy_base = derive_seed(config.seed, kPhy);

  Rng rng(derive_seed(config.seed, kArrivals));

  const auto n_batches = static_cast<std::int64_t>(
      std::min<std::int64_t>(config.batches, config.n_sessions));
  std::vector<BatchTotals> batches(static_cast<std::size_t>(n_batches));

  SimReport report;
  report.seed = config.seed;

  std::int64_t contenders = sample_arrivals(config.arrivals, 1.0, rng);
  const std::int64_t total_sessions = config.warmup_sessions + config.n_sessions;
  for (std::int64_t t = 0; t < total_sessions; ++t) {
    const SessionKind kind = classify(contenders, params.relays);
    const double length = kind == SessionKind::Idle     ? params.epsilon
                          : kind == SessionKind::Single ? 1.0
                                                        : collision_length;

    std::int64_t delivered = 0;
    bool phy_failed = false;
    if (kind == SessionKind::Single) {
      delivered = 1;
    } else if (kind == SessionKind::Success) {
      if (phy_rule) {
        const auto outcome =
            mpr::run_collision_trial(static_cast<int>(contenders), params.relays, phy_noise,
                                     derive_seed(phy_base, static_cast<std::uint64_t>(t)));
        phy_failed = !outcome.decoded;
      }
      delivered = phy_failed ? 0 : contenders;
    }

    if (t >= config.warmup_sessions) {
      const std::int64_t counted = t - config.warmup_sessions;
      auto& batch = batches[static_cast<std::size_t>(counted * n_batches / config.n_sessions)];
      ++report.sessions_by_state[index(kind)];
      report.packets_delivered += delivered;
      report.packets_lost += contenders - delivered;
      report.total_time += length;
      if (phy_failed) ++report.phy_failures;

      ++batch.sessions;
      batch.delivered += delivered;
      batch.time += length;
      if (kind == SessionKind::Unsuccess) ++batch.unsuccess;
    }

    contenders = sample_arrivals(config.arrivals, length, rng);
  }

  const auto n = static_cast<double>(config.n_sessions);
  report.throughput_hat = static_cast<double>(report.packets_delivered) / report.total_time;
  report.outage_hat =
      static_cast<double>(report.sessions_by_state[index(SessionKind::Unsuccess)]) / n;
  report.mean_session_length_hat = report.total_time / n;
  report.mean_success_hat = static_cast<double>(report.packets_delivered) / n;

  report.stderr_throughput = batch_stderr(
      batches, [](const BatchTotals& b) { return static_cast<double>(b.delivered) / b.time; });
  report.stderr_outage = batch_stderr(batches, [](const BatchTotals& b) {
    return static_cast<double>(b.unsuccess) / static_cast<double>(b.sessions);
  });
  report.stderr_mean_session_length = batch_stderr(
      batches, [](const BatchTotals& b) { return b.time / static_cast<double>(b.sessions); });
  report.stderr_mean_success = batch_stderr(batches, [](const BatchTotals& b) {
    return static_cast<double>(b.delivered) / static_cast<double>(b.sessions);
  });
  return report;
}

std::vector<SimReport> sweep(std::span<const SimConfig> configs, unsigned threads) {
  if (configs.empty()) throw std::invalid_argument("sweep needs at least one config");
  for (const auto& c : configs) validate(c);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(configs.size()));

  std::vector<SimReport> reports(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) reports[i] = run(configs[i]);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return reports;
}

std::vector<SimConfig> with_derived_seeds(std::vector<SimConfig> configs,
                                          std::uint64_t base_seed) {
  for (std::size_t i = 0; i < configs.size(); ++i) configs[i].seed = derive_seed(base_seed, i);
  return configs;
}

}  // namespace rara::sim
