#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rara/analytic.hpp"
#include "rara/sim.hpp"

namespace rara::sim {
namespace {

std::int64_t total_contenders(const SimReport& r) { return r.packets_delivered + r.packets_lost; }

void expect_accounting(const SimConfig& c, const SimReport& r) {
  EXPECT_EQ(r.sessions(), c.n_sessions);
  const double expected_time =
      c.params.epsilon * r.sessions_by_state[0] + r.sessions_by_state[1] +
      (c.params.relays + 1.0) * (r.sessions_by_state[2] + r.sessions_by_state[3]);
  EXPECT_NEAR(r.total_time, expected_time, 1e-9 * expected_time);
  EXPECT_DOUBLE_EQ(r.throughput_hat, r.packets_delivered / r.total_time);
  EXPECT_DOUBLE_EQ(r.outage_hat,
                   static_cast<double>(r.sessions_by_state[3]) / static_cast<double>(c.n_sessions));
}

TEST(Arrivals, ZeroRate) {
  Rng rng(1);
  for (double d : {0.1, 1.0, 50.0}) EXPECT_EQ(sample_arrivals(PoissonArrivals{0.0}, d, rng), 0);
}

TEST(Arrivals, PoissonMean) {
  Rng rng(2);
  constexpr int kDraws = 1000000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) sum += sample_arrivals(PoissonArrivals{0.8}, 1.0, rng);
  EXPECT_NEAR(sum / kDraws, 0.8, 0.003);
}

TEST(Arrivals, FinitePopulationMoments) {
  Rng rng(3);
  constexpr int kDraws = 1000000;
  const FinitePopulation pop{400, 0.002};
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const auto x = static_cast<double>(sample_arrivals(pop, 1.0, rng));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / kDraws;
  const double var = sq / kDraws - mean * mean;
  EXPECT_NEAR(mean, 0.8, 0.003);
  EXPECT_NEAR(var, 0.8 * (1 - 0.002), 0.01);
}

TEST(Arrivals, FinitePopulationCompoundsOverDuration) {
  // Each device is active with probability 1 - (1 - p)^T over T units.
  Rng rng(4);
  const FinitePopulation pop{100, 0.05};
  constexpr int kDraws = 200000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) sum += sample_arrivals(pop, 11.0, rng);
  EXPECT_NEAR(sum / kDraws, 100 * (1 - std::pow(0.95, 11.0)), 0.05);
}

TEST(Arrivals, ForLoad) {
  const auto pop = FinitePopulation::for_load(0.8, 10);
  EXPECT_EQ(pop.devices, 400);
  EXPECT_NEAR(pop.devices * pop.p_active, 0.8, 1e-9);
  EXPECT_NEAR(arrival_rate(pop), 0.8, 1e-9);
}

TEST(Run, ZeroLoadIsAllIdle) {
  const auto c = SimConfig::poisson({0.0, 3, 0.1}, 5000, 9);
  const auto r = run(c);
  EXPECT_EQ(r.sessions_by_state[0], 5000);
  EXPECT_EQ(r.throughput_hat, 0.0);
  EXPECT_NEAR(r.total_time, 5000 * 0.1, 1e-9);
}

TEST(Run, Deterministic) {
  const auto c = SimConfig::poisson({0.8, 10, 0.1}, 100000, 42);
  EXPECT_EQ(run(c), run(c));
  auto other = c;
  other.seed = 43;
  EXPECT_NE(run(other).packets_delivered, run(c).packets_delivered);
}

TEST(Run, AccountingInvariants) {
  for (const auto& params : {SystemParams{0.4, 1, 0.1}, SystemParams{1.2, 5, 0.5},
                             SystemParams{0.8, 30, 0.05}}) {
    const auto c = SimConfig::poisson(params, 50000, 17);
    const auto r = run(c);
    expect_accounting(c, r);
    const std::int64_t m = params.relays;
    const auto& n = r.sessions_by_state;
    EXPECT_GE(r.packets_lost, (m + 2) * n[3]);
    EXPECT_GE(r.packets_delivered, n[1] + 2 * n[2]);
    EXPECT_LE(r.packets_delivered, n[1] + (m + 1) * n[2]);
    EXPECT_EQ(r.phy_failures, 0);
  }
}

TEST(Run, ConservationAgainstIndependentReplay) {
  // Replaying the arrival stream (stream 0 of the run seed) reproduces the
  // contender total, so delivered + lost conserves arrivals exactly.
  const auto c = SimConfig::poisson({0.8, 3, 0.1}, 20000, 5);
  const auto r = run(c);
  Rng rng(derive_seed(c.seed, 0));
  std::int64_t k = sample_arrivals(c.arrivals, 1.0, rng);
  std::int64_t total = 0;
  for (std::int64_t t = 0; t < c.warmup_sessions + c.n_sessions; ++t) {
    if (t >= c.warmup_sessions) total += k;
    const double len = k == 0 ? 0.1 : k == 1 ? 1.0 : 4.0;
    k = sample_arrivals(c.arrivals, len, rng);
  }
  EXPECT_EQ(total_contenders(r), total);
}

TEST(Run, AgreesWithAnalyticModel) {
  const SystemParams p{0.8, 10, 0.1};
  const auto r = run(SimConfig::poisson(p, 1000000, 1));
  const auto exact = throughput_exact(p);
  EXPECT_LT(std::abs(r.throughput_hat - exact.throughput),
            std::max(3 * r.stderr_throughput, 0.005));
  EXPECT_LT(std::abs(r.outage_hat - exact.outage), 3 * r.stderr_outage);
  EXPECT_LT(std::abs(r.mean_session_length_hat - exact.mean_session_length),
            3 * r.stderr_mean_session_length);
  EXPECT_LT(std::abs(r.mean_success_hat - exact.mean_success_count), 3 * r.stderr_mean_success);
}

TEST(Run, AnalyticAgreementGrid) {
  std::vector<SimConfig> configs;
  for (double l : {0.4, 0.8, 1.2})
    for (int m : {1, 5, 10, 30}) configs.push_back(SimConfig::poisson({l, m, 0.1}, 1000000, 0));
  configs = with_derived_seeds(std::move(configs), 2718);
  const auto reports = sweep(configs);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& p = configs[i].params;
    const auto& r = reports[i];
    const auto exact = throughput_exact(p);
    const auto label = ::testing::Message() << "lambda=" << p.lambda << " M=" << p.relays;
    EXPECT_LT(std::abs(r.throughput_hat - exact.throughput), std::max(3 * r.stderr_throughput, 0.005))
        << label;
    EXPECT_LT(std::abs(r.outage_hat - exact.outage), std::max(3 * r.stderr_outage, 0.005)) << label;
    EXPECT_LT(std::abs(r.mean_session_length_hat - exact.mean_session_length),
              std::max(3 * r.stderr_mean_session_length, 0.005 * exact.mean_session_length))
        << label;
  }
}

TEST(Run, FinitePopulationApproachesPoisson) {
  const SystemParams p{0.8, 10, 0.1};
  auto finite = SimConfig::poisson(p, 1000000, 77);
  finite.arrivals = FinitePopulation::for_load(0.8, 10);
  const auto r = run(finite);
  EXPECT_NEAR(r.throughput_hat, throughput_exact(p).throughput, 0.01);
}

TEST(Run, PhyCoupledNearThresholdAtHighSnr) {
  const SystemParams p{0.8, 10, 0.1};
  auto threshold = SimConfig::poisson(p, 100000, 3);
  auto coupled = threshold;
  coupled.rule = PhyCoupledRule{40.0};
  const auto a = run(threshold);
  const auto b = run(coupled);
  // Arrivals use their own stream, so only detector failures differ.
  EXPECT_EQ(total_contenders(a), total_contenders(b));
  EXPECT_EQ(a.sessions_by_state, b.sessions_by_state);
  EXPECT_LE(b.packets_delivered, a.packets_delivered);
  EXPECT_NEAR(a.throughput_hat, b.throughput_hat, 0.01);
}

TEST(Run, PhyCoupledLosesPacketsAtLowSnr) {
  auto c = SimConfig::poisson({0.8, 3, 0.1}, 20000, 3);
  c.rule = PhyCoupledRule{0.0};
  const auto r = run(c);
  EXPECT_GT(r.phy_failures, 0);
  expect_accounting(c, r);
}

TEST(Run, RejectsInvalidConfig) {
  auto c = SimConfig::poisson({0.8, 3, 0.1}, 0, 1);
  EXPECT_THROW(run(c), std::invalid_argument);
  c.n_sessions = 10;
  c.params.epsilon = 2.0;
  EXPECT_ANY_THROW(run(c));
}

TEST(Sweep, SingleMatchesRun) {
  const auto c = SimConfig::poisson({0.5, 4, 0.1}, 30000, 11);
  const std::vector<SimConfig> one{c};
  EXPECT_EQ(sweep(one).front(), run(c));
}

TEST(Sweep, IndependentOfThreadCount) {
  std::vector<SimConfig> configs;
  for (int m = 1; m <= 6; ++m) configs.push_back(SimConfig::poisson({0.8, m, 0.1}, 20000, 0));
  configs = with_derived_seeds(std::move(configs), 99);
  EXPECT_EQ(sweep(configs, 1), sweep(configs, 4));
}

TEST(Sweep, RelayCurveDipsThenRises) {
  std::vector<SimConfig> configs;
  for (int m = 1; m <= 30; ++m) configs.push_back(SimConfig::poisson({0.8, m, 0.1}, 300000, 0));
  const auto reports = sweep(with_derived_seeds(std::move(configs), 5));
  const double at1 = reports[0].throughput_hat;
  const double at5 = reports[4].throughput_hat;
  const double at30 = reports[29].throughput_hat;
  EXPECT_GT(at1, at5);
  EXPECT_GT(at30, at5);
}

TEST(Sweep, LoadCurvePeaksNearSevenTenths) {
  std::vector<SimConfig> configs;
  for (int i = 1; i <= 15; ++i) configs.push_back(SimConfig::poisson({i / 10.0, 10, 0.1}, 300000, 0));
  const auto reports = sweep(with_derived_seeds(std::move(configs), 6));
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i)
    if (reports[i].throughput_hat > reports[best].throughput_hat) best = i;
  const double peak = (best + 1) / 10.0;
  EXPECT_GE(peak, 0.6);
  EXPECT_LE(peak, 0.8);
}

}  // namespace
}  // namespace rara::sim
