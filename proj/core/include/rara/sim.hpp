#pragma once

// Session-level Monte-Carlo simulator.
//
// Devices that activate during session t contend at the start of session
// t+1; nobody transmits while relays forward. A session lasts epsilon, 1 or
// M+1 unit times for 0, 1 or >= 2 contenders.

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "rara/analytic.hpp"
#include "rara/random.hpp"

namespace rara::sim {

struct PoissonArrivals {
  double lambda = 0.0;
};

struct FinitePopulation {
  std::int64_t devices = 1;
  double p_active = 0.0;  // activation probability per unit time

  /// devices = per_relay * M, p_active = lambda / devices.
  static FinitePopulation for_load(double lambda, int relays, std::int64_t per_relay = 40);
};

using ArrivalModel = std::variant<PoissonArrivals, FinitePopulation>;

/// Mean activations per unit time of the model.
double arrival_rate(const ArrivalModel& model);

/// Activations during `duration` unit times. FinitePopulation activates each
/// device with probability 1 - (1 - p_active)^duration.
std::int64_t sample_arrivals(const ArrivalModel& model, double duration, Rng& rng);

/// Collisions of 2..M+1 contenders always decode.
struct ThresholdRule {};

/// Collisions of 2..M+1 contenders decode only if the decorrelator recovers
/// every QPSK symbol at this SNR.
struct PhyCoupledRule {
  double snr_db = 40.0;
};

using SuccessRule = std::variant<ThresholdRule, PhyCoupledRule>;

struct SimConfig {
  SystemParams params;
  ArrivalModel arrivals = PoissonArrivals{};
  std::int64_t n_sessions = 1'000'000;
  std::uint64_t seed = 0;
  SuccessRule rule = ThresholdRule{};
  std::int64_t warmup_sessions = 1000;  // simulated but not counted
  int batches = 100;                    // batch means for standard errors

  /// Poisson arrivals at params.lambda.
  static SimConfig poisson(const SystemParams& params, std::int64_t n_sessions,
                           std::uint64_t seed);
};

void validate(const SimConfig& config);

struct SimReport {
  std::array<std::int64_t, kSessionKinds> sessions_by_state{};
  std::int64_t packets_delivered = 0;
  std::int64_t packets_lost = 0;
  std::int64_t phy_failures = 0;  // decodable-size collisions the detector lost
  double total_time = 0.0;

  double throughput_hat = 0.0;
  double outage_hat = 0.0;
  double mean_session_length_hat = 0.0;
  double mean_success_hat = 0.0;

  double stderr_throughput = 0.0;
  double stderr_outage = 0.0;
  double stderr_mean_session_length = 0.0;
  double stderr_mean_success = 0.0;

  std::uint64_t seed = 0;

  std::int64_t sessions() const noexcept;
  bool operator==(const SimReport&) const = default;
};

SimReport run(const SimConfig& config);

/// Runs every config on up to `threads` workers (0 = hardware concurrency).
/// Each run uses its own config seed; results follow input order.
std::vector<SimReport> sweep(std::span<const SimConfig> configs, unsigned threads = 0);

/// Copy of `configs` with seed i replaced by derive_seed(base_seed, i).
std::vector<SimConfig> with_derived_seeds(std::vector<SimConfig> configs,
                                          std::uint64_t base_seed);

}  // namespace rara::sim
