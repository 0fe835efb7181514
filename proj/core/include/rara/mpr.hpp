#pragma once

// Multipacket reception over relay-forwarded copies of a collision.
//
// Session 1 carries the collision at the base station; in session m+1 relay
// m amplifies and forwards what it heard. Stacking the M+1 observations
// gives r = H s + noise with an (M+1) x K composite channel H, which a
// decorrelating detector inverts when K <= M+1.

#include <complex>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace rara::mpr {

using Complex = std::complex<double>;

inline constexpr double kDefaultConditionThreshold = 1e8;

struct ChannelRealization {
  Eigen::VectorXcd direct;        // h_k, device -> base station
  Eigen::MatrixXcd device_relay;  // h_{m,k}, device -> relay (M x K)
  Eigen::VectorXcd relay_bs;      // g_m, relay -> base station

  Eigen::Index devices() const noexcept { return direct.size(); }
  Eigen::Index relays() const noexcept { return relay_bs.size(); }
};

/// Throws std::invalid_argument on inconsistent shapes or non-finite gains.
void validate(const ChannelRealization& ch);

struct CompositeMatrix {
  Eigen::MatrixXcd h;  // (M+1) x K
};

struct ReceivedBlock {
  Eigen::VectorXcd r;  // r_1 .. r_{M+1}
  double noise_var = 0.0;
  double relay_noise_var = 0.0;
};

struct DetectionResult {
  Eigen::VectorXcd estimates;
  Eigen::VectorXcd decided;
  bool success = false;
  double condition_number = std::numeric_limits<double>::infinity();
};

/// Unit-energy QPSK point for index 0..3.
Complex qpsk_symbol(int index);

/// Closest unit-energy QPSK point.
Complex qpsk_slice(Complex x) noexcept;

/// i.i.d. unit-variance circularly-symmetric complex Gaussian gains.
ChannelRealization generate_channels(int k_devices, int m_relays, std::uint64_t seed);

/// Row 0 holds the direct gains; row m+1 holds forward_gain * g_m * h_{m,.}.
CompositeMatrix composite_matrix(const ChannelRealization& ch, double forward_gain = 1.0);

/// r_1 = sum_k h_k s_k + n_1,
/// r_{m+1} = g_m * forward_gain * (sum_k h_{m,k} s_k + w_m) + n_{m+1}.
ReceivedBlock simulate_reception(const CompositeMatrix& h, const ChannelRealization& ch,
                                 const Eigen::VectorXcd& symbols, double noise_var,
                                 double relay_noise_var, std::uint64_t seed,
                                 double forward_gain = 1.0);

/// Pseudo-inverse detection. Throws UnderdeterminedError when K > M+1.
/// Rank-deficient channels still return estimates with success = false.
DetectionResult decorrelate(const CompositeMatrix& h, const ReceivedBlock& block,
                            double condition_threshold = kDefaultConditionThreshold);

/// Noise variance for a per-observation SNR in dB with unit symbol energy.
/// +inf dB maps to zero noise.
double noise_variance_for_snr(double snr_db);

struct TrialOutcome {
  int symbol_errors = 0;
  bool decoded = false;  // well-conditioned and every symbol correct
};

/// One collision of k QPSK symbols over fresh channels and noise.
TrialOutcome run_collision_trial(int k_devices, int m_relays, double noise_var,
                                 std::uint64_t seed);

/// Monte-Carlo symbol error rate of the decorrelator. Trial t uses seed
/// derive_seed(seed, t), so the result does not depend on `threads`.
double symbol_error_rate(int k_devices, int m_relays, double snr_db, std::int64_t trials,
                         std::uint64_t seed, unsigned threads = 1);

}  // namespace rara::mpr
