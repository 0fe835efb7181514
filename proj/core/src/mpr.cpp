#include "rara/mpr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rara/errors.hpp"
#include "rara/random.hpp"

namespace rara::mpr {
namespace {

constexpr double kQpskScale = std::numbers::sqrt2 / 2.0;
constexpr double kGramConditionLimit = 1e6;

bool all_finite(const auto& m) { return m.allFinite(); }

// Sub-streams of one collision trial seed.
enum Stream : std::uint64_t { kChannels = 0, kSymbols = 1, kNoise = 2 };

}  // namespace

void validate(const ChannelRealization& ch) {
  const Eigen::Index k = ch.devices();
  const Eigen::Index m = ch.relays();
  if (k < 1 || m < 1) throw std::invalid_argument("channel needs K >= 1 and M >= 1");
  if (ch.device_relay.rows() != m || ch.device_relay.cols() != k)
    throw std::invalid_argument("device_relay must be M x K");
  if (!all_finite(ch.direct) || !all_finite(ch.device_relay) || !all_finite(ch.relay_bs))
    throw std::invalid_argument("channel gains must be finite");
}

Complex qpsk_symbol(int index) {
  switch (index & 3) {
    case 0: return {kQpskScale, kQpskScale};
    case 1: return {-kQpskScale, kQpskScale};
    case 2: return {-kQpskScale, -kQpskScale};
    default: return {kQpskScale, -kQpskScale};
  }
}

Complex qpsk_slice(Complex x) noexcept {
  return {x.real() >= 0.0 ? kQpskScale : -kQpskScale, x.imag() >= 0.0 ? kQpskScale : -kQpskScale};
}

ChannelRealization generate_channels(int k_devices, int m_relays, std::uint64_t seed) {
  if (k_devices < 1 || m_relays < 1)
    throw std::invalid_argument("generate_channels needs K >= 1 and M >= 1");
  Rng rng(seed);
  ChannelRealization ch;
  ch.direct.resize(k_devices);
  ch.device_relay.resize(m_relays, k_devices);
  ch.relay_bs.resize(m_relays);
  for (Eigen::Index k = 0; k < k_devices; ++k) ch.direct(k) = complex_gaussian(rng, 1.0);
  for (Eigen::Index m = 0; m < m_relays; ++m)
    for (Eigen::Index k = 0; k < k_devices; ++k) ch.device_relay(m, k) = complex_gaussian(rng, 1.0);
  for (Eigen::Index m = 0; m < m_relays; ++m) ch.relay_bs(m) = complex_gaussian(rng, 1.0);
  return ch;
}

CompositeMatrix composite_matrix(const ChannelRealization& ch, double forward_gain) {
  validate(ch);
  CompositeMatrix out;
  out.h.resize(ch.relays() + 1, ch.devices());
  out.h.row(0) = ch.direct.transpose();
  for (Eigen::Index m = 0; m < ch.relays(); ++m)
    out.h.row(m + 1) = (forward_gain * ch.relay_bs(m)) * ch.device_relay.row(m);
  return out;
}

ReceivedBlock simulate_reception(const CompositeMatrix& h, const ChannelRealization& ch,
                                 const Eigen::VectorXcd& symbols, double noise_var,
                                 double relay_noise_var, std::uint64_t seed,
                                 double forward_gain) {
  if (noise_var < 0.0 || relay_noise_var < 0.0)
    throw std::invalid_argument("noise variances must be non-negative");
  if (symbols.size() != h.h.cols())
    throw std::invalid_argument("symbol count must match the composite matrix width");
  if (h.h.rows() != ch.relays() + 1)
    throw std::invalid_argument("composite matrix and channel disagree on relay count");

  Rng rng(seed);
  ReceivedBlock block;
  block.noise_var = noise_var;
  block.relay_noise_var = relay_noise_var;
  block.r = h.h * symbols;
  block.r(0) += complex_gaussian(rng, noise_var);
  for (Eigen::Index m = 0; m < ch.relays(); ++m) {
    const Complex relay_noise = complex_gaussian(rng, relay_noise_var);
    const Complex bs_noise = complex_gaussian(rng, noise_var);
    block.r(m + 1) += forward_gain * ch.relay_bs(m) * relay_noise + bs_noise;
  }
  return block;
}

DetectionResult decorrelate(const CompositeMatrix& h, const ReceivedBlock& block,
                            double condition_threshold) {
  const Eigen::Index rows = h.h.rows();
  const Eigen::Index cols = h.h.cols();
  if (cols > rows)
    throw UnderdeterminedError("cannot separate " + std::to_string(cols) + " packets from " +
                               std::to_string(rows) + " observations");
  if (cols == 0) throw std::invalid_argument("composite matrix has no device columns");
  if (block.r.size() != rows)
    throw std::invalid_argument("received block length must match the composite matrix height");

  // The Gram spectrum gives sigma^2 cheaply; it loses resolution as the
  // condition number approaches 1/sqrt(eps), where the SVD takes over.
  DetectionResult out;
  const Eigen::MatrixXcd gram = h.h.adjoint() * h.h;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues()(cols - 1);
  const double bottom = eig.eigenvalues()(0);
  const double gram_condition =
      bottom > 0.0 ? std::sqrt(top / bottom) : std::numeric_limits<double>::infinity();

  if (gram_condition < kGramConditionLimit) {
    out.condition_number = gram_condition;
    out.estimates = Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>(h.h).solve(block.r);
  } else {
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h.h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    out.condition_number =
        smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
    out.estimates = svd.solve(block.r);
  }
  out.decided.resize(cols);
  for (Eigen::Index k = 0; k < cols; ++k) out.decided(k) = qpsk_slice(out.estimates(k));
  out.success = out.condition_number < condition_threshold;
  return out;
}

double noise_variance_for_snr(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

TrialOutcome run_collision_trial(int k_devices, int m_relays, double noise_var,
                                 std::uint64_t seed) {
  const ChannelRealization ch = generate_channels(k_devices, m_relays, derive_seed(seed, kChannels));
  const CompositeMatrix h = composite_matrix(ch);

  Rng symbol_rng(derive_seed(seed, kSymbols));
  std::uniform_int_distribution<int> pick(0, 3);
  Eigen::VectorXcd symbols(k_devices);
  for (Eigen::Index k = 0; k < k_devices; ++k) symbols(k) = qpsk_symbol(pick(symbol_rng));

  const ReceivedBlock block =
      simulate_reception(h, ch, symbols, noise_var, noise_var, derive_seed(seed, kNoise));
  const DetectionResult det = decorrelate(h, block);

  TrialOutcome outcome;
  for (Eigen::Index k = 0; k < k_devices; ++k)
    if (det.decided(k) != symbols(k)) ++outcome.symbol_errors;
  outcome.decoded = det.success && outcome.symbol_errors == 0;
  return outcome;
}

double symbol_error_rate(int k_devices, int m_relays, double snr_db, std::int64_t trials,
                         std::uint64_t seed, unsigned threads) {
  if (trials < 1) throw std::invalid_argument("symbol_error_rate needs trials >= 1");
  if (k_devices < 1 || m_relays < 1)
    throw std::invalid_argument("symbol_error_rate needs K >= 1 and M >= 1");
  if (k_devices > m_relays + 1)
    throw UnderdeterminedError("cannot separate " + std::to_string(k_devices) +
                               " packets with " + std::to_string(m_relays) + " relays");
  const double noise_var = noise_variance_for_snr(snr_db);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(trials)));
  std::vector<std::int64_t> errors(threads, 0);
  std::atomic<std::int64_t> next{0};
  auto worker = [&](unsigned slot) {
    for (std::int64_t t = next++; t < trials; t = next++)
      errors[slot] += run_collision_trial(k_devices, m_relays, noise_var,
                                          derive_seed(seed, static_cast<std::uint64_t>(t)))
                          .symbol_errors;
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker, i);
  }

  std::int64_t total = 0;
  for (auto e : errors) total += e;
  return static_cast<double>(total) / (static_cast<double>(trials) * k_devices);
}

}  // namespace rara::mpr
