#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "xlmimo/constellation.hpp"
#include "xlmimo/partition.hpp"

namespace xlmimo {

enum class Inversion { Auto, Direct, Recursive };

enum class DetectorMode { Full, Trimmed, Hierarchical, OneShot, LocalEpThenMrc };

struct DetectorConfig {
  int max_iters = 6;
  double damping = 1.0;         // 1 = off
  double precision_floor = 1e-9;
  Inversion inversion = Inversion::Auto;
  DetectorMode mode = DetectorMode::Full;
  int secondary_size = 0;       // Hierarchical mode
};

struct IterationRecord {
  int iter = 0;
  double tau0_mean = 0.0;
  double omega0 = 0.0;
  Eigen::VectorXd tau0k;    // per-user combined precision
  Eigen::VectorXcd gamma0;  // combined mean, kept for per-iteration metrics
  int floor_events = 0;
};

// Full-model iteration variables captured after the last iteration; feeds the
// fixed-point residual checks.
struct EpState {
  std::vector<double> tau_c, eta_c, omega_c;
  std::vector<Eigen::VectorXcd> gamma_c, xhat_c, p_c;
  double tau0 = 0.0;
  double omega0 = 0.0;
  Eigen::VectorXcd gamma0, xhat0;
};

struct DetectionOutput {
  Eigen::VectorXcd gamma0;
  Eigen::VectorXd tau0k;
  Eigen::VectorXcd xhat0;
  Eigen::VectorXd v0;
  std::vector<int> hard_symbols;
  Eigen::MatrixXd llrs;  // K x bits_per_symbol
  std::vector<IterationRecord> trace;
  EpState final_state;   // populated in Full mode
  int floor_events = 0;
};

// --- Algorithm steps, exposed for direct testing ---

struct PriorResult {
  double tau = 0.0;
  Eigen::VectorXcd gamma;
  bool floored = false;
};

// Step (1): tau = omega0 - eta, gamma = (omega0 * xhat0 - p) / tau, with p
// the unscaled extrinsic product eta * r. tau <= 0 is floored to floor_eps.
PriorResult lpm_prior(double omega0, const Eigen::VectorXcd& xhat0_sub,
                      double eta, const Eigen::VectorXcd& p, double floor_eps);

struct LmmseResult {
  Eigen::MatrixXcd sigma;
  Eigen::VectorXcd xhat;
  double omega = 0.0;
};

// Step (2): Sigma = (sigma^-2 H^H H + tau I)^-1, xhat = Sigma (sigma^-2 H^H y
// + tau gamma), omega = (tr(Sigma)/K)^-1.
LmmseResult lpm_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                      double tau, const Eigen::VectorXcd& gamma, double sigma2,
                      Inversion inversion = Inversion::Auto);

// Rank-one recursion over the rows of h (one Sherman-Morrison update per
// antenna), starting from (tau I)^-1.
Eigen::MatrixXcd recursive_sigma(const Eigen::MatrixXcd& h, double tau,
                                 double sigma2);

struct ExtrinsicResult {
  double eta = 0.0;
  Eigen::VectorXcd p;  // omega * xhat - tau * gamma (division-free form)
  bool floored = false;
};

// Step (3): eta = omega - tau floored at floor_eps; the mean is kept as the
// unscaled product p so downstream sums need no division.
ExtrinsicResult lpm_extrinsic(double omega, const Eigen::VectorXcd& xhat,
                              double tau, const Eigen::VectorXcd& gamma,
                              double floor_eps);

// Step (4), full model: tau0 = sum eta_c, gamma0 = sum p_c / tau0. Sums run
// in ascending subarray order.
std::pair<double, Eigen::VectorXcd> cpm_mrc(
    const std::vector<double>& eta, const std::vector<Eigen::VectorXcd>& p);

// Step (4), trimmed model: per-user sums restricted to the serving subarrays.
void cpm_mrc_trimmed(const std::vector<double>& eta,
                     const std::vector<Eigen::VectorXcd>& p,
                     const TrimmedPartition& tp, Eigen::VectorXd& tau0k,
                     Eigen::VectorXcd& gamma0);

struct DenoiseResult {
  Eigen::VectorXcd xhat0;
  Eigen::VectorXd v0;
  double omega0 = 0.0;
};

// Step (5): per-user MMSE denoising under the discrete constellation prior;
// omega0 = (mean of v0)^-1.
DenoiseResult cpm_denoise(const Eigen::VectorXcd& gamma0,
                          const Eigen::VectorXd& tau0k,
                          const Constellation& c);

// --- Detector drivers ---

DetectionOutput run_ep(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                       const SubarrayPartition& part,
                       const DetectorConfig& cfg, const Constellation& con,
                       double sigma2);

DetectionOutput run_ep_trimmed(const Eigen::VectorXcd& y,
                               const TrimmedPartition& tp,
                               const DetectorConfig& cfg,
                               const Constellation& con, double sigma2);

DetectionOutput run_hierarchical(const Eigen::VectorXcd& y,
                                 const Eigen::MatrixXcd& h,
                                 const SubarrayPartition& part,
                                 const Hierarchy& hier,
                                 const DetectorConfig& cfg,
                                 const Constellation& con, double sigma2);

enum class FeedforwardScheme { OneShot, LocalEpThenMrc };

DetectionOutput run_one_feedforward(const Eigen::VectorXcd& y,
                                    const TrimmedPartition& tp,
                                    const DetectorConfig& cfg,
                                    const Constellation& con, double sigma2,
                                    FeedforwardScheme scheme);

}  // namespace xlmimo
