#include "xlmimo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xlmimo {

ResidualReport fixed_point_residuals(const EpState& state) {
  const int c_count = static_cast<int>(state.omega_c.size());
  if (c_count == 0 || state.xhat0.size() == 0) {
    throw std::invalid_argument(
        "fixed_point_residuals: state not populated (full mode required)");
  }
  ResidualReport r;
  double tau_sum = state.tau0;
  for (int c = 0; c < c_count; ++c) tau_sum += state.tau_c[c];
  const double omega_bar = tau_sum / c_count;

  for (int c = 0; c < c_count; ++c) {
    r.omega_spread = std::max(
        r.omega_spread,
        std::abs(state.omega_c[c] - state.omega0) / state.omega0);
  }
  r.omega0_vs_avg = std::abs(state.omega0 - omega_bar) / state.omega0;

  const double xnorm = state.xhat0.norm();
  for (int c = 0; c < c_count; ++c) {
    r.mean_spread = std::max(
        r.mean_spread, (state.xhat_c[c] - state.xhat0).norm() / xnorm);
  }
  return r;
}

double replica_check(const Eigen::MatrixXcd& h_full, double sigma2,
                     double omega_converged, double tau0_converged) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      h_full.adjoint() * h_full, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const int k = static_cast<int>(lam.size());
  const double inv_sigma2 = 1.0 / sigma2;
  const double target = 1.0 / omega_converged;

  auto stieltjes = [&](double tau) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += 1.0 / (inv_sigma2 * lam[i] + tau);
    return acc / k;
  };

  // stieltjes is strictly decreasing in tau; bisect for the target value.
  double lo = 1e-12, hi = 1e12;
  if (stieltjes(lo) < target || stieltjes(hi) > target) {
    throw std::runtime_error("replica_check: no root in bracket");
  }
  while (hi - lo > 1e-10 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (stieltjes(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double tau_star = 0.5 * (lo + hi);
  return std::abs(tau0_converged - (omega_converged - tau_star)) /
         tau0_converged;
}

ComplexityReport complexity_count(ComplexityScenario scenario, long long n_c,
                                  long long k, long long c, long long t,
                                  long long qam_order) {
  if (n_c < 1 || k < 1 || c < 1 || t < 1 || qam_order < 1) {
    throw std::invalid_argument("complexity_count: arguments must be >= 1");
  }
  const long long q = qam_order;
  ComplexityReport r;
  r.scenario = scenario;
  switch (scenario) {
    case ComplexityScenario::Alg1Full:
    case ComplexityScenario::Alg1Trimmed:
      // Identical formulas; k holds K_c in the trimmed scenario.
      r.mults_lpm = 8 * n_c * t * k * (k + 1) + 6 * t * k * (k + 2);
      r.exps_lpm = 0;
      r.trans_lpm = t * (2 * k + 1);
      break;
    case ComplexityScenario::OneFeedforwardFull:
    case ComplexityScenario::OneFeedforwardTrimmed:
      r.mults_lpm = t * k * (8 * n_c * (k + 1) + 2 * (4 * k + 3)) +
                    k * (t - 1) * (7 * q + 6);
      r.exps_lpm = k * t * q;
      r.trans_lpm = 2 * k + 1;
      r.mults_cpm = c * (1 + 2 * k);
      break;
    case ComplexityScenario::CentralizedEp:
      // n_c holds the full antenna count N.
      r.mults_lpm = t * k * (8 * n_c * (k + 1) + 2 * (4 * k + 3)) +
                    k * (t - 1) * (7 * q + 6);
      r.exps_lpm = k * q * (t - 1);
      return r;
  }
  if (scenario == ComplexityScenario::Alg1Full ||
      scenario == ComplexityScenario::Alg1Trimmed) {
    r.mults_cpm = c * t * (1 + 2 * k) + k * (t - 1) * (7 * q + 2);
    r.exps_cpm = k * q * (t - 1);
    r.trans_cpm = (2 * k + 1) * (t - 1);
  }
  return r;
}

}  // namespace xlmimo
