#pragma once

#include <Eigen/Dense>

#include "xlmimo/detector.hpp"

namespace xlmimo {

struct ResidualReport {
  // Max relative deviation among the per-subarray posterior precisions.
  double omega_spread = 0.0;
  // Relative deviation of omega0 from (tau0 + sum tau_c) / C.
  double omega0_vs_avg = 0.0;
  // Max relative deviation of the per-subarray means from xhat0.
  double mean_spread = 0.0;
};

// Fixed-point consistency of a full-model EP state: at a fixed point all
// omega_c coincide with omega0 = (tau0 + sum tau_c)/C and all xhat_c coincide
// with xhat0.
ResidualReport fixed_point_residuals(const EpState& state);

// Empirical check of the asymptotic fixed-point equation: solves
// (1/K) sum_i 1/(sigma^-2 lambda_i + tau*) = 1/omega by bisection over the
// eigenvalues of H^H H and returns |tau0 - (omega - tau*)| / tau0.
double replica_check(const Eigen::MatrixXcd& h_full, double sigma2,
                     double omega_converged, double tau0_converged);

enum class ComplexityScenario {
  Alg1Full,
  Alg1Trimmed,
  OneFeedforwardFull,
  OneFeedforwardTrimmed,
  CentralizedEp,
};

// Exact integer operation counts for T iterations: real multiplications,
// exponentials, and real numbers transferred, split between one LPM and the
// CPM. For the centralized scenario the totals are reported on the LPM side
// and n_c holds N.
struct ComplexityReport {
  long long mults_lpm = 0, exps_lpm = 0, trans_lpm = 0;
  long long mults_cpm = 0, exps_cpm = 0, trans_cpm = 0;
  ComplexityScenario scenario = ComplexityScenario::Alg1Full;
};

ComplexityReport complexity_count(ComplexityScenario scenario, long long n_c,
                                  long long k, long long c, long long t,
                                  long long qam_order);

}  // namespace xlmimo
