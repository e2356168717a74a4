#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xlmimo/constellation.hpp"
#include "xlmimo/partition.hpp"

namespace xlmimo {

// Per-subarray eigenvalues of H_c^H H_c (K values each; zeros appear when
// N_c < K). Values below -1e-10 are rejected, small negatives clamped to 0.
struct EigenSpectrum {
  std::vector<Eigen::VectorXd> lambda;
};

EigenSpectrum spectra_of(const Eigen::MatrixXcd& h,
                         const SubarrayPartition& part);

// Average MSE of the per-subarray LMMSE estimator with prior variance nu:
// (1/K) sum_i sigma^2 nu / (lambda_i nu + sigma^2).
double mse_subarray(double nu, const Eigen::VectorXd& lambda, double sigma2);

// Average MSE of the scalar MMSE denoiser over an AWGN observation with
// noise power rho, computed per PAM dimension with 64-node Gauss-Hermite
// quadrature.
double mse_denoiser(double rho, const Constellation& con);

// Auxiliary transfer functions: Phi_c(nu) = 1/mse_c(nu) - 1/nu and
// Psi(rho) = 1/mse_0(rho) - 1/rho.
double phi_subarray(double nu, const Eigen::VectorXd& lambda, double sigma2);
double psi_denoiser(double rho, const Constellation& con);

struct EvolutionState {
  Eigen::VectorXd rho;  // rho^t, t = 1..t_max
  Eigen::MatrixXd nu;   // nu_c^t, (t_max x C), row 0 = E_x
  bool clamped = false;
};

// Deterministic evolution recursion; values clamped to [1e-12, 1e12] with the
// clamped flag set.
EvolutionState evolve(const EigenSpectrum& spectra, double sigma2,
                      const Constellation& con, int t_max);

}  // namespace xlmimo
