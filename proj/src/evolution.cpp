#include "xlmimo/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace xlmimo {

EigenSpectrum spectra_of(const Eigen::MatrixXcd& h,
                         const SubarrayPartition& part) {
  EigenSpectrum s;
  s.lambda.resize(part.count());
  for (int c = 0; c < part.count(); ++c) {
    const auto hc = h.middleRows(part.offsets[c], part.sizes[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hc.adjoint() * hc,
                                                       Eigen::EigenvaluesOnly);
    Eigen::VectorXd lam = es.eigenvalues();
    for (int i = 0; i < lam.size(); ++i) {
      if (lam[i] < -1e-10) {
        throw std::runtime_error("spectra_of: negative eigenvalue");
      }
      if (lam[i] < 0.0) lam[i] = 0.0;
    }
    s.lambda[c] = std::move(lam);
  }
  return s;
}

double mse_subarray(double nu, const Eigen::VectorXd& lambda, double sigma2) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("mse_subarray: nu must be > 0");
  }
  double acc = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    acc += sigma2 * nu / (lambda[i] * nu + sigma2);
  }
  return acc / lambda.size();
}

namespace {

// 64-node Gauss-Hermite rule (weight e^{-u^2}) via Golub-Welsch.
struct GaussHermite {
  Eigen::VectorXd nodes, weights;
  GaussHermite() {
    constexpr int n = 64;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const double b = std::sqrt(i / 2.0);
      j(i, i - 1) = b;
      j(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes = es.eigenvalues();
    weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
      const double v = es.eigenvectors()(0, i);
      weights[i] = sqrt_pi * v * v;
    }
  }
};

const GaussHermite& gauss_hermite() {
  static const GaussHermite gh;
  return gh;
}

// Posterior mean of one PAM dimension given observation r with per-dimension
// noise variance rho/2 (weight exp(-(r-s)^2 / rho)).
double pam_mean(const Constellation& con, double r, double inv_rho) {
  const int m = static_cast<int>(con.pam_levels.size());
  double emax = -1e300;
  for (int i = 0; i < m; ++i) {
    const double d = r - con.pam_levels[i];
    emax = std::max(emax, -inv_rho * d * d);
  }
  double s0 = 0.0, s1 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double s = con.pam_levels[i];
    const double d = r - s;
    const double w = std::exp(-inv_rho * d * d - emax);
    s0 += w;
    s1 += s * w;
  }
  return s1 / s0;
}

}  // namespace

double mse_denoiser(double rho, const Constellation& con) {
  if (!(rho > 0.0)) {
    throw std::invalid_argument("mse_denoiser: rho must be > 0");
  }
  const auto& gh = gauss_hermite();
  const int m = static_cast<int>(con.pam_levels.size());
  const double inv_rho = 1.0 / rho;
  const double zscale = std::sqrt(rho);  // sqrt(2) * per-dim std
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  double acc = 0.0;
  for (int si = 0; si < m; ++si) {
    const double s = con.pam_levels[si];
    for (int q = 0; q < gh.nodes.size(); ++q) {
      const double r = s + zscale * gh.nodes[q];
      const double err = s - pam_mean(con, r, inv_rho);
      acc += gh.weights[q] * err * err;
    }
  }
  // Two identical PAM dimensions.
  return 2.0 * inv_sqrt_pi * acc / m;
}

double phi_subarray(double nu, const Eigen::VectorXd& lambda, double sigma2) {
  return 1.0 / mse_subarray(nu, lambda, sigma2) - 1.0 / nu;
}

double psi_denoiser(double rho, const Constellation& con) {
  return 1.0 / mse_denoiser(rho, con) - 1.0 / rho;
}

EvolutionState evolve(const EigenSpectrum& spectra, double sigma2,
                      const Constellation& con, int t_max) {
  if (t_max < 1) {
    throw std::invalid_argument("evolve: t_max must be >= 1");
  }
  const int c_count = static_cast<int>(spectra.lambda.size());
  EvolutionState st;
  st.rho.resize(t_max);
  st.nu.resize(t_max, c_count);
  st.nu.row(0).setConstant(con.avg_energy);

  auto clamp = [&st](double v) {
    if (v < 1e-12) {
      st.clamped = true;
      return 1e-12;
    }
    if (v > 1e12) {
      st.clamped = true;
      return 1e12;
    }
    return v;
  };

  std::vector<double> phi(c_count);
  for (int t = 0; t < t_max; ++t) {
    double phi_sum = 0.0;
    for (int c = 0; c < c_count; ++c) {
      phi[c] = phi_subarray(st.nu(t, c), spectra.lambda[c], sigma2);
      phi_sum += phi[c];
    }
    st.rho[t] = clamp(1.0 / phi_sum);
    if (t + 1 < t_max) {
      const double inv_mse0 = 1.0 / mse_denoiser(st.rho[t], con);
      for (int c = 0; c < c_count; ++c) {
        st.nu(t + 1, c) = clamp(1.0 / (inv_mse0 - phi[c]));
      }
    }
  }
  return st;
}

}  // namespace xlmimo
