#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace xlmimo {

// Square QAM alphabet with Gray bit labeling and unit average energy.
// Labels are laid out as (gray(real index) << pam_bits) | gray(imag index),
// bit 0 of the per-symbol LLR/label vectors being the most significant bit.
struct Constellation {
  int bits_per_symbol = 0;
  double avg_energy = 0.0;  // E_x
  Eigen::VectorXcd points;
  std::vector<std::uint32_t> bit_labels;  // one label per point

  // Per-dimension PAM description; both dimensions are identical.
  int pam_bits = 0;
  Eigen::VectorXd pam_levels;             // ascending
  std::vector<std::uint32_t> pam_gray;    // Gray label per level index

  int order() const { return static_cast<int>(points.size()); }
};

// order must be one of {4, 16, 64, 256}; throws std::invalid_argument
// otherwise. The alphabet is normalized to E_x = 1.
Constellation make_qam(int order);

struct ScalarPosterior {
  std::complex<double> mean;
  double var = 0.0;
};

// Posterior mean/variance of a symbol given the AWGN observation gamma with
// noise power 1/tau, computed per PAM dimension with log-sum-exp weights.
ScalarPosterior denoise_symbol(const Constellation& c,
                               std::complex<double> gamma, double tau);

// Exact per-bit LLRs; positive means bit 0 is more likely. llr_out must hold
// bits_per_symbol entries.
void compute_llr(const Constellation& c, std::complex<double> gamma,
                 double tau, double* llr_out);

// Index of the nearest constellation point (ties to the lower index).
int hard_decision(const Constellation& c, std::complex<double> gamma);

}  // namespace xlmimo
