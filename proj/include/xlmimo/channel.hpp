#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "xlmimo/constellation.hpp"

namespace xlmimo {

enum class ChannelModel { IID, Correlated, NonStationary };

// Linear array geometry for the non-stationary model. Antennas are placed
// uniformly on [0, array_len_m]; users are placed at (k + 1/2) * L / K along
// the array at a common vertical distance.
struct GeometryConfig {
  double array_len_m = 250.0;
  double vertical_m = 25.0;
};

struct SystemConfig {
  int n_antennas = 0;
  int n_users = 0;
  double noise_var = 0.0;  // sigma^2 per complex receive dimension
  Constellation constellation;
  ChannelModel channel_model = ChannelModel::IID;
  double kappa = 0.0;  // exponential correlation coefficient, 0 <= kappa < 1
  GeometryConfig geometry;
};

struct ChannelRealization {
  Eigen::MatrixXcd h;  // N x K
  ChannelModel model = ChannelModel::IID;
  double kappa = 0.0;
  GeometryConfig geometry;
};

struct TransmissionInstance {
  Eigen::VectorXcd x;                    // K transmit symbols
  std::vector<int> symbol_indices;       // indices into the constellation
  Eigen::VectorXcd y;                    // N received samples
  Eigen::VectorXcd noise;                // N noise samples, y = Hx + noise
};

// Exponential correlation matrix with entries kappa^|i-j|.
Eigen::MatrixXd exp_corr_matrix(int n, double kappa);

// Symmetric PSD square root via eigendecomposition; eigenvalues below 1e-12
// are clamped to zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a);

// Large-scale gain matrix D with entries 1/d_ij from the linear-array
// geometry.
Eigen::MatrixXd nonstationary_gain(int n, int k, const GeometryConfig& g);

// Expected per-user received energy per antenna, i.e. (1/N) sum_ij E|H_ij|^2
// scaled so that the IID model gives 1. Used by the SNR mapping.
double mean_column_energy(const SystemConfig& config);

// Deterministic given (config, seed). IID entries are CN(0, 1/K); the
// Correlated model applies the exponential-correlation square root on the
// left; NonStationary forms D .* H_R.
ChannelRealization gen_channel(const SystemConfig& config, std::uint64_t seed);

// Uniform symbols, CN(0, noise_var) noise, y = Hx + n by construction.
TransmissionInstance transmit(const ChannelRealization& h,
                              const Constellation& constellation,
                              double noise_var, std::uint64_t seed);

// sigma^2 = e_x * h_column_energy / 10^(snr_db/10).
double snr_to_noise_var(double snr_db, double h_column_energy, double e_x);

}  // namespace xlmimo
