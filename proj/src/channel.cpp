#include "xlmimo/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "xlmimo/rng.hpp"

namespace xlmimo {

Eigen::MatrixXd exp_corr_matrix(int n, double kappa) {
  if (kappa < 0.0 || kappa >= 1.0) {
    throw std::invalid_argument("exp_corr_matrix: require 0 <= kappa < 1");
  }
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s(i, j) = std::pow(kappa, std::abs(i - j));
    }
  }
  return s;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < 1e-12) lam[i] = 0.0;
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd nonstationary_gain(int n, int k, const GeometryConfig& g) {
  Eigen::MatrixXd d(n, k);
  const double da = n > 1 ? g.array_len_m / (n - 1) : 0.0;
  for (int i = 0; i < n; ++i) {
    const double ai = i * da;
    for (int j = 0; j < k; ++j) {
      const double uj = (j + 0.5) * g.array_len_m / k;
      const double dist = std::hypot(ai - uj, g.vertical_m);
      d(i, j) = 1.0 / dist;
    }
  }
  return d;
}

double mean_column_energy(const SystemConfig& config) {
  switch (config.channel_model) {
    case ChannelModel::IID:
    case ChannelModel::Correlated:
      // Unit diagonal of the correlation matrix: K users * 1/K variance.
      return 1.0;
    case ChannelModel::NonStationary: {
      const Eigen::MatrixXd d = nonstationary_gain(
          config.n_antennas, config.n_users, config.geometry);
      return d.array().square().sum() / config.n_antennas / config.n_users;
    }
  }
  return 1.0;
}

namespace {

Eigen::MatrixXcd draw_rayleigh(int n, int k, PhiloxRng& rng) {
  Eigen::MatrixXcd h(n, k);
  const double var = 1.0 / k;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      h(i, j) = rng.next_cgaussian(var);
    }
  }
  return h;
}

}  // namespace

ChannelRealization gen_channel(const SystemConfig& config,
                               std::uint64_t seed) {
  if (config.n_antennas < config.n_users || config.n_users < 1) {
    throw std::invalid_argument("gen_channel: require N >= K >= 1");
  }
  if (config.kappa < 0.0 || config.kappa >= 1.0) {
    throw std::invalid_argument("gen_channel: require 0 <= kappa < 1");
  }
  PhiloxRng rng(seed);
  ChannelRealization out;
  out.model = config.channel_model;
  out.kappa = config.kappa;
  out.geometry = config.geometry;
  Eigen::MatrixXcd hr =
      draw_rayleigh(config.n_antennas, config.n_users, rng);
  switch (config.channel_model) {
    case ChannelModel::IID:
      out.h = std::move(hr);
      break;
    case ChannelModel::Correlated:
      // kappa = 0 reduces to the IID path bit-exactly.
      if (config.kappa == 0.0) {
        out.h = std::move(hr);
      } else {
        out.h = sqrtm_psd(exp_corr_matrix(config.n_antennas, config.kappa)) *
                hr;
      }
      break;
    case ChannelModel::NonStationary:
      out.h = nonstationary_gain(config.n_antennas, config.n_users,
                                 config.geometry)
                  .cast<std::complex<double>>()
                  .cwiseProduct(hr);
      break;
  }
  return out;
}

TransmissionInstance transmit(const ChannelRealization& h,
                              const Constellation& constellation,
                              double noise_var, std::uint64_t seed) {
  if (noise_var < 0.0) {
    throw std::invalid_argument("transmit: noise_var must be >= 0");
  }
  const int n = static_cast<int>(h.h.rows());
  const int k = static_cast<int>(h.h.cols());
  PhiloxRng rng(seed);
  TransmissionInstance t;
  t.x.resize(k);
  t.symbol_indices.resize(k);
  const std::uint32_t mask =
      static_cast<std::uint32_t>(constellation.order() - 1);
  for (int j = 0; j < k; ++j) {
    const int idx = static_cast<int>(rng.next_u32() & mask);
    t.symbol_indices[j] = idx;
    t.x[j] = constellation.points[idx];
  }
  t.noise.resize(n);
  for (int i = 0; i < n; ++i) {
    t.noise[i] = rng.next_cgaussian(noise_var);
  }
  t.y = h.h * t.x + t.noise;
  return t;
}

double snr_to_noise_var(double snr_db, double h_column_energy, double e_x) {
  if (e_x <= 0.0) {
    throw std::invalid_argument("snr_to_noise_var: e_x must be > 0");
  }
  return e_x * h_column_energy / std::pow(10.0, snr_db / 10.0);
}

}  // namespace xlmimo
