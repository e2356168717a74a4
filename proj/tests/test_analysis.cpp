#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "xlmimo/analysis.hpp"
#include "xlmimo/channel.hpp"
#include "xlmimo/detector.hpp"
#include "xlmimo/evolution.hpp"
#include "xlmimo/rng.hpp"

using namespace xlmimo;

TEST_CASE("subarray spectra: counts, trace identity, zero padding") {
  SystemConfig sys;
  sys.n_antennas = 16;
  sys.n_users = 8;
  const ChannelRealization h = gen_channel(sys, 2);
  const SubarrayPartition part = partition_uniform(16, 2);
  const EigenSpectrum s = spectra_of(h.h, part);
  REQUIRE(s.lambda.size() == 8);
  for (int c = 0; c < 8; ++c) {
    REQUIRE(s.lambda[c].size() == 8);
    CHECK(s.lambda[c].minCoeff() >= 0.0);
    // N_c = 2 < K = 8: at most two nonzero eigenvalues.
    int nonzero = 0;
    for (int i = 0; i < 8; ++i) nonzero += s.lambda[c][i] > 1e-9;
    CHECK(nonzero <= 2);
    CHECK(s.lambda[c].sum() ==
          doctest::Approx(h.h.middleRows(2 * c, 2).squaredNorm())
              .epsilon(1e-10));
  }
}

TEST_CASE("lmmse mse formula equals the matrix-inverse trace") {
  SystemConfig sys;
  sys.n_antennas = 12;
  sys.n_users = 6;
  const ChannelRealization h = gen_channel(sys, 3);
  const SubarrayPartition part = partition_uniform(12, 12);
  const EigenSpectrum s = spectra_of(h.h, part);
  const double sigma2 = 0.3;
  for (double nu : {0.1, 1.0, 7.5}) {
    Eigen::MatrixXcd m = (h.h.adjoint() * h.h) / sigma2;
    m.diagonal().array() += 1.0 / nu;
    const double want =
        m.inverse().trace().real() / 6.0;
    CHECK(mse_subarray(nu, s.lambda[0], sigma2) ==
          doctest::Approx(want).epsilon(1e-10));
  }
  CHECK_THROWS_AS(mse_subarray(0.0, s.lambda[0], sigma2),
                  std::invalid_argument);
}

TEST_CASE("scalar denoiser mse limits") {
  for (int order : {4, 16}) {
    const Constellation con = make_qam(order);
    CHECK(mse_denoiser(1e-8, con) < 1e-6);
    CHECK(mse_denoiser(1e8, con) ==
          doctest::Approx(con.avg_energy).epsilon(1e-3));
    CHECK_THROWS_AS(mse_denoiser(0.0, con), std::invalid_argument);
  }
}

TEST_CASE("scalar denoiser mse matches Monte Carlo for QPSK") {
  const Constellation con = make_qam(4);
  const double rho = 0.5;
  PhiloxRng rng(91);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const int idx = static_cast<int>(rng.next_u32() & 3u);
    const std::complex<double> x = con.points[idx];
    const std::complex<double> g = x + rng.next_cgaussian(rho);
    const ScalarPosterior sp = denoise_symbol(con, g, 1.0 / rho);
    acc += std::norm(sp.mean - x);
  }
  CHECK(mse_denoiser(rho, con) == doctest::Approx(acc / n).epsilon(0.02));
}

TEST_CASE("transfer functions are bounded as expected") {
  SystemConfig sys;
  sys.n_antennas = 16;
  sys.n_users = 8;
  const ChannelRealization h = gen_channel(sys, 4);
  const EigenSpectrum s = spectra_of(h.h, partition_uniform(16, 4));
  const Constellation con = make_qam(16);
  for (double v : {0.01, 0.3, 1.0, 20.0}) {
    for (const auto& lam : s.lambda) {
      CHECK(phi_subarray(v, lam, 0.2) >= 0.0);
    }
    CHECK(psi_denoiser(v, con) >= 1.0 / con.avg_energy - 1e-9);
  }
}

TEST_CASE("evolution trajectories are monotone and initialized at E_x") {
  const Constellation con = make_qam(16);
  for (std::uint64_t seed : {10, 11, 12}) {
    SystemConfig sys;
    sys.n_antennas = 64;
    sys.n_users = 16;
    if (seed == 12) {
      sys.channel_model = ChannelModel::Correlated;
      sys.kappa = 0.4;
    }
    const ChannelRealization h = gen_channel(sys, seed);
    const EigenSpectrum s = spectra_of(h.h, partition_uniform(64, 8));
    const EvolutionState ev = evolve(s, 0.3, con, 8);
    REQUIRE(ev.rho.size() == 8);
    REQUIRE(ev.nu.rows() == 8);
    for (int c = 0; c < ev.nu.cols(); ++c) {
      CHECK(ev.nu(0, c) == doctest::Approx(con.avg_energy));
    }
    for (int t = 1; t < 8; ++t) {
      CHECK(ev.rho[t] <= ev.rho[t - 1] * (1 + 1e-12));
      for (int c = 0; c < ev.nu.cols(); ++c) {
        CHECK(ev.nu(t, c) <= ev.nu(t - 1, c) * (1 + 1e-12));
        CHECK(ev.nu(t, c) > 0.0);
      }
    }
  }
  CHECK_THROWS_AS(evolve(EigenSpectrum{}, 0.3, con, 0), std::invalid_argument);
}

TEST_CASE("fixed-point residuals vanish for a consistent state") {
  EpState st;
  const int c_count = 3, k = 4;
  st.omega0 = 2.5;
  st.xhat0 = Eigen::VectorXcd::Constant(k, std::complex<double>(0.5, -0.25));
  st.tau0 = 1.0;
  double tau_sum = st.tau0;
  for (int c = 0; c < c_count; ++c) {
    st.tau_c.push_back(c == 2 ? 2.5 * c_count - 1.0 - 2.0 : 1.0);
    st.omega_c.push_back(2.5);
    st.xhat_c.push_back(st.xhat0);
    tau_sum += st.tau_c.back();
  }
  REQUIRE(tau_sum / c_count == doctest::Approx(st.omega0));
  const ResidualReport r = fixed_point_residuals(st);
  CHECK(r.omega_spread < 1e-12);
  CHECK(r.omega0_vs_avg < 1e-12);
  CHECK(r.mean_spread < 1e-12);
  CHECK_THROWS_AS(fixed_point_residuals(EpState{}), std::invalid_argument);
}

TEST_CASE("converged detector state has small residuals") {
  SystemConfig sys;
  sys.n_antennas = 64;
  sys.n_users = 8;
  const Constellation con = make_qam(4);
  const double sigma2 = snr_to_noise_var(10.0, 1.0, con.avg_energy);
  const ChannelRealization h = gen_channel(sys, 21);
  const TransmissionInstance tx = transmit(h, con, sigma2, 22);
  DetectorConfig cfg;
  cfg.max_iters = 50;
  const DetectionOutput out =
      run_ep(tx.y, h.h, partition_uniform(64, 16), cfg, con, sigma2);
  const ResidualReport r = fixed_point_residuals(out.final_state);
  CHECK(r.omega_spread < 0.05);
  CHECK(r.omega0_vs_avg < 0.05);
}

TEST_CASE("asymptotic fixed-point check on a single-subarray run") {
  SystemConfig sys;
  sys.n_antennas = 256;
  sys.n_users = 32;
  const Constellation con = make_qam(16);
  const double sigma2 = snr_to_noise_var(10.0, 1.0, con.avg_energy);
  const ChannelRealization h = gen_channel(sys, 30);
  const TransmissionInstance tx = transmit(h, con, sigma2, 31);
  DetectorConfig cfg;
  cfg.max_iters = 40;
  const DetectionOutput out =
      run_ep(tx.y, h.h, partition_uniform(256, 256), cfg, con, sigma2);
  const EpState& st = out.final_state;
  const double err = replica_check(h.h, sigma2, st.omega_c[0], st.tau0);
  CHECK(err < 0.2);
  CHECK_THROWS_AS(replica_check(h.h, sigma2, 1e-30, st.tau0),
                  std::runtime_error);
}

TEST_CASE("operation counts: hand-evaluated tuples") {
  // Per-subarray iterative detector: N_c=2, K=8, C=32, T=3, 16-QAM.
  const ComplexityReport r = complexity_count(ComplexityScenario::Alg1Full, 2,
                                              8, 32, 3, 16);
  CHECK(r.mults_lpm == 8 * 2 * 3 * 8 * 9 + 6 * 3 * 8 * 10);
  CHECK(r.trans_lpm == 3 * 17);
  CHECK(r.mults_cpm == 32 * 3 * 17 + 8 * 2 * (7 * 16 + 2));
  CHECK(r.exps_cpm == 8 * 16 * 2);
  CHECK(r.trans_cpm == 17 * 2);
  CHECK(r.exps_lpm == 0);

  // Centralized worked example: N=64, K=16, T=1, 16-QAM.
  const ComplexityReport c = complexity_count(
      ComplexityScenario::CentralizedEp, 64, 16, 1, 1, 16);
  CHECK(c.mults_lpm == 141408);
  CHECK(c.exps_lpm == 0);
  CHECK(c.mults_cpm == 0);

  // One-feedforward: N_c=4, K=8, C=16, T=2, QPSK.
  const ComplexityReport f = complexity_count(
      ComplexityScenario::OneFeedforwardFull, 4, 8, 16, 2, 4);
  CHECK(f.mults_lpm == 2 * 8 * (8 * 4 * 9 + 2 * 35) + 8 * 1 * (7 * 4 + 6));
  CHECK(f.exps_lpm == 8 * 2 * 4);
  CHECK(f.trans_lpm == 17);
  CHECK(f.mults_cpm == 16 * 17);
}

TEST_CASE("operation counts: trimmed equals full at equal user counts") {
  for (long long k : {4, 8, 16}) {
    const auto a = complexity_count(ComplexityScenario::Alg1Full, 8, k, 8, 5,
                                    16);
    const auto b = complexity_count(ComplexityScenario::Alg1Trimmed, 8, k, 8,
                                    5, 16);
    CHECK(a.mults_lpm == b.mults_lpm);
    CHECK(a.mults_cpm == b.mults_cpm);
    CHECK(a.exps_cpm == b.exps_cpm);
    CHECK(a.trans_lpm == b.trans_lpm);
    const auto c = complexity_count(ComplexityScenario::OneFeedforwardFull, 8,
                                    k, 8, 5, 16);
    const auto d = complexity_count(ComplexityScenario::OneFeedforwardTrimmed,
                                    8, k, 8, 5, 16);
    CHECK(c.mults_lpm == d.mults_lpm);
    CHECK(c.mults_cpm == d.mults_cpm);
  }
  CHECK_THROWS_AS(complexity_count(ComplexityScenario::Alg1Full, 0, 8, 8, 5,
                                   16),
                  std::invalid_argument);
}
