#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "xlmimo/channel.hpp"
#include "xlmimo/constellation.hpp"
#include "xlmimo/rng.hpp"

using namespace xlmimo;

TEST_CASE("make_qam rejects non-square orders") {
  CHECK_THROWS_AS(make_qam(8), std::invalid_argument);
  CHECK_THROWS_AS(make_qam(32), std::invalid_argument);
  CHECK_THROWS_AS(make_qam(0), std::invalid_argument);
  CHECK_THROWS_AS(make_qam(-4), std::invalid_argument);
}

TEST_CASE("QPSK alphabet") {
  const Constellation c = make_qam(4);
  CHECK(c.bits_per_symbol == 2);
  CHECK(c.order() == 4);
  CHECK(c.avg_energy == doctest::Approx(1.0).epsilon(1e-14));
  const double a = 1.0 / std::sqrt(2.0);
  for (int p = 0; p < 4; ++p) {
    CHECK(std::abs(std::abs(c.points[p].real()) - a) < 1e-14);
    CHECK(std::abs(std::abs(c.points[p].imag()) - a) < 1e-14);
  }
}

TEST_CASE("16-QAM levels and unit energy") {
  const Constellation c = make_qam(16);
  CHECK(c.bits_per_symbol == 4);
  const double s = 1.0 / std::sqrt(10.0);
  REQUIRE(c.pam_levels.size() == 4);
  CHECK(c.pam_levels[0] == doctest::Approx(-3 * s));
  CHECK(c.pam_levels[1] == doctest::Approx(-1 * s));
  CHECK(c.pam_levels[2] == doctest::Approx(1 * s));
  CHECK(c.pam_levels[3] == doctest::Approx(3 * s));
  CHECK(c.avg_energy == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(make_qam(64).avg_energy == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(make_qam(256).avg_energy == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Gray labels differ in one bit between adjacent levels") {
  for (int order : {4, 16, 64, 256}) {
    const Constellation c = make_qam(order);
    for (std::size_t i = 1; i < c.pam_gray.size(); ++i) {
      const std::uint32_t diff = c.pam_gray[i] ^ c.pam_gray[i - 1];
      CHECK((diff & (diff - 1)) == 0);
      CHECK(diff != 0);
    }
  }
}

TEST_CASE("QPSK denoiser matches the tanh closed form") {
  const Constellation c = make_qam(4);
  const double a = 1.0 / std::sqrt(2.0);
  PhiloxRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::complex<double> g(3 * rng.next_gaussian(),
                                 3 * rng.next_gaussian());
    const double tau = 0.05 + 5.0 * rng.next_double();
    const ScalarPosterior sp = denoise_symbol(c, g, tau);
    CHECK(sp.mean.real() ==
          doctest::Approx(a * std::tanh(2.0 * tau * a * g.real()))
              .epsilon(1e-12));
    CHECK(sp.mean.imag() ==
          doctest::Approx(a * std::tanh(2.0 * tau * a * g.imag()))
              .epsilon(1e-12));
  }
}

namespace {

// Brute-force posterior over the whole complex alphabet.
ScalarPosterior denoise_bruteforce(const Constellation& c,
                                   std::complex<double> g, double tau) {
  double s0 = 0.0, m2 = 0.0;
  std::complex<double> s1 = 0.0;
  double emax = -1e300;
  for (int p = 0; p < c.order(); ++p) {
    emax = std::max(emax, -tau * std::norm(g - c.points[p]));
  }
  for (int p = 0; p < c.order(); ++p) {
    const double w = std::exp(-tau * std::norm(g - c.points[p]) - emax);
    s0 += w;
    s1 += w * c.points[p];
    m2 += w * std::norm(c.points[p]);
  }
  ScalarPosterior out;
  out.mean = s1 / s0;
  out.var = m2 / s0 - std::norm(out.mean);
  return out;
}

void llr_bruteforce(const Constellation& c, std::complex<double> g, double tau,
                    std::vector<double>& llr) {
  llr.assign(c.bits_per_symbol, 0.0);
  for (int b = 0; b < c.bits_per_symbol; ++b) {
    const int shift = c.bits_per_symbol - 1 - b;
    double max0 = -1e300, max1 = -1e300;
    for (int p = 0; p < c.order(); ++p) {
      const double e = -tau * std::norm(g - c.points[p]);
      ((c.bit_labels[p] >> shift) & 1u) ? max1 = std::max(max1, e)
                                        : max0 = std::max(max0, e);
    }
    double s0 = 0.0, s1 = 0.0;
    for (int p = 0; p < c.order(); ++p) {
      const double e = -tau * std::norm(g - c.points[p]);
      if ((c.bit_labels[p] >> shift) & 1u) {
        s1 += std::exp(e - max1);
      } else {
        s0 += std::exp(e - max0);
      }
    }
    llr[b] = (max0 + std::log(s0)) - (max1 + std::log(s1));
  }
}

}  // namespace

TEST_CASE("separable denoiser and LLR equal whole-alphabet brute force") {
  PhiloxRng rng(11);
  std::vector<double> oracle;
  for (int order : {4, 16, 64}) {
    const Constellation c = make_qam(order);
    std::vector<double> llr(c.bits_per_symbol);
    for (int i = 0; i < 300; ++i) {
      const std::complex<double> g(2 * rng.next_gaussian(),
                                   2 * rng.next_gaussian());
      const double tau = std::pow(10.0, -2.0 + 4.0 * rng.next_double());
      const ScalarPosterior got = denoise_symbol(c, g, tau);
      const ScalarPosterior want = denoise_bruteforce(c, g, tau);
      CHECK(std::abs(got.mean - want.mean) < 1e-12);
      CHECK(std::abs(got.var - std::clamp(want.var, 0.0, c.avg_energy)) <
            1e-12);
      compute_llr(c, g, tau, llr.data());
      llr_bruteforce(c, g, tau, oracle);
      for (int b = 0; b < c.bits_per_symbol; ++b) {
        CHECK(llr[b] ==
              doctest::Approx(oracle[b]).epsilon(1e-11).scale(1.0));
      }
    }
  }
}

TEST_CASE("hard decision: nearest point, ties to the lower index") {
  const Constellation c = make_qam(4);
  CHECK(hard_decision(c, c.points[2]) == 2);
  CHECK(hard_decision(c, {0.0, 0.0}) == 0);  // four-way tie
  CHECK(hard_decision(c, {10.0, 10.0}) == 3);
}

TEST_CASE("rng determinism and moments") {
  PhiloxRng a(42, 3), b(42, 3), other(42, 4);
  bool diverged = false;
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u32() == b.next_u32());
    diverged |= a.next_u32() != other.next_u32();
    b.next_u32();
  }
  CHECK(diverged);

  PhiloxRng g(5);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_gaussian();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("iid channel entry variance 1/K") {
  SystemConfig sys;
  sys.n_antennas = 500;
  sys.n_users = 200;
  const ChannelRealization h = gen_channel(sys, 9);
  const double mean_sq = h.h.squaredNorm() / (500.0 * 200.0);
  CHECK(mean_sq == doctest::Approx(1.0 / 200.0).epsilon(0.02));
}

TEST_CASE("gen_channel validation") {
  SystemConfig sys;
  sys.n_antennas = 2;
  sys.n_users = 4;
  CHECK_THROWS_AS(gen_channel(sys, 1), std::invalid_argument);
  sys.n_users = 2;
  sys.kappa = 1.0;
  CHECK_THROWS_AS(gen_channel(sys, 1), std::invalid_argument);
  sys.kappa = -0.1;
  CHECK_THROWS_AS(gen_channel(sys, 1), std::invalid_argument);
}

TEST_CASE("correlated model with kappa=0 is bit-identical to iid") {
  SystemConfig a;
  a.n_antennas = 32;
  a.n_users = 8;
  SystemConfig b = a;
  b.channel_model = ChannelModel::Correlated;
  b.kappa = 0.0;
  const auto ha = gen_channel(a, 123).h;
  const auto hb = gen_channel(b, 123).h;
  CHECK((ha - hb).norm() == 0.0);
}

TEST_CASE("correlation square root squares back") {
  const Eigen::MatrixXd s = exp_corr_matrix(16, 0.5);
  const Eigen::MatrixXd r = sqrtm_psd(s);
  CHECK((r * r - s).norm() < 1e-10);
  CHECK((r - r.transpose()).norm() < 1e-12);
}

TEST_CASE("correlated channel second moment follows the correlation matrix") {
  SystemConfig sys;
  sys.n_antennas = 8;
  sys.n_users = 4;
  sys.channel_model = ChannelModel::Correlated;
  sys.kappa = 0.7;
  const Eigen::MatrixXd s = exp_corr_matrix(8, 0.7);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(8, 8);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const auto h = gen_channel(sys, 1000 + t).h;
    acc += h * h.adjoint();
  }
  // E[H H^H] = Sigma_R * (K * 1/K) = Sigma_R.
  CHECK((acc / trials - s.cast<std::complex<double>>()).norm() / s.norm() <
        0.05);
}

TEST_CASE("non-stationary gain matches the worked geometry example") {
  GeometryConfig g;  // 250 m array, 25 m vertical
  // One user sits at 125 m; the antenna at position 0 sees distance
  // sqrt(125^2 + 25^2) = 127.475 m.
  const Eigen::MatrixXd d = nonstationary_gain(128, 1, g);
  CHECK(d(0, 0) == doctest::Approx(0.0078446).epsilon(1e-4));
  SystemConfig sys;
  sys.n_antennas = 128;
  sys.n_users = 1;
  sys.channel_model = ChannelModel::NonStationary;
  CHECK(mean_column_energy(sys) ==
        doctest::Approx(d.array().square().sum() / 128.0));
}

TEST_CASE("transmit identities") {
  SystemConfig sys;
  sys.n_antennas = 16;
  sys.n_users = 4;
  const Constellation con = make_qam(16);
  const ChannelRealization h = gen_channel(sys, 3);
  const TransmissionInstance t = transmit(h, con, 0.25, 17);
  CHECK((t.y - h.h * t.x - t.noise).norm() < 1e-13);
  for (int j = 0; j < 4; ++j) {
    CHECK(t.x[j] == con.points[t.symbol_indices[j]]);
  }
  CHECK_THROWS_AS(transmit(h, con, -1.0, 17), std::invalid_argument);
}

TEST_CASE("transmit noise variance is empirically correct") {
  SystemConfig sys;
  sys.n_antennas = 120000;
  sys.n_users = 1;
  const Constellation con = make_qam(4);
  const ChannelRealization h = gen_channel(sys, 8);
  const TransmissionInstance t = transmit(h, con, 0.8, 21);
  CHECK(t.noise.squaredNorm() / 120000.0 ==
        doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("transmitted symbols cover the alphabet") {
  SystemConfig sys;
  sys.n_antennas = 16;
  sys.n_users = 16;
  const Constellation con = make_qam(16);
  const ChannelRealization h = gen_channel(sys, 4);
  std::vector<int> counts(16, 0);
  for (int t = 0; t < 1000; ++t) {
    const auto tx = transmit(h, con, 1e-3, 100 + t);
    for (int idx : tx.symbol_indices) {
      REQUIRE(idx >= 0);
      REQUIRE(idx < 16);
      ++counts[idx];
    }
  }
  for (int p = 0; p < 16; ++p) CHECK(counts[p] > 600);
}

TEST_CASE("snr mapping") {
  CHECK(snr_to_noise_var(0.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(snr_to_noise_var(10.0, 1.0, 1.0) == doctest::Approx(0.1));
  CHECK(snr_to_noise_var(-5.0, 1.0, 1.0) == doctest::Approx(3.16228).epsilon(1e-5));
  CHECK(snr_to_noise_var(3.0, 2.0, 1.0) ==
        doctest::Approx(2.0 / std::pow(10.0, 0.3)));
  CHECK_THROWS_AS(snr_to_noise_var(0.0, 1.0, 0.0), std::invalid_argument);
}
