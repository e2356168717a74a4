#include "xlmimo/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xlmimo {

Constellation make_qam(int order) {
  if (order != 4 && order != 16 && order != 64 && order != 256) {
    throw std::invalid_argument("make_qam: order must be 4, 16, 64 or 256");
  }
  Constellation c;
  int bits = 0;
  while ((1 << bits) < order) ++bits;
  c.bits_per_symbol = bits;
  c.pam_bits = bits / 2;
  const int m = 1 << c.pam_bits;  // levels per dimension

  // Unit average symbol energy: 2 * scale^2 * (m^2 - 1) / 3 = 1.
  const double scale = std::sqrt(3.0 / (2.0 * (m * m - 1)));
  c.pam_levels.resize(m);
  c.pam_gray.resize(m);
  for (int i = 0; i < m; ++i) {
    c.pam_levels[i] = (2 * i - m + 1) * scale;
    c.pam_gray[i] = static_cast<std::uint32_t>(i ^ (i >> 1));
  }

  c.points.resize(order);
  c.bit_labels.resize(order);
  for (int ri = 0; ri < m; ++ri) {
    for (int ii = 0; ii < m; ++ii) {
      const int p = ri * m + ii;
      c.points[p] = {c.pam_levels[ri], c.pam_levels[ii]};
      c.bit_labels[p] = (c.pam_gray[ri] << c.pam_bits) | c.pam_gray[ii];
    }
  }
  double e = 0.0;
  for (int p = 0; p < order; ++p) e += std::norm(c.points[p]);
  c.avg_energy = e / order;
  return c;
}

namespace {

struct PamMoments {
  double mean, second;
};

PamMoments pam_posterior(const Constellation& c, double obs, double tau) {
  const int m = static_cast<int>(c.pam_levels.size());
  double emax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double d = obs - c.pam_levels[i];
    emax = std::max(emax, -tau * d * d);
  }
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double s = c.pam_levels[i];
    const double d = obs - s;
    const double w = std::exp(-tau * d * d - emax);
    s0 += w;
    s1 += s * w;
    s2 += s * s * w;
  }
  return {s1 / s0, s2 / s0};
}

}  // namespace

ScalarPosterior denoise_symbol(const Constellation& c,
                               std::complex<double> gamma, double tau) {
  const PamMoments re = pam_posterior(c, gamma.real(), tau);
  const PamMoments im = pam_posterior(c, gamma.imag(), tau);
  ScalarPosterior out;
  out.mean = {re.mean, im.mean};
  double v = (re.second - re.mean * re.mean) + (im.second - im.mean * im.mean);
  out.var = std::clamp(v, 0.0, c.avg_energy);
  return out;
}

namespace {

// LLR of one Gray bit of a PAM observation. bit counts from the MSB of the
// per-dimension Gray label.
double pam_bit_llr(const Constellation& c, double obs, double tau, int bit) {
  const int m = static_cast<int>(c.pam_levels.size());
  const int shift = c.pam_bits - 1 - bit;
  double max0 = -std::numeric_limits<double>::infinity();
  double max1 = max0;
  for (int i = 0; i < m; ++i) {
    const double d = obs - c.pam_levels[i];
    const double e = -tau * d * d;
    if ((c.pam_gray[i] >> shift) & 1u) {
      max1 = std::max(max1, e);
    } else {
      max0 = std::max(max0, e);
    }
  }
  double s0 = 0.0, s1 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double d = obs - c.pam_levels[i];
    const double e = -tau * d * d;
    if ((c.pam_gray[i] >> shift) & 1u) {
      s1 += std::exp(e - max1);
    } else {
      s0 += std::exp(e - max0);
    }
  }
  return (max0 + std::log(s0)) - (max1 + std::log(s1));
}

}  // namespace

void compute_llr(const Constellation& c, std::complex<double> gamma,
                 double tau, double* llr_out) {
  for (int b = 0; b < c.pam_bits; ++b) {
    llr_out[b] = pam_bit_llr(c, gamma.real(), tau, b);
    llr_out[c.pam_bits + b] = pam_bit_llr(c, gamma.imag(), tau, b);
  }
}

int hard_decision(const Constellation& c, std::complex<double> gamma) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int p = 0; p < c.order(); ++p) {
    const double d = std::norm(gamma - c.points[p]);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

}  // namespace xlmimo
