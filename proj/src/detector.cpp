#include "xlmimo/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xlmimo {

PriorResult lpm_prior(double omega0, const Eigen::VectorXcd& xhat0_sub,
                      double eta, const Eigen::VectorXcd& p,
                      double floor_eps) {
  PriorResult r;
  r.tau = omega0 - eta;
  if (r.tau <= 0.0) {
    r.tau = floor_eps;
    r.floored = true;
  }
  r.gamma = (omega0 * xhat0_sub - p) / r.tau;
  return r;
}

Eigen::MatrixXcd recursive_sigma(const Eigen::MatrixXcd& h, double tau,
                                 double sigma2) {
  const int k = static_cast<int>(h.cols());
  const double inv_sigma2 = 1.0 / sigma2;
  Eigen::MatrixXcd ainv =
      Eigen::MatrixXcd::Identity(k, k) / tau;
  for (int j = 0; j < h.rows(); ++j) {
    const Eigen::VectorXcd hb = h.row(j).adjoint();
    const Eigen::VectorXcd u = ainv * hb;
    const double quad = (hb.adjoint() * u).value().real();
    const double denom = 1.0 + inv_sigma2 * quad;
    ainv.noalias() -= (inv_sigma2 / denom) * (u * u.adjoint());
  }
  return ainv;
}

LmmseResult lpm_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                      double tau, const Eigen::VectorXcd& gamma, double sigma2,
                      Inversion inversion) {
  if (y.size() != h.rows() || gamma.size() != h.cols()) {
    throw std::invalid_argument("lpm_lmmse: dimension mismatch");
  }
  if (!(tau > 0.0) || !(sigma2 > 0.0)) {
    throw std::invalid_argument("lpm_lmmse: require tau > 0 and sigma2 > 0");
  }
  const int k = static_cast<int>(h.cols());
  const double inv_sigma2 = 1.0 / sigma2;
  LmmseResult r;
  const bool recursive =
      inversion == Inversion::Recursive ||
      (inversion == Inversion::Auto && h.rows() <= 4);
  if (recursive) {
    r.sigma = recursive_sigma(h, tau, sigma2);
  } else {
    Eigen::MatrixXcd m = inv_sigma2 * (h.adjoint() * h);
    m.diagonal().array() += tau;
    r.sigma = m.llt().solve(Eigen::MatrixXcd::Identity(k, k));
  }
  r.xhat = r.sigma * (inv_sigma2 * (h.adjoint() * y) + tau * gamma);
  r.omega = 1.0 / (r.sigma.trace().real() / k);
  return r;
}

ExtrinsicResult lpm_extrinsic(double omega, const Eigen::VectorXcd& xhat,
                              double tau, const Eigen::VectorXcd& gamma,
                              double floor_eps) {
  ExtrinsicResult r;
  r.eta = omega - tau;
  if (r.eta <= 0.0) {
    r.eta = floor_eps;
    r.floored = true;
  }
  r.p = omega * xhat - tau * gamma;
  return r;
}

std::pair<double, Eigen::VectorXcd> cpm_mrc(
    const std::vector<double>& eta, const std::vector<Eigen::VectorXcd>& p) {
  double tau0 = 0.0;
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(p.front().size());
  for (std::size_t c = 0; c < eta.size(); ++c) {
    tau0 += eta[c];
    acc += p[c];
  }
  return {tau0, acc / tau0};
}

void cpm_mrc_trimmed(const std::vector<double>& eta,
                     const std::vector<Eigen::VectorXcd>& p,
                     const TrimmedPartition& tp, Eigen::VectorXd& tau0k,
                     Eigen::VectorXcd& gamma0) {
  const int k = static_cast<int>(tp.serving_of_user.size());
  tau0k.resize(k);
  gamma0.resize(k);
  // Local column index of each user within each subarray block.
  for (int u = 0; u < k; ++u) {
    double t = 0.0;
    std::complex<double> g = 0.0;
    if (tp.serving_of_user[u].empty()) {
      throw std::runtime_error("cpm_mrc_trimmed: user served by no subarray");
    }
    for (int c : tp.serving_of_user[u]) {
      const auto& s = tp.served[c];
      const int local = static_cast<int>(
          std::lower_bound(s.begin(), s.end(), u) - s.begin());
      t += eta[c];
      g += p[c][local];
    }
    tau0k[u] = t;
    gamma0[u] = g / t;
  }
}

DenoiseResult cpm_denoise(const Eigen::VectorXcd& gamma0,
                          const Eigen::VectorXd& tau0k,
                          const Constellation& con) {
  const int k = static_cast<int>(gamma0.size());
  DenoiseResult r;
  r.xhat0.resize(k);
  r.v0.resize(k);
  double vsum = 0.0;
  for (int u = 0; u < k; ++u) {
    const ScalarPosterior sp = denoise_symbol(con, gamma0[u], tau0k[u]);
    r.xhat0[u] = sp.mean;
    r.v0[u] = sp.var;
    vsum += sp.var;
  }
  // The per-symbol variances can underflow to exactly zero once the estimates
  // saturate; keep omega0 finite by flooring the average variance.
  r.omega0 = 1.0 / std::max(vsum / k, 1e-12);
  return r;
}

namespace {

void finalize_output(DetectionOutput& out, const Constellation& con) {
  const int k = static_cast<int>(out.gamma0.size());
  const DenoiseResult dn = cpm_denoise(out.gamma0, out.tau0k, con);
  out.xhat0 = dn.xhat0;
  out.v0 = dn.v0;
  out.hard_symbols.resize(k);
  out.llrs.resize(k, con.bits_per_symbol);
  for (int u = 0; u < k; ++u) {
    out.hard_symbols[u] = hard_decision(con, out.gamma0[u]);
    compute_llr(con, out.gamma0[u], out.tau0k[u], out.llrs.row(u).data());
  }
}

struct Damper {
  double beta;
  void apply(double& eta, Eigen::VectorXcd& p, const ExtrinsicResult& ex) const {
    if (beta < 1.0) {
      eta = beta * ex.eta + (1.0 - beta) * eta;
      p = beta * ex.p + (1.0 - beta) * p;
    } else {
      eta = ex.eta;
      p = ex.p;
    }
  }
};

}  // namespace

DetectionOutput run_ep(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                       const SubarrayPartition& part,
                       const DetectorConfig& cfg, const Constellation& con,
                       double sigma2) {
  if (part.total() != h.rows() || y.size() != h.rows()) {
    throw std::invalid_argument("run_ep: dimension mismatch");
  }
  const int c_count = part.count();
  const int k = static_cast<int>(h.cols());
  const double eps = cfg.precision_floor;
  const Damper damper{cfg.damping};

  std::vector<double> eta(c_count, 0.0);
  std::vector<Eigen::VectorXcd> p(c_count, Eigen::VectorXcd::Zero(k));
  double omega0 = 1.0 / con.avg_energy;
  Eigen::VectorXcd xhat0 = Eigen::VectorXcd::Zero(k);

  DetectionOutput out;
  EpState& st = out.final_state;
  st.tau_c.resize(c_count);
  st.omega_c.resize(c_count);
  st.gamma_c.resize(c_count);
  st.xhat_c.resize(c_count);

  for (int t = 1; t <= cfg.max_iters; ++t) {
    int floors = 0;
    for (int c = 0; c < c_count; ++c) {
      const auto yc = y.segment(part.offsets[c], part.sizes[c]);
      const auto hc = h.middleRows(part.offsets[c], part.sizes[c]);
      const PriorResult pr = lpm_prior(omega0, xhat0, eta[c], p[c], eps);
      const LmmseResult lm =
          lpm_lmmse(yc, hc, pr.tau, pr.gamma, sigma2, cfg.inversion);
      const ExtrinsicResult ex =
          lpm_extrinsic(lm.omega, lm.xhat, pr.tau, pr.gamma, eps);
      floors += pr.floored + ex.floored;
      damper.apply(eta[c], p[c], ex);
      st.tau_c[c] = pr.tau;
      st.gamma_c[c] = pr.gamma;
      st.omega_c[c] = lm.omega;
      st.xhat_c[c] = lm.xhat;
    }
    const auto [tau0, gamma0] = cpm_mrc(eta, p);
    const DenoiseResult dn =
        cpm_denoise(gamma0, Eigen::VectorXd::Constant(k, tau0), con);
    omega0 = dn.omega0;
    xhat0 = dn.xhat0;
    out.floor_events += floors;

    IterationRecord rec;
    rec.iter = t;
    rec.tau0_mean = tau0;
    rec.omega0 = omega0;
    rec.tau0k = Eigen::VectorXd::Constant(k, tau0);
    rec.gamma0 = gamma0;
    rec.floor_events = floors;
    out.trace.push_back(std::move(rec));

    st.tau0 = tau0;
    st.gamma0 = gamma0;
    st.omega0 = omega0;
    st.xhat0 = xhat0;
    st.eta_c = eta;
    st.p_c = p;
  }
  out.gamma0 = out.trace.back().gamma0;
  out.tau0k = out.trace.back().tau0k;
  finalize_output(out, con);
  return out;
}

DetectionOutput run_ep_trimmed(const Eigen::VectorXcd& y,
                               const TrimmedPartition& tp,
                               const DetectorConfig& cfg,
                               const Constellation& con, double sigma2) {
  const SubarrayPartition& part = tp.base;
  const int c_count = part.count();
  const int k = static_cast<int>(tp.serving_of_user.size());
  const double eps = cfg.precision_floor;
  const Damper damper{cfg.damping};

  std::vector<double> eta(c_count, 0.0);
  std::vector<Eigen::VectorXcd> p(c_count);
  for (int c = 0; c < c_count; ++c) {
    p[c] = Eigen::VectorXcd::Zero(static_cast<int>(tp.served[c].size()));
  }
  double omega0 = 1.0 / con.avg_energy;
  Eigen::VectorXcd xhat0 = Eigen::VectorXcd::Zero(k);

  DetectionOutput out;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    int floors = 0;
    for (int c = 0; c < c_count; ++c) {
      const auto yc = y.segment(part.offsets[c], part.sizes[c]);
      const Eigen::MatrixXcd& hc = tp.trimmed_h[c];
      Eigen::VectorXcd xhat0_sub(tp.served[c].size());
      for (std::size_t j = 0; j < tp.served[c].size(); ++j) {
        xhat0_sub[static_cast<int>(j)] = xhat0[tp.served[c][j]];
      }
      const PriorResult pr = lpm_prior(omega0, xhat0_sub, eta[c], p[c], eps);
      const LmmseResult lm =
          lpm_lmmse(yc, hc, pr.tau, pr.gamma, sigma2, cfg.inversion);
      const ExtrinsicResult ex =
          lpm_extrinsic(lm.omega, lm.xhat, pr.tau, pr.gamma, eps);
      floors += pr.floored + ex.floored;
      damper.apply(eta[c], p[c], ex);
    }
    Eigen::VectorXd tau0k;
    Eigen::VectorXcd gamma0;
    cpm_mrc_trimmed(eta, p, tp, tau0k, gamma0);
    const DenoiseResult dn = cpm_denoise(gamma0, tau0k, con);
    omega0 = dn.omega0;
    xhat0 = dn.xhat0;
    out.floor_events += floors;

    IterationRecord rec;
    rec.iter = t;
    rec.tau0_mean = tau0k.mean();
    rec.omega0 = omega0;
    rec.tau0k = tau0k;
    rec.gamma0 = gamma0;
    rec.floor_events = floors;
    out.trace.push_back(std::move(rec));
  }
  out.gamma0 = out.trace.back().gamma0;
  out.tau0k = out.trace.back().tau0k;
  finalize_output(out, con);
  return out;
}

DetectionOutput run_hierarchical(const Eigen::VectorXcd& y,
                                 const Eigen::MatrixXcd& h,
                                 const SubarrayPartition& part,
                                 const Hierarchy& hier,
                                 const DetectorConfig& cfg,
                                 const Constellation& con, double sigma2) {
  if (static_cast<int>(hier.secondary_sizes.size()) != part.count()) {
    throw std::invalid_argument("run_hierarchical: hierarchy mismatch");
  }
  const int c_count = part.count();
  const int k = static_cast<int>(h.cols());
  const double eps = cfg.precision_floor;
  const Damper damper{cfg.damping};

  // Flatten secondary units; remember which primary subarray owns each.
  struct Unit {
    int offset, rows, owner;
  };
  std::vector<Unit> units;
  for (int c = 0; c < c_count; ++c) {
    int off = part.offsets[c];
    int total = 0;
    for (int sz : hier.secondary_sizes[c]) {
      units.push_back({off, sz, c});
      off += sz;
      total += sz;
    }
    if (total != part.sizes[c]) {
      throw std::invalid_argument(
          "run_hierarchical: secondary sizes do not cover subarray");
    }
  }

  std::vector<double> eta(units.size(), 0.0);
  std::vector<Eigen::VectorXcd> p(units.size(), Eigen::VectorXcd::Zero(k));
  double omega0 = 1.0 / con.avg_energy;
  Eigen::VectorXcd xhat0 = Eigen::VectorXcd::Zero(k);

  DetectionOutput out;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    int floors = 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
      const auto yc = y.segment(units[u].offset, units[u].rows);
      const auto hc = h.middleRows(units[u].offset, units[u].rows);
      const PriorResult pr = lpm_prior(omega0, xhat0, eta[u], p[u], eps);
      const LmmseResult lm =
          lpm_lmmse(yc, hc, pr.tau, pr.gamma, sigma2, cfg.inversion);
      const ExtrinsicResult ex =
          lpm_extrinsic(lm.omega, lm.xhat, pr.tau, pr.gamma, eps);
      floors += pr.floored + ex.floored;
      damper.apply(eta[u], p[u], ex);
    }
    // Two-stage combine: secondary extrinsics into subarray extrinsics, then
    // the usual MRC over subarrays.
    std::vector<double> eta_c(c_count, 0.0);
    std::vector<Eigen::VectorXcd> p_c(c_count, Eigen::VectorXcd::Zero(k));
    for (std::size_t u = 0; u < units.size(); ++u) {
      eta_c[units[u].owner] += eta[u];
      p_c[units[u].owner] += p[u];
    }
    const auto [tau0, gamma0] = cpm_mrc(eta_c, p_c);
    const DenoiseResult dn =
        cpm_denoise(gamma0, Eigen::VectorXd::Constant(k, tau0), con);
    omega0 = dn.omega0;
    xhat0 = dn.xhat0;
    out.floor_events += floors;

    IterationRecord rec;
    rec.iter = t;
    rec.tau0_mean = tau0;
    rec.omega0 = omega0;
    rec.tau0k = Eigen::VectorXd::Constant(k, tau0);
    rec.gamma0 = gamma0;
    rec.floor_events = floors;
    out.trace.push_back(std::move(rec));
  }
  out.gamma0 = out.trace.back().gamma0;
  out.tau0k = out.trace.back().tau0k;
  finalize_output(out, con);
  return out;
}

DetectionOutput run_one_feedforward(const Eigen::VectorXcd& y,
                                    const TrimmedPartition& tp,
                                    const DetectorConfig& cfg,
                                    const Constellation& con, double sigma2,
                                    FeedforwardScheme scheme) {
  if (scheme == FeedforwardScheme::OneShot) {
    DetectorConfig one = cfg;
    one.max_iters = 1;
    return run_ep_trimmed(y, tp, one, con, sigma2);
  }

  // Local EP to convergence per subarray, then a single MRC of the final
  // outputs (tau0^(c), gamma0^(c)) and one denoising pass.
  const SubarrayPartition& part = tp.base;
  const int c_count = part.count();
  const int k = static_cast<int>(tp.serving_of_user.size());

  std::vector<double> local_tau0(c_count, 0.0);
  std::vector<Eigen::VectorXcd> local_scaled(c_count);  // tau0^(c) * gamma0^(c)
  int floor_events = 0;
  for (int c = 0; c < c_count; ++c) {
    const auto yc = y.segment(part.offsets[c], part.sizes[c]);
    const Eigen::MatrixXcd& hc = tp.trimmed_h[c];
    if (hc.cols() == 0) {
      local_scaled[c].resize(0);
      continue;
    }
    const SubarrayPartition single = partition_uniform(part.sizes[c],
                                                       part.sizes[c]);
    DetectorConfig local = cfg;
    local.mode = DetectorMode::Full;
    const DetectionOutput lo = run_ep(yc, hc, single, local, con, sigma2);
    local_tau0[c] = lo.tau0k[0];
    local_scaled[c] = lo.tau0k[0] * lo.gamma0;
    floor_events += lo.floor_events;
  }

  DetectionOutput out;
  out.floor_events = floor_events;
  out.tau0k.resize(k);
  out.gamma0.resize(k);
  for (int u = 0; u < k; ++u) {
    double t = 0.0;
    std::complex<double> g = 0.0;
    for (int c : tp.serving_of_user[u]) {
      const auto& s = tp.served[c];
      const int local = static_cast<int>(
          std::lower_bound(s.begin(), s.end(), u) - s.begin());
      t += local_tau0[c];
      g += local_scaled[c][local];
    }
    out.tau0k[u] = t;
    out.gamma0[u] = g / t;
  }
  IterationRecord rec;
  rec.iter = 1;
  rec.tau0_mean = out.tau0k.mean();
  rec.tau0k = out.tau0k;
  rec.gamma0 = out.gamma0;
  rec.floor_events = floor_events;
  const DenoiseResult dn = cpm_denoise(out.gamma0, out.tau0k, con);
  rec.omega0 = dn.omega0;
  out.trace.push_back(std::move(rec));
  finalize_output(out, con);
  return out;
}

}  // namespace xlmimo
