#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "xlmimo/analysis.hpp"
#include "xlmimo/channel.hpp"
#include "xlmimo/detector.hpp"
#include "xlmimo/evolution.hpp"
#include "xlmimo/harness.hpp"
#include "xlmimo/io.hpp"

namespace xlmimo {

namespace {

ChannelModel parse_channel(const std::string& name) {
  if (name == "iid") return ChannelModel::IID;
  if (name == "corr") return ChannelModel::Correlated;
  if (name == "nonstat") return ChannelModel::NonStationary;
  throw CLI::ValidationError("--channel", "unknown channel '" + name + "'");
}

void write_text(const std::string& text, const std::string& out_path,
                std::ostream& fallback) {
  if (out_path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + out_path);
  f << text;
  if (!f) throw std::runtime_error("write failed " + out_path);
}

struct RealizationArgs {
  int n = 64;
  int k = 16;
  int qam = 16;
  std::string channel = "iid";
  double kappa = 0.0;
  double snr_db = 10.0;
  int nc = 0;  // 0 -> whole array as one subarray
  std::uint64_t seed = 1;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "antennas");
    app->add_option("--k", k, "users");
    app->add_option("--qam", qam, "QAM order (4/16/64/256)");
    app->add_option("--channel", channel, "iid|corr|nonstat");
    app->add_option("--kappa", kappa, "exponential correlation coefficient");
    app->add_option("--snr", snr_db, "SNR in dB");
    app->add_option("--nc", nc, "subarray size (default: whole array)");
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--out", out, "output path (default: stdout)");
  }

  SystemConfig system(const Constellation& con) const {
    SystemConfig sys;
    sys.n_antennas = n;
    sys.n_users = k;
    sys.constellation = con;
    sys.channel_model = parse_channel(channel);
    sys.kappa = kappa;
    return sys;
  }
};

int cmd_simulate(const std::string& config_path, const std::string& out,
                 int threads, bool seed_set, std::uint64_t seed,
                 std::ostream& os) {
  RunSpec spec = parse_config(config_path);
  if (seed_set) spec.seed = seed;
  const auto rows = run_sweep(spec, threads);
  write_text(rows_to_csv(rows), out, os);
  return 0;
}

int cmd_evolve(const RealizationArgs& a, int t_max, std::ostream& os) {
  const Constellation con = make_qam(a.qam);
  SystemConfig sys = a.system(con);
  const double sigma2 =
      snr_to_noise_var(a.snr_db, mean_column_energy(sys), con.avg_energy);
  const ChannelRealization h = gen_channel(sys, a.seed);
  const SubarrayPartition part =
      partition_uniform(a.n, a.nc > 0 ? a.nc : a.n);
  const EigenSpectrum spectra = spectra_of(h.h, part);
  const EvolutionState ev = evolve(spectra, sigma2, con, t_max);

  std::ostringstream csv;
  csv << "iter,rho";
  for (int c = 0; c < ev.nu.cols(); ++c) csv << ",nu_" << c;
  csv << '\n';
  for (int t = 0; t < ev.rho.size(); ++t) {
    csv << (t + 1) << ',' << format_number(ev.rho[t]);
    for (int c = 0; c < ev.nu.cols(); ++c) {
      csv << ',' << format_number(ev.nu(t, c));
    }
    csv << '\n';
  }
  write_text(csv.str(), a.out, os);
  return 0;
}

int cmd_complexity(const std::string& scenario_name, long long n, long long k,
                   long long c, long long t, long long qam, std::ostream& os) {
  ComplexityScenario scenario;
  if (scenario_name == "alg1") {
    scenario = ComplexityScenario::Alg1Full;
  } else if (scenario_name == "alg1_trimmed") {
    scenario = ComplexityScenario::Alg1Trimmed;
  } else if (scenario_name == "oneff") {
    scenario = ComplexityScenario::OneFeedforwardFull;
  } else if (scenario_name == "oneff_trimmed") {
    scenario = ComplexityScenario::OneFeedforwardTrimmed;
  } else if (scenario_name == "centralized") {
    scenario = ComplexityScenario::CentralizedEp;
  } else {
    throw CLI::ValidationError("--scenario",
                               "unknown scenario '" + scenario_name + "'");
  }
  const ComplexityReport r = complexity_count(scenario, n, k, c, t, qam);
  os << "Mult=" << (r.mults_lpm + r.mults_cpm) << '\n'
     << "Exp=" << (r.exps_lpm + r.exps_cpm) << '\n'
     << "Trans=" << (r.trans_lpm + r.trans_cpm) << '\n'
     << "MultLPM=" << r.mults_lpm << " MultCPM=" << r.mults_cpm << '\n'
     << "ExpLPM=" << r.exps_lpm << " ExpCPM=" << r.exps_cpm << '\n'
     << "TransLPM=" << r.trans_lpm << " TransCPM=" << r.trans_cpm << '\n';
  return 0;
}

int cmd_trace(const RealizationArgs& a, int iters, std::ostream& os) {
  const Constellation con = make_qam(a.qam);
  SystemConfig sys = a.system(con);
  const double sigma2 =
      snr_to_noise_var(a.snr_db, mean_column_energy(sys), con.avg_energy);
  const ChannelRealization h = gen_channel(sys, a.seed);
  const TransmissionInstance tx = transmit(h, con, sigma2, a.seed ^ 1);
  const SubarrayPartition part =
      partition_uniform(a.n, a.nc > 0 ? a.nc : a.n);
  DetectorConfig cfg;
  cfg.max_iters = iters;
  const DetectionOutput out = run_ep(tx.y, h.h, part, cfg, con, sigma2);
  write_text(trace_csv(out.trace, tx.x), a.out, os);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Distributed EP detector simulator for extra-large MIMO arrays"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo sweep from a config");
  std::string config_path, sim_out;
  int threads = 1;
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt =
      sim->add_option("--seed", sim_seed, "override the config seed");
  sim->add_option("config", config_path, "key=value config file")->required();
  sim->add_option("--out", sim_out, "metrics CSV path (default: stdout)");
  sim->add_option("--threads", threads, "worker threads");

  // evolve
  auto* evo = app.add_subcommand("evolve", "deterministic MSE trajectory");
  RealizationArgs evo_args;
  int t_max = 10;
  evo_args.attach(evo);
  evo->add_option("--t", t_max, "iterations");

  // complexity
  auto* cx = app.add_subcommand("complexity", "per-iteration operation counts");
  std::string scenario = "alg1";
  long long cx_n = 64, cx_k = 16, cx_c = 1, cx_t = 1, cx_qam = 16;
  cx->add_option("--scenario", scenario,
                 "alg1|alg1_trimmed|oneff|oneff_trimmed|centralized");
  cx->add_option("--n", cx_n, "antennas per subarray (N for centralized)");
  cx->add_option("--k", cx_k, "users (served users for trimmed)");
  cx->add_option("--c", cx_c, "subarray count");
  cx->add_option("--t", cx_t, "iterations");
  cx->add_option("--qam", cx_qam, "QAM order");

  // trace
  auto* tr = app.add_subcommand("trace", "single-realization iteration trace");
  RealizationArgs tr_args;
  int tr_iters = 10;
  tr_args.attach(tr);
  tr->add_option("--iters", tr_iters, "iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, sim_out, threads,
                          sim_seed_opt->count() > 0, sim_seed, out);
    }
    if (evo->parsed()) return cmd_evolve(evo_args, t_max, out);
    if (cx->parsed()) {
      return cmd_complexity(scenario, cx_n, cx_k, cx_c, cx_t, cx_qam, out);
    }
    if (tr->parsed()) return cmd_trace(tr_args, tr_iters, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace xlmimo
