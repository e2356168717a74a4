#include "xlmimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "xlmimo/io.hpp"

namespace xlmimo {

std::uint64_t channel_seed(std::uint64_t base_seed, int trial) {
  return base_seed ^ static_cast<std::uint64_t>(trial);
}

std::uint64_t transmit_seed(std::uint64_t base_seed, int trial) {
  return channel_seed(base_seed, trial) ^ 0x9E3779B97F4A7C15ull;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunSpec parse_config_text(const std::string& text) {
  RunSpec spec;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key == "n") {
      spec.n = std::stoi(val);
    } else if (key == "k") {
      spec.k = std::stoi(val);
    } else if (key == "qam") {
      spec.qam = std::stoi(val);
    } else if (key == "channel") {
      if (val == "iid") {
        spec.channel = ChannelModel::IID;
      } else if (val == "corr") {
        spec.channel = ChannelModel::Correlated;
      } else if (val == "nonstat") {
        spec.channel = ChannelModel::NonStationary;
      } else {
        throw std::invalid_argument("config: unknown channel '" + val + "'");
      }
    } else if (key == "kappa") {
      spec.kappa = std::stod(val);
    } else if (key == "array_len_m") {
      spec.geometry.array_len_m = std::stod(val);
    } else if (key == "vertical_m") {
      spec.geometry.vertical_m = std::stod(val);
    } else if (key == "subarray_size") {
      spec.subarray_sizes.clear();
      for (const auto& v : split(val, ',')) {
        spec.subarray_sizes.push_back(std::stoi(strip(v)));
      }
    } else if (key == "trim_threshold") {
      spec.trim_threshold = std::stod(val);
    } else if (key == "secondary_size") {
      spec.secondary_size = std::stoi(val);
    } else if (key == "mode") {
      if (val == "full") {
        spec.mode = DetectorMode::Full;
      } else if (val == "trimmed") {
        spec.mode = DetectorMode::Trimmed;
      } else if (val == "hier") {
        spec.mode = DetectorMode::Hierarchical;
      } else if (val == "oneshot") {
        spec.mode = DetectorMode::OneShot;
      } else if (val == "local_ep") {
        spec.mode = DetectorMode::LocalEpThenMrc;
      } else {
        throw std::invalid_argument("config: unknown mode '" + val + "'");
      }
    } else if (key == "iters") {
      spec.iters = std::stoi(val);
    } else if (key == "damping") {
      spec.damping = std::stod(val);
    } else if (key == "snr_db_list") {
      spec.snr_db_list.clear();
      for (const auto& v : split(val, ',')) {
        spec.snr_db_list.push_back(std::stod(strip(v)));
      }
    } else if (key == "trials") {
      spec.trials = std::stoi(val);
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (spec.subarray_sizes.empty()) spec.subarray_sizes = {spec.n};
  if (spec.snr_db_list.empty() || spec.trials < 1) {
    throw std::invalid_argument("config: axes must be nonempty, trials >= 1");
  }
  return spec;
}

RunSpec parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::invalid_argument("config: cannot open " + path);
  }
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config_text(os.str());
}

namespace {

struct AxisPoint {
  double snr_db;
  double noise_var;
  int subarray_size;
};

struct TrialCell {
  long long bit_err = 0, sym_err = 0;
  double mse = 0.0, tau0_inv = 0.0;
  int floors = 0;
};

DetectionOutput detect_one(const RunSpec& spec, const Eigen::VectorXcd& y,
                           const ChannelRealization& h,
                           const SubarrayPartition& part,
                           const Constellation& con, double sigma2) {
  DetectorConfig cfg;
  cfg.max_iters = spec.iters;
  cfg.damping = spec.damping;
  cfg.mode = spec.mode;
  cfg.secondary_size = spec.secondary_size;
  switch (spec.mode) {
    case DetectorMode::Full:
      return run_ep(y, h.h, part, cfg, con, sigma2);
    case DetectorMode::Trimmed: {
      const TrimmedPartition tp =
          spec.trim_threshold > 0.0 ? trim(h, part, spec.trim_threshold)
                                    : full_partition(h, part);
      return run_ep_trimmed(y, tp, cfg, con, sigma2);
    }
    case DetectorMode::Hierarchical: {
      const Hierarchy hier = split_hierarchy(part, spec.secondary_size);
      return run_hierarchical(y, h.h, part, hier, cfg, con, sigma2);
    }
    case DetectorMode::OneShot:
    case DetectorMode::LocalEpThenMrc: {
      const TrimmedPartition tp =
          spec.trim_threshold > 0.0 ? trim(h, part, spec.trim_threshold)
                                    : full_partition(h, part);
      return run_one_feedforward(y, tp, cfg, con, sigma2,
                                 spec.mode == DetectorMode::OneShot
                                     ? FeedforwardScheme::OneShot
                                     : FeedforwardScheme::LocalEpThenMrc);
    }
  }
  throw std::logic_error("detect_one: unreachable");
}

}  // namespace

std::vector<MetricsRow> run_sweep(const RunSpec& spec, int threads) {
  const Constellation con = make_qam(spec.qam);
  SystemConfig sys;
  sys.n_antennas = spec.n;
  sys.n_users = spec.k;
  sys.constellation = con;
  sys.channel_model = spec.channel;
  sys.kappa = spec.kappa;
  sys.geometry = spec.geometry;
  const double col_energy = mean_column_energy(sys);

  std::vector<int> checkpoints = spec.iter_checkpoints;
  if (checkpoints.empty()) checkpoints = {spec.iters};

  std::vector<AxisPoint> axis;
  for (int nc : spec.subarray_sizes) {
    for (double snr : spec.snr_db_list) {
      axis.push_back(
          {snr, snr_to_noise_var(snr, col_energy, con.avg_energy), nc});
    }
  }
  const int cells_per_trial = static_cast<int>(axis.size() * checkpoints.size());
  std::vector<TrialCell> cells(
      static_cast<std::size_t>(spec.trials) * cells_per_trial);

  auto run_trial = [&](int trial) {
    const ChannelRealization h =
        gen_channel(sys, channel_seed(spec.seed, trial));
    // Unit-variance noise shared across SNR points.
    const TransmissionInstance tx =
        transmit(h, con, 1.0, transmit_seed(spec.seed, trial));
    for (std::size_t a = 0; a < axis.size(); ++a) {
      const AxisPoint& ap = axis[a];
      const double sigma = std::sqrt(ap.noise_var);
      const Eigen::VectorXcd y = h.h * tx.x + sigma * tx.noise;
      const SubarrayPartition part =
          partition_uniform(spec.n, ap.subarray_size);
      const DetectionOutput out =
          detect_one(spec, y, h, part, con, ap.noise_var);
      for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        const int want = checkpoints[ci];
        const IterationRecord& rec =
            out.trace[std::min<std::size_t>(want, out.trace.size()) - 1];
        TrialCell& cell =
            cells[(static_cast<std::size_t>(trial) * axis.size() + a) *
                      checkpoints.size() +
                  ci];
        for (int u = 0; u < spec.k; ++u) {
          const int hard = hard_decision(con, rec.gamma0[u]);
          const std::uint32_t diff = con.bit_labels[hard] ^
                                     con.bit_labels[tx.symbol_indices[u]];
          cell.bit_err += std::popcount(diff);
          cell.sym_err += hard != tx.symbol_indices[u];
          cell.tau0_inv += 1.0 / rec.tau0k[u];
        }
        cell.tau0_inv /= spec.k;
        cell.mse = (rec.gamma0 - tx.x).squaredNorm() / spec.k;
        cell.floors = rec.floor_events;
      }
    }
  };

  if (threads <= 1) {
    for (int t = 0; t < spec.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < spec.trials;
             t = next.fetch_add(1)) {
          run_trial(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Merge in trial order so floating-point sums match the serial run.
  std::vector<MetricsRow> rows;
  const double bits = static_cast<double>(con.bits_per_symbol);
  for (std::size_t a = 0; a < axis.size(); ++a) {
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
      MetricsRow row;
      row.snr_db = axis[a].snr_db;
      row.subarray_size = axis[a].subarray_size;
      row.iter = checkpoints[ci];
      row.trials = spec.trials;
      long long bit_err = 0, sym_err = 0, floors = 0;
      double mse = 0.0, tau0_inv = 0.0;
      for (int t = 0; t < spec.trials; ++t) {
        const TrialCell& cell =
            cells[(static_cast<std::size_t>(t) * axis.size() + a) *
                      checkpoints.size() +
                  ci];
        bit_err += cell.bit_err;
        sym_err += cell.sym_err;
        floors += cell.floors;
        mse += cell.mse;
        tau0_inv += cell.tau0_inv;
      }
      row.ber = bit_err / (static_cast<double>(spec.trials) * spec.k * bits);
      row.ser = sym_err / (static_cast<double>(spec.trials) * spec.k);
      row.mean_mse_gamma0 = mse / spec.trials;
      row.mean_tau0_inv = tau0_inv / spec.trials;
      row.floor_event_rate = static_cast<double>(floors) / spec.trials;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string rows_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "snr_db,subarray_size,iter,ber,ser,mean_mse_gamma0,mean_tau0_inv,"
        "trials,floor_event_rate\n";
  for (const auto& r : rows) {
    os << format_number(r.snr_db) << ',' << r.subarray_size << ',' << r.iter
       << ',' << format_number(r.ber) << ',' << format_number(r.ser) << ','
       << format_number(r.mean_mse_gamma0) << ','
       << format_number(r.mean_tau0_inv) << ',' << r.trials << ','
       << format_number(r.floor_event_rate) << '\n';
  }
  return os.str();
}

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("emit_csv: cannot open " + path);
  }
  f << rows_to_csv(rows);
  if (!f) {
    throw std::runtime_error("emit_csv: write failed " + path);
  }
}

}  // namespace xlmimo
