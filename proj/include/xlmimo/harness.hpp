#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xlmimo/channel.hpp"
#include "xlmimo/detector.hpp"

namespace xlmimo {

struct RunSpec {
  int n = 64;
  int k = 16;
  int qam = 16;
  ChannelModel channel = ChannelModel::IID;
  double kappa = 0.0;
  GeometryConfig geometry;
  std::vector<int> subarray_sizes;  // sweep axis; defaults to {n}
  double trim_threshold = 0.0;      // 0 disables trimming
  int secondary_size = 0;           // Hierarchical mode
  DetectorMode mode = DetectorMode::Full;
  int iters = 6;
  double damping = 1.0;
  std::vector<double> snr_db_list = {10.0};
  int trials = 2000;
  std::uint64_t seed = 1;
  std::vector<int> iter_checkpoints;  // defaults to {iters}
};

struct MetricsRow {
  double snr_db = 0.0;
  int subarray_size = 0;
  int iter = 0;
  double ber = 0.0;
  double ser = 0.0;
  double mean_mse_gamma0 = 0.0;
  double mean_tau0_inv = 0.0;
  long long trials = 0;
  double floor_event_rate = 0.0;
};

// Flat key=value text; '#' starts a comment; unknown keys are rejected.
RunSpec parse_config(const std::string& path);
RunSpec parse_config_text(const std::string& text);

// Seeded Monte Carlo sweep over (snr_db, subarray_size, checkpoint); results
// are independent of the worker count.
std::vector<MetricsRow> run_sweep(const RunSpec& spec, int threads = 1);

std::string rows_to_csv(const std::vector<MetricsRow>& rows);
void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path);

// Per-trial seeds: channel uses base_seed xor trial, transmit a fixed tweak
// of it.
std::uint64_t channel_seed(std::uint64_t base_seed, int trial);
std::uint64_t transmit_seed(std::uint64_t base_seed, int trial);

}  // namespace xlmimo
