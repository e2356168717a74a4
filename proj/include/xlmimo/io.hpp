#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xlmimo/detector.hpp"

namespace xlmimo {

// Row-major interleaved real/imag little-endian doubles, preceded by two
// little-endian uint64 dimensions (rows, cols).
void dump_channel_binary(const Eigen::MatrixXcd& h, const std::string& path);
Eigen::MatrixXcd load_channel_binary(const std::string& path);

// Row-major CSV with interleaved re,im columns.
void dump_channel_csv(const Eigen::MatrixXcd& h, const std::string& path);

// Trace CSV: iter, tau0 (mean of tau0k), omega0, mse_gamma0_vs_truth (empty
// truth gives -1), floor_events. Byte-reproducible.
std::string trace_csv(const std::vector<IterationRecord>& trace,
                      const Eigen::VectorXcd& truth = {});

// Fixed 6-significant-digit formatting used by all CSV emitters.
std::string format_number(double v);

}  // namespace xlmimo
