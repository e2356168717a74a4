#include "xlmimo/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xlmimo {

namespace {

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
  throw std::runtime_error(what + ": " + path);
}

}  // namespace

void dump_channel_binary(const Eigen::MatrixXcd& h, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) io_fail("dump_channel_binary: cannot open", path);
  const std::uint64_t rows = h.rows(), cols = h.cols();
  f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      const double re = h(i, j).real(), im = h(i, j).imag();
      f.write(reinterpret_cast<const char*>(&re), sizeof(re));
      f.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  }
  if (!f) io_fail("dump_channel_binary: write failed", path);
}

Eigen::MatrixXcd load_channel_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) io_fail("load_channel_binary: cannot open", path);
  std::uint64_t rows = 0, cols = 0;
  f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  Eigen::MatrixXcd h(rows, cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      double re = 0, im = 0;
      f.read(reinterpret_cast<char*>(&re), sizeof(re));
      f.read(reinterpret_cast<char*>(&im), sizeof(im));
      h(i, j) = {re, im};
    }
  }
  if (!f) io_fail("load_channel_binary: truncated file", path);
  return h;
}

void dump_channel_csv(const Eigen::MatrixXcd& h, const std::string& path) {
  std::ofstream f(path);
  if (!f) io_fail("dump_channel_csv: cannot open", path);
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      if (j) f << ',';
      f << format_number(h(i, j).real()) << ','
        << format_number(h(i, j).imag());
    }
    f << '\n';
  }
  if (!f) io_fail("dump_channel_csv: write failed", path);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string trace_csv(const std::vector<IterationRecord>& trace,
                      const Eigen::VectorXcd& truth) {
  std::ostringstream os;
  os << "iter,tau0,omega0,mse_gamma0_vs_truth,floor_events\n";
  for (const auto& rec : trace) {
    double mse = -1.0;
    if (truth.size() == rec.gamma0.size() && truth.size() > 0) {
      mse = (rec.gamma0 - truth).squaredNorm() / truth.size();
    }
    os << rec.iter << ',' << format_number(rec.tau0_mean) << ','
       << format_number(rec.omega0) << ',' << format_number(mse) << ','
       << rec.floor_events << '\n';
  }
  return os.str();
}

}  // namespace xlmimo
