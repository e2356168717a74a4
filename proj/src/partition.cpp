#include "xlmimo/partition.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace xlmimo {

SubarrayPartition partition_uniform(int n, int subarray_size) {
  if (n < 1 || subarray_size < 1 || n % subarray_size != 0) {
    throw std::invalid_argument(
        "partition_uniform: subarray_size must divide n");
  }
  SubarrayPartition p;
  const int c = n / subarray_size;
  p.sizes.assign(c, subarray_size);
  p.offsets.resize(c);
  for (int i = 0; i < c; ++i) p.offsets[i] = i * subarray_size;
  return p;
}

TrimmedPartition trim(const ChannelRealization& h,
                      const SubarrayPartition& part, double power_threshold) {
  if (!(power_threshold > 0.0 && power_threshold <= 1.0)) {
    throw std::invalid_argument("trim: require 0 < power_threshold <= 1");
  }
  const int c_count = part.count();
  const int k = static_cast<int>(h.h.cols());
  if (part.total() != h.h.rows()) {
    throw std::invalid_argument("trim: partition does not cover the array");
  }

  // e(c, k) = squared norm of user k's column restricted to subarray c.
  Eigen::MatrixXd energy(c_count, k);
  for (int c = 0; c < c_count; ++c) {
    energy.row(c) = h.h.middleRows(part.offsets[c], part.sizes[c])
                        .colwise()
                        .squaredNorm();
  }

  TrimmedPartition tp;
  tp.base = part;
  tp.served.assign(c_count, {});
  tp.serving_of_user.assign(k, {});
  tp.zero_energy_user.assign(k, false);

  std::vector<int> order(c_count);
  for (int u = 0; u < k; ++u) {
    const double total = energy.col(u).sum();
    if (total <= 0.0) {
      tp.zero_energy_user[u] = true;
      tp.serving_of_user[u] = {0};
      continue;
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return energy(a, u) > energy(b, u);
    });
    double cum = 0.0;
    for (int c : order) {
      tp.serving_of_user[u].push_back(c);
      cum += energy(c, u);
      if (cum >= power_threshold * total) break;
    }
    std::sort(tp.serving_of_user[u].begin(), tp.serving_of_user[u].end());
  }

  for (int u = 0; u < k; ++u) {
    for (int c : tp.serving_of_user[u]) tp.served[c].push_back(u);
  }
  tp.trimmed_h.resize(c_count);
  for (int c = 0; c < c_count; ++c) {
    Eigen::MatrixXcd block(part.sizes[c],
                           static_cast<int>(tp.served[c].size()));
    for (std::size_t j = 0; j < tp.served[c].size(); ++j) {
      block.col(static_cast<int>(j)) =
          h.h.middleRows(part.offsets[c], part.sizes[c]).col(tp.served[c][j]);
    }
    tp.trimmed_h[c] = std::move(block);
  }
  return tp;
}

TrimmedPartition full_partition(const ChannelRealization& h,
                                const SubarrayPartition& part) {
  const int c_count = part.count();
  const int k = static_cast<int>(h.h.cols());
  TrimmedPartition tp;
  tp.base = part;
  tp.served.assign(c_count, {});
  tp.serving_of_user.assign(k, {});
  tp.zero_energy_user.assign(k, false);
  std::vector<int> all(k);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> all_c(c_count);
  std::iota(all_c.begin(), all_c.end(), 0);
  tp.trimmed_h.resize(c_count);
  for (int c = 0; c < c_count; ++c) {
    tp.served[c] = all;
    tp.trimmed_h[c] = h.h.middleRows(part.offsets[c], part.sizes[c]);
  }
  for (int u = 0; u < k; ++u) tp.serving_of_user[u] = all_c;
  return tp;
}

Hierarchy split_hierarchy(const SubarrayPartition& part, int secondary_size) {
  if (secondary_size < 1) {
    throw std::invalid_argument("split_hierarchy: secondary_size must be >= 1");
  }
  Hierarchy h;
  h.secondary_sizes.resize(part.count());
  for (int c = 0; c < part.count(); ++c) {
    if (part.sizes[c] % secondary_size != 0) {
      throw std::invalid_argument(
          "split_hierarchy: secondary_size must divide every N_c");
    }
    h.secondary_sizes[c].assign(part.sizes[c] / secondary_size,
                                secondary_size);
  }
  return h;
}

std::string trimmed_summary(const TrimmedPartition& tp) {
  std::ostringstream os;
  for (int c = 0; c < tp.base.count(); ++c) {
    os << "subarray " << c << " rows [" << tp.base.offsets[c] << ","
       << tp.base.offsets[c] + tp.base.sizes[c] << ") users";
    for (int u : tp.served[c]) os << ' ' << u;
    os << '\n';
  }
  return os.str();
}

}  // namespace xlmimo
