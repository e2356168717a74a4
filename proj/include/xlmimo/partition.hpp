#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xlmimo/channel.hpp"

namespace xlmimo {

// Contiguous row split of the array into C subarrays.
struct SubarrayPartition {
  std::vector<int> sizes;    // N_c
  std::vector<int> offsets;  // row start per subarray

  int count() const { return static_cast<int>(sizes.size()); }
  int total() const {
    return sizes.empty() ? 0 : offsets.back() + sizes.back();
  }
};

// Per-subarray served-user sets and the induced trimmed channel blocks.
struct TrimmedPartition {
  SubarrayPartition base;
  std::vector<std::vector<int>> served;        // K_c user indices, ascending
  std::vector<Eigen::MatrixXcd> trimmed_h;     // N_c x K_c blocks
  std::vector<std::vector<int>> serving_of_user;  // C_k per user, ascending
  std::vector<bool> zero_energy_user;          // warning flags
};

struct Hierarchy {
  std::vector<std::vector<int>> secondary_sizes;  // per subarray c: {N_cc'}
};

// C = n / subarray_size contiguous blocks; non-divisors are rejected.
SubarrayPartition partition_uniform(int n, int subarray_size);

// Per-user energy-prefix trimming: subarrays are ranked by the user's local
// column energy (ties to the lower index) and the minimal prefix reaching
// power_threshold of the total is kept.
TrimmedPartition trim(const ChannelRealization& h,
                      const SubarrayPartition& part, double power_threshold);

// Full (untrimmed) partition view: every subarray serves every user.
TrimmedPartition full_partition(const ChannelRealization& h,
                                const SubarrayPartition& part);

// Uniform secondary split of each subarray.
Hierarchy split_hierarchy(const SubarrayPartition& part, int secondary_size);

// Human-readable per-subarray served-user listing.
std::string trimmed_summary(const TrimmedPartition& tp);

}  // namespace xlmimo
