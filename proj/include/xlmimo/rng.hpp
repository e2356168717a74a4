#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace xlmimo {

// Counter-based Philox4x32-10 generator. A (seed, stream) pair identifies an
// independent sequence, so per-trial streams produce bit-identical draws
// regardless of execution order or thread count.
class PhiloxRng {
 public:
  explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      fill();
      idx_ = 0;
    }
    return out_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in (0, 1].
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Proper complex Gaussian CN(0, var).
  std::complex<double> next_cgaussian(double var) {
    const double s = std::sqrt(0.5 * var);
    const double re = next_gaussian();
    const double im = next_gaussian();
    return {s * re, s * im};
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void fill() {
    std::uint32_t x0 = static_cast<std::uint32_t>(block_);
    std::uint32_t x1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t x2 = stream_lo_;
    std::uint32_t x3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, x0, hi0, lo0);
      mulhilo(0xCD9E8D57u, x2, hi1, lo1);
      const std::uint32_t y0 = hi1 ^ x1 ^ k0;
      const std::uint32_t y1 = lo1;
      const std::uint32_t y2 = hi0 ^ x3 ^ k1;
      const std::uint32_t y3 = lo0;
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = x0;
    out_[1] = x1;
    out_[2] = x2;
    out_[3] = x3;
    ++block_;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int idx_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace xlmimo
