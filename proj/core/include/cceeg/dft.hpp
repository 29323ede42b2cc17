#pragma once

#include <cstdint>
#include <vector>

namespace cceeg {

// Real DFT helper for fixed-length windows. Patch lengths here are a few
// hundred samples, so a precomputed O(t^2) matrix beats pulling in an FFT
// dependency and is exactly as accurate.
//
// For input x of length t it produces the one-sided spectrum of
// X_k = sum_i x_i exp(-2*pi*i*j*k/t), k = 0..floor(t/2), i.e. t/2+1 bins.
class RealDft {
 public:
  explicit RealDft(std::int64_t t);

  std::int64_t length() const { return t_; }
  std::int64_t bins() const { return bins_; }

  // Real and imaginary parts of the one-sided spectrum.
  void transform(const float* x, double* re, double* im) const;
  void transform(const double* x, double* re, double* im) const;

  // Per-bin energy |X_k|^2 / t (the default normalization used by the
  // frequency branch of the patch encoder).
  std::vector<double> energy(const double* x) const;

  // Basis entries (the angle -2*pi*k*j/t is baked in), used by the
  // differentiable energy op to push gradients back through the transform.
  double cos_kj(std::int64_t k, std::int64_t j) const {
    return cos_[static_cast<std::size_t>(k * t_ + j)];
  }
  double sin_kj(std::int64_t k, std::int64_t j) const {
    return sin_[static_cast<std::size_t>(k * t_ + j)];
  }

 private:
  template <typename S>
  void transform_impl(const S* x, double* re, double* im) const;

  std::int64_t t_;
  std::int64_t bins_;
  std::vector<double> cos_;  // [bins, t]
  std::vector<double> sin_;  // [bins, t]
};

// Reference O(t^2) DFT written as the textbook double loop; kept separate
// from RealDft so tests can cross-check the two independently.
void naive_real_dft(const std::vector<double>& x, std::vector<double>& re,
                    std::vector<double>& im);

}  // namespace cceeg
