#include "cceeg/dft.hpp"

#include <cmath>
#include <stdexcept>

namespace cceeg {

RealDft::RealDft(std::int64_t t) : t_(t), bins_(t / 2 + 1) {
  if (t < 2) throw std::invalid_argument("RealDft: length must be >= 2");
  cos_.resize(static_cast<std::size_t>(bins_ * t_));
  sin_.resize(static_cast<std::size_t>(bins_ * t_));
  const double w = -2.0 * M_PI / static_cast<double>(t_);
  for (std::int64_t k = 0; k < bins_; ++k)
    for (std::int64_t j = 0; j < t_; ++j) {
      const double ang = w * static_cast<double>(k) * static_cast<double>(j);
      cos_[static_cast<std::size_t>(k * t_ + j)] = std::cos(ang);
      sin_[static_cast<std::size_t>(k * t_ + j)] = std::sin(ang);
    }
}

template <typename S>
void RealDft::transform_impl(const S* x, double* re, double* im) const {
  for (std::int64_t k = 0; k < bins_; ++k) {
    double r = 0.0, i = 0.0;
    const double* ck = cos_.data() + k * t_;
    const double* sk = sin_.data() + k * t_;
    for (std::int64_t j = 0; j < t_; ++j) {
      const double v = static_cast<double>(x[j]);
      r += v * ck[j];
      i += v * sk[j];
    }
    re[k] = r;
    im[k] = i;
  }
}

void RealDft::transform(const float* x, double* re, double* im) const {
  transform_impl(x, re, im);
}
void RealDft::transform(const double* x, double* re, double* im) const {
  transform_impl(x, re, im);
}

std::vector<double> RealDft::energy(const double* x) const {
  std::vector<double> re(static_cast<std::size_t>(bins_)), im(static_cast<std::size_t>(bins_));
  transform(x, re.data(), im.data());
  std::vector<double> e(static_cast<std::size_t>(bins_));
  for (std::int64_t k = 0; k < bins_; ++k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    e[ks] = (re[ks] * re[ks] + im[ks] * im[ks]) / static_cast<double>(t_);
  }
  return e;
}

void naive_real_dft(const std::vector<double>& x, std::vector<double>& re,
                    std::vector<double>& im) {
  const std::size_t t = x.size();
  const std::size_t bins = t / 2 + 1;
  re.assign(bins, 0.0);
  im.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k)
    for (std::size_t j = 0; j < t; ++j) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(t);
      re[k] += x[j] * std::cos(ang);
      im[k] += x[j] * std::sin(ang);
    }
}

}  // namespace cceeg
