#pragma once

#include "cceeg/parameters.hpp"

#include <cmath>
#include <cstdint>

namespace cceeg {

// Cosine annealing from `base` down to `min_lr` over `cycle` epochs; the
// epoch argument may be fractional (smooth per-step decay), and past the
// cycle end the schedule stays at min_lr.
inline double cosine_lr(double base, double min_lr, double cycle, double epoch) {
  if (cycle <= 0.0) return base;
  const double x = std::min(epoch / cycle, 1.0);
  return min_lr + (base - min_lr) * 0.5 * (1.0 + std::cos(M_PI * x));
}

// Global-norm gradient clipping. Returns the pre-clip norm; scales gradients
// in place when the norm exceeds max_norm.
template <typename S>
double clip_grad_norm(ParameterSet<S>& grads, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Tensor<S>& g = grads.value(i);
    for (std::int64_t j = 0; j < g.numel(); ++j)
      sq += static_cast<double>(g[j]) * static_cast<double>(g[j]);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const S scale = static_cast<S>(max_norm / norm);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      Tensor<S>& g = grads.value(i);
      for (std::int64_t j = 0; j < g.numel(); ++j) g[j] *= scale;
    }
  }
  return norm;
}

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;  // decoupled, applied to every parameter
};

// AdamW with decoupled weight decay:
//   p <- p * (1 - lr*wd);  p <- p - lr * m_hat / (sqrt(v_hat) + eps).
// First and second moments live in ParameterSets so checkpoints can persist
// them under opt.m.* / opt.v.* names.
template <typename S>
class AdamW {
 public:
  AdamW(const ParameterSet<S>& params, AdamWConfig cfg) : cfg_(cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.add(params.names()[i], Tensor<S>::zeros(params.value(i).shape()));
      v_.add(params.names()[i], Tensor<S>::zeros(params.value(i).shape()));
    }
  }

  void step(ParameterSet<S>& params, const ParameterSet<S>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor<S>& p = params.value(i);
      const Tensor<S>& g = grads.get(params.names()[i]);
      Tensor<S>& m = m_.get(params.names()[i]);
      Tensor<S>& v = v_.get(params.names()[i]);
      for (std::int64_t j = 0; j < p.numel(); ++j) {
        const double gj = static_cast<double>(g[j]);
        const double mj = cfg_.beta1 * static_cast<double>(m[j]) + (1.0 - cfg_.beta1) * gj;
        const double vj = cfg_.beta2 * static_cast<double>(v[j]) + (1.0 - cfg_.beta2) * gj * gj;
        m[j] = static_cast<S>(mj);
        v[j] = static_cast<S>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        double pj = static_cast<double>(p[j]);
        pj *= 1.0 - lr * cfg_.weight_decay;
        pj -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        p[j] = static_cast<S>(pj);
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  ParameterSet<S>& moments_m() { return m_; }
  ParameterSet<S>& moments_v() { return v_; }

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  ParameterSet<S> m_;
  ParameterSet<S> v_;
};

}  // namespace cceeg
