#pragma once

#include "cceeg/model.hpp"
#include "cceeg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace cceeg {

// Plain-loop multi-head attention where each head sees an explicit
// allowed-pair predicate (spatial: same patch index; temporal: same channel;
// full: all pairs). No shared code with the graph implementation beyond the
// input tensors: this is the independent oracle the striped attention is
// verified against, used by both the unit tests and the oracle command.
inline std::vector<double> dense_masked_attention(
    const Tensor<double>& x, const Tensor<double>& wq, const Tensor<double>& bq,
    const Tensor<double>& wk, const Tensor<double>& bk, const Tensor<double>& wv,
    const Tensor<double>& bv, const Tensor<double>& wo, const Tensor<double>& bo,
    const Tensor<double>& qn, const Tensor<double>& kn, const std::vector<HeadKind>& heads,
    std::int64_t C, std::int64_t n, double eps) {
  const std::int64_t N = C * n, d = x.dim(1);
  const auto K = static_cast<std::int64_t>(heads.size());
  const std::int64_t dk = d / K;
  auto linear = [&](const Tensor<double>& w, const Tensor<double>& b) {
    std::vector<double> y(static_cast<std::size_t>(N * d), 0.0);
    for (std::int64_t i = 0; i < N; ++i)
      for (std::int64_t o = 0; o < d; ++o) {
        double acc = b[o];
        for (std::int64_t c = 0; c < d; ++c) acc += x[i * d + c] * w[c * d + o];
        y[static_cast<std::size_t>(i * d + o)] = acc;
      }
    return y;
  };
  auto seg_norm = [&](std::vector<double>& q, const Tensor<double>& gamma) {
    for (std::int64_t i = 0; i < N; ++i)
      for (std::int64_t h = 0; h < K; ++h) {
        double mu = 0.0;
        for (std::int64_t c = 0; c < dk; ++c) mu += q[static_cast<std::size_t>(i * d + h * dk + c)];
        mu /= static_cast<double>(dk);
        double var = 0.0;
        for (std::int64_t c = 0; c < dk; ++c) {
          const double dd = q[static_cast<std::size_t>(i * d + h * dk + c)] - mu;
          var += dd * dd;
        }
        var /= static_cast<double>(dk);
        const double is = 1.0 / std::sqrt(var + eps);
        for (std::int64_t c = 0; c < dk; ++c) {
          auto& v = q[static_cast<std::size_t>(i * d + h * dk + c)];
          v = (v - mu) * is * gamma[h * dk + c];
        }
      }
  };
  std::vector<double> q = linear(wq, bq), k = linear(wk, bk), v = linear(wv, bv);
  seg_norm(q, qn);
  seg_norm(k, kn);

  std::vector<double> o(static_cast<std::size_t>(N * d), 0.0);
  for (std::int64_t h = 0; h < K; ++h) {
    auto allowed = [&](std::int64_t i, std::int64_t j) {
      switch (heads[static_cast<std::size_t>(h)]) {
        case HeadKind::spatial: return i % n == j % n;   // same patch index
        case HeadKind::temporal: return i / n == j / n;  // same channel
        case HeadKind::full_grid: return true;
      }
      return false;
    };
    for (std::int64_t i = 0; i < N; ++i) {
      std::vector<double> s(static_cast<std::size_t>(N), 0.0);
      double mx = -1e300;
      for (std::int64_t j = 0; j < N; ++j) {
        if (!allowed(i, j)) continue;
        double acc = 0.0;
        for (std::int64_t c = 0; c < dk; ++c)
          acc += q[static_cast<std::size_t>(i * d + h * dk + c)] *
                 k[static_cast<std::size_t>(j * d + h * dk + c)];
        s[static_cast<std::size_t>(j)] = acc / std::sqrt(static_cast<double>(dk));
        mx = std::max(mx, s[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (std::int64_t j = 0; j < N; ++j)
        if (allowed(i, j)) z += std::exp(s[static_cast<std::size_t>(j)] - mx);
      for (std::int64_t j = 0; j < N; ++j) {
        if (!allowed(i, j)) continue;
        const double p = std::exp(s[static_cast<std::size_t>(j)] - mx) / z;
        for (std::int64_t c = 0; c < dk; ++c)
          o[static_cast<std::size_t>(i * d + h * dk + c)] +=
              p * v[static_cast<std::size_t>(j * d + h * dk + c)];
      }
    }
  }
  std::vector<double> y(static_cast<std::size_t>(N * d), 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t out = 0; out < d; ++out) {
      double acc = bo[out];
      for (std::int64_t c = 0; c < d; ++c)
        acc += o[static_cast<std::size_t>(i * d + c)] * wo[c * d + out];
      y[static_cast<std::size_t>(i * d + out)] = acc;
    }
  return y;
}

}  // namespace cceeg
