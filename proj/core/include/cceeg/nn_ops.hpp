#pragma once

#include "cceeg/graph.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cceeg::ops {

using std::int64_t;

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

// ---- elementwise ----

template <typename S>
int add(Graph<S>& g, int a, int b) {
  detail::require(g.val(a).same_shape(g.val(b)), "add: shape mismatch");
  Tensor<S> y = g.val(a);
  const S* pb = g.val(b).data();
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += pb[i];
  return g.op(std::move(y), [a, b, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& da = gg.grad(a);
    Tensor<S>& db = gg.grad(b);
    for (int64_t i = 0; i < dy.numel(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  });
}

template <typename S>
int scale(Graph<S>& g, int a, S c) {
  Tensor<S> y = g.val(a);
  for (int64_t i = 0; i < y.numel(); ++i) y[i] *= c;
  return g.op(std::move(y), [a, c, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& da = gg.grad(a);
    for (int64_t i = 0; i < dy.numel(); ++i) da[i] += c * dy[i];
  });
}

template <typename S>
int hadamard(Graph<S>& g, int a, int b) {
  detail::require(g.val(a).same_shape(g.val(b)), "hadamard: shape mismatch");
  Tensor<S> y = g.val(a);
  const S* pb = g.val(b).data();
  for (int64_t i = 0; i < y.numel(); ++i) y[i] *= pb[i];
  return g.op(std::move(y), [a, b, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    const Tensor<S>& va = gg.val(a);
    const Tensor<S>& vb = gg.val(b);
    Tensor<S>& da = gg.grad(a);
    Tensor<S>& db = gg.grad(b);
    for (int64_t i = 0; i < dy.numel(); ++i) {
      da[i] += dy[i] * vb[i];
      db[i] += dy[i] * va[i];
    }
  });
}

// x [R,C] + v [C], broadcast over rows.
template <typename S>
int add_rowvec(Graph<S>& g, int x, int v) {
  const Tensor<S>& xv = g.val(x);
  const Tensor<S>& vv = g.val(v);
  detail::require(xv.rank() == 2 && vv.numel() == xv.dim(1), "add_rowvec: shape mismatch");
  Tensor<S> y = xv;
  const int64_t R = xv.dim(0), C = xv.dim(1);
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) y[r * C + c] += vv[c];
  return g.op(std::move(y), [x, v, R, C, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    Tensor<S>& dv = gg.grad(v);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < C; ++c) {
        dx[r * C + c] += dy[r * C + c];
        dv[c] += dy[r * C + c];
      }
  });
}

// ---- shape ----

template <typename S>
int reshape(Graph<S>& g, int a, std::vector<int64_t> shape) {
  Tensor<S> y = g.val(a).reshaped(shape);
  return g.op(std::move(y), [a, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& da = gg.grad(a);
    for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
  });
}

// [A,B,C] -> [B,A,C]
template <typename S>
int transpose01(Graph<S>& g, int x) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 3, "transpose01: rank-3 input required");
  const int64_t A = xv.dim(0), B = xv.dim(1), C = xv.dim(2);
  Tensor<S> y({B, A, C});
  for (int64_t a = 0; a < A; ++a)
    for (int64_t b = 0; b < B; ++b)
      for (int64_t c = 0; c < C; ++c) y[(b * A + a) * C + c] = xv[(a * B + b) * C + c];
  return g.op(std::move(y), [x, A, B, C, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    for (int64_t a = 0; a < A; ++a)
      for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) dx[(a * B + b) * C + c] += dy[(b * A + a) * C + c];
  });
}

// Columns [c0, c1) of a rank-2 tensor.
template <typename S>
int slice_cols(Graph<S>& g, int x, int64_t c0, int64_t c1) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= xv.dim(1), "slice_cols: bad range");
  const int64_t R = xv.dim(0), C = xv.dim(1), W = c1 - c0;
  Tensor<S> y({R, W});
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < W; ++c) y[r * W + c] = xv[r * C + c0 + c];
  return g.op(std::move(y), [x, c0, R, C, W, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < W; ++c) dx[r * C + c0 + c] += dy[r * W + c];
  });
}

// Concatenate rank-2 tensors along columns (equal row counts).
template <typename S>
int concat_cols(Graph<S>& g, const std::vector<int>& xs) {
  detail::require(!xs.empty(), "concat_cols: empty input");
  const int64_t R = g.val(xs[0]).dim(0);
  int64_t Ctot = 0;
  std::vector<int64_t> widths;
  for (int x : xs) {
    detail::require(g.val(x).rank() == 2 && g.val(x).dim(0) == R, "concat_cols: shape mismatch");
    widths.push_back(g.val(x).dim(1));
    Ctot += widths.back();
  }
  Tensor<S> y({R, Ctot});
  int64_t off = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor<S>& xv = g.val(xs[i]);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < widths[i]; ++c) y[r * Ctot + off + c] = xv[r * widths[i] + c];
    off += widths[i];
  }
  return g.op(std::move(y),
              [xs, widths, R, Ctot, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                Tensor<S>& dy = gg.grad(yid);
                int64_t off = 0;
                for (std::size_t i = 0; i < xs.size(); ++i) {
                  Tensor<S>& dx = gg.grad(xs[i]);
                  for (int64_t r = 0; r < R; ++r)
                    for (int64_t c = 0; c < widths[i]; ++c)
                      dx[r * widths[i] + c] += dy[r * Ctot + off + c];
                  off += widths[i];
                }
              });
}

// ---- matrix products (Eigen-backed) ----

template <typename S>
int matmul(Graph<S>& g, int a, int b) {
  const Tensor<S>& av = g.val(a);
  const Tensor<S>& bv = g.val(b);
  detail::require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
                  "matmul: shape mismatch");
  Tensor<S> y({av.dim(0), bv.dim(1)});
  y.mat2().noalias() = av.mat2() * bv.mat2();
  return g.op(std::move(y), [a, b, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    auto dy = gg.grad(yid).mat2();
    gg.grad(a).mat2().noalias() += dy * gg.val(b).mat2().transpose();
    gg.grad(b).mat2().noalias() += gg.val(a).mat2().transpose() * dy;
  });
}

// y = x * W + bias; x [R,in], w [in,out], bias [out] (bias < 0 to omit).
template <typename S>
int affine(Graph<S>& g, int x, int w, int bias) {
  const Tensor<S>& xv = g.val(x);
  const Tensor<S>& wv = g.val(w);
  detail::require(xv.rank() == 2 && wv.rank() == 2 && xv.dim(1) == wv.dim(0),
                  "affine: shape mismatch");
  const int64_t R = xv.dim(0), out = wv.dim(1);
  Tensor<S> y({R, out});
  y.mat2().noalias() = xv.mat2() * wv.mat2();
  if (bias >= 0) {
    const Tensor<S>& bvv = g.val(bias);
    detail::require(bvv.numel() == out, "affine: bias size mismatch");
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < out; ++c) y[r * out + c] += bvv[c];
  }
  return g.op(std::move(y), [x, w, bias, R, out, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    auto dy = gg.grad(yid).mat2();
    gg.grad(x).mat2().noalias() += dy * gg.val(w).mat2().transpose();
    gg.grad(w).mat2().noalias() += gg.val(x).mat2().transpose() * dy;
    if (bias >= 0) {
      Tensor<S>& db = gg.grad(bias);
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < out; ++c) db[c] += gg.grad(yid)[r * out + c];
    }
  });
}

// Batched matmul: [B,M,K] x [B,K,N] -> [B,M,N].
template <typename S>
int bmm(Graph<S>& g, int a, int b) {
  const Tensor<S>& av = g.val(a);
  const Tensor<S>& bv = g.val(b);
  detail::require(av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0) &&
                      av.dim(2) == bv.dim(1),
                  "bmm: shape mismatch");
  const int64_t B = av.dim(0);
  Tensor<S> y({B, av.dim(1), bv.dim(2)});
  for (int64_t i = 0; i < B; ++i) y.mat_slice(i).noalias() = av.mat_slice(i) * bv.mat_slice(i);
  return g.op(std::move(y), [a, b, B, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    for (int64_t i = 0; i < B; ++i) {
      auto dy = gg.grad(yid).mat_slice(i);
      gg.grad(a).mat_slice(i).noalias() += dy * gg.val(b).mat_slice(i).transpose();
      gg.grad(b).mat_slice(i).noalias() += gg.val(a).mat_slice(i).transpose() * dy;
    }
  });
}

// Batched matmul with transposed second operand: [B,M,K] x [B,N,K] -> [B,M,N].
template <typename S>
int bmm_nt(Graph<S>& g, int a, int b) {
  const Tensor<S>& av = g.val(a);
  const Tensor<S>& bv = g.val(b);
  detail::require(av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0) &&
                      av.dim(2) == bv.dim(2),
                  "bmm_nt: shape mismatch");
  const int64_t B = av.dim(0);
  Tensor<S> y({B, av.dim(1), bv.dim(1)});
  for (int64_t i = 0; i < B; ++i)
    y.mat_slice(i).noalias() = av.mat_slice(i) * bv.mat_slice(i).transpose();
  return g.op(std::move(y), [a, b, B, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    for (int64_t i = 0; i < B; ++i) {
      auto dy = gg.grad(yid).mat_slice(i);
      gg.grad(a).mat_slice(i).noalias() += dy * gg.val(b).mat_slice(i);
      gg.grad(b).mat_slice(i).noalias() += dy.transpose() * gg.val(a).mat_slice(i);
    }
  });
}

// ---- normalization ----

// Row-wise layer norm over the last dimension of a rank-2 tensor, with scale
// gamma and (optionally, beta >= 0) shift.
template <typename S>
int layer_norm(Graph<S>& g, int x, int gamma, int beta, S eps) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 2, "layer_norm: rank-2 input required");
  const int64_t R = xv.dim(0), C = xv.dim(1);
  detail::require(g.val(gamma).numel() == C, "layer_norm: gamma size mismatch");
  if (beta >= 0) detail::require(g.val(beta).numel() == C, "layer_norm: beta size mismatch");
  Tensor<S> y({R, C});
  Tensor<S> xhat({R, C});
  Tensor<S> inv_std({R});
  const Tensor<S>& gv = g.val(gamma);
  for (int64_t r = 0; r < R; ++r) {
    S mu = 0;
    for (int64_t c = 0; c < C; ++c) mu += xv[r * C + c];
    mu /= static_cast<S>(C);
    S var = 0;
    for (int64_t c = 0; c < C; ++c) {
      const S d = xv[r * C + c] - mu;
      var += d * d;
    }
    var /= static_cast<S>(C);
    const S is = S(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (int64_t c = 0; c < C; ++c) {
      const S xh = (xv[r * C + c] - mu) * is;
      xhat[r * C + c] = xh;
      y[r * C + c] = gv[c] * xh + (beta >= 0 ? g.val(beta)[c] : S(0));
    }
  }
  return g.op(std::move(y), [x, gamma, beta, R, C, xhat = std::move(xhat),
                             inv_std = std::move(inv_std),
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    Tensor<S>& dgamma = gg.grad(gamma);
    const Tensor<S>& gv = gg.val(gamma);
    for (int64_t r = 0; r < R; ++r) {
      S m1 = 0, m2 = 0;  // mean(dxhat), mean(dxhat * xhat)
      for (int64_t c = 0; c < C; ++c) {
        const S dxh = dy[r * C + c] * gv[c];
        m1 += dxh;
        m2 += dxh * xhat[r * C + c];
      }
      m1 /= static_cast<S>(C);
      m2 /= static_cast<S>(C);
      for (int64_t c = 0; c < C; ++c) {
        const S dxh = dy[r * C + c] * gv[c];
        dx[r * C + c] += (dxh - m1 - xhat[r * C + c] * m2) * inv_std[r];
        dgamma[c] += dy[r * C + c] * xhat[r * C + c];
      }
    }
    if (beta >= 0) {
      Tensor<S>& dbeta = gg.grad(beta);
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) dbeta[c] += dy[r * C + c];
    }
  });
}

// Scale-only layer norm applied independently to each contiguous column
// segment of width `seg` (used to normalize per-head query/key slices while
// the heads are still packed side by side in one matrix).
template <typename S>
int segment_norm_scale(Graph<S>& g, int x, int gamma, int64_t seg, S eps) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 2 && xv.dim(1) % seg == 0, "segment_norm_scale: bad segment");
  const int64_t R = xv.dim(0), C = xv.dim(1), G = C / seg;
  detail::require(g.val(gamma).numel() == C, "segment_norm_scale: gamma size mismatch");
  Tensor<S> y({R, C});
  Tensor<S> xhat({R, C});
  Tensor<S> inv_std({R, G});
  const Tensor<S>& gv = g.val(gamma);
  for (int64_t r = 0; r < R; ++r)
    for (int64_t s = 0; s < G; ++s) {
      const int64_t base = r * C + s * seg;
      S mu = 0;
      for (int64_t c = 0; c < seg; ++c) mu += xv[base + c];
      mu /= static_cast<S>(seg);
      S var = 0;
      for (int64_t c = 0; c < seg; ++c) {
        const S d = xv[base + c] - mu;
        var += d * d;
      }
      var /= static_cast<S>(seg);
      const S is = S(1) / std::sqrt(var + eps);
      inv_std[r * G + s] = is;
      for (int64_t c = 0; c < seg; ++c) {
        const S xh = (xv[base + c] - mu) * is;
        xhat[base + c] = xh;
        y[base + c] = gv[s * seg + c] * xh;
      }
    }
  return g.op(std::move(y), [x, gamma, R, C, G, seg, xhat = std::move(xhat),
                             inv_std = std::move(inv_std),
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    Tensor<S>& dgamma = gg.grad(gamma);
    const Tensor<S>& gv = gg.val(gamma);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t s = 0; s < G; ++s) {
        const int64_t base = r * C + s * seg;
        S m1 = 0, m2 = 0;
        for (int64_t c = 0; c < seg; ++c) {
          const S dxh = dy[base + c] * gv[s * seg + c];
          m1 += dxh;
          m2 += dxh * xhat[base + c];
        }
        m1 /= static_cast<S>(seg);
        m2 /= static_cast<S>(seg);
        for (int64_t c = 0; c < seg; ++c) {
          const S dxh = dy[base + c] * gv[s * seg + c];
          dx[base + c] += (dxh - m1 - xhat[base + c] * m2) * inv_std[r * G + s];
          dgamma[s * seg + c] += dy[base + c] * xhat[base + c];
        }
      }
  });
}

// Group norm over [N, Ch, L]: statistics per (sample, group), affine per channel.
template <typename S>
int group_norm(Graph<S>& g, int x, int gamma, int beta, int64_t groups, S eps) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 3, "group_norm: rank-3 input required");
  const int64_t N = xv.dim(0), Ch = xv.dim(1), L = xv.dim(2);
  detail::require(Ch % groups == 0, "group_norm: channels not divisible by groups");
  detail::require(g.val(gamma).numel() == Ch && g.val(beta).numel() == Ch,
                  "group_norm: affine size mismatch");
  const int64_t cg = Ch / groups;       // channels per group
  const int64_t m = cg * L;             // elements per group
  Tensor<S> y({N, Ch, L});
  Tensor<S> xhat({N, Ch, L});
  Tensor<S> inv_std({N, groups});
  const Tensor<S>& gv = g.val(gamma);
  const Tensor<S>& bv = g.val(beta);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t gr = 0; gr < groups; ++gr) {
      S mu = 0;
      for (int64_t c = gr * cg; c < (gr + 1) * cg; ++c)
        for (int64_t l = 0; l < L; ++l) mu += xv[(n * Ch + c) * L + l];
      mu /= static_cast<S>(m);
      S var = 0;
      for (int64_t c = gr * cg; c < (gr + 1) * cg; ++c)
        for (int64_t l = 0; l < L; ++l) {
          const S d = xv[(n * Ch + c) * L + l] - mu;
          var += d * d;
        }
      var /= static_cast<S>(m);
      const S is = S(1) / std::sqrt(var + eps);
      inv_std[n * groups + gr] = is;
      for (int64_t c = gr * cg; c < (gr + 1) * cg; ++c)
        for (int64_t l = 0; l < L; ++l) {
          const int64_t i = (n * Ch + c) * L + l;
          xhat[i] = (xv[i] - mu) * is;
          y[i] = gv[c] * xhat[i] + bv[c];
        }
    }
  return g.op(std::move(y), [x, gamma, beta, N, Ch, L, groups, cg, m, xhat = std::move(xhat),
                             inv_std = std::move(inv_std),
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    Tensor<S>& dgamma = gg.grad(gamma);
    Tensor<S>& dbeta = gg.grad(beta);
    const Tensor<S>& gv = gg.val(gamma);
    for (int64_t n = 0; n < N; ++n)
      for (int64_t gr = 0; gr < groups; ++gr) {
        S m1 = 0, m2 = 0;
        for (int64_t c = gr * cg; c < (gr + 1) * cg; ++c)
          for (int64_t l = 0; l < L; ++l) {
            const int64_t i = (n * Ch + c) * L + l;
            const S dxh = dy[i] * gv[c];
            m1 += dxh;
            m2 += dxh * xhat[i];
          }
        m1 /= static_cast<S>(m);
        m2 /= static_cast<S>(m);
        const S is = inv_std[n * groups + gr];
        for (int64_t c = gr * cg; c < (gr + 1) * cg; ++c)
          for (int64_t l = 0; l < L; ++l) {
            const int64_t i = (n * Ch + c) * L + l;
            const S dxh = dy[i] * gv[c];
            dx[i] += (dxh - m1 - xhat[i] * m2) * is;
            dgamma[c] += dy[i] * xhat[i];
            dbeta[c] += dy[i];
          }
      }
  });
}

// ---- nonlinearities ----

// Softmax over the last dimension (any rank; leading dims flattened to rows).
template <typename S>
int softmax_lastdim(Graph<S>& g, int x) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() >= 1, "softmax: rank >= 1 required");
  const int64_t L = xv.dim(xv.rank() - 1);
  const int64_t R = xv.numel() / L;
  Tensor<S> y = xv;
  for (int64_t r = 0; r < R; ++r) {
    S mx = y[r * L];
    for (int64_t c = 1; c < L; ++c) mx = std::max(mx, y[r * L + c]);
    S sum = 0;
    for (int64_t c = 0; c < L; ++c) {
      y[r * L + c] = std::exp(y[r * L + c] - mx);
      sum += y[r * L + c];
    }
    for (int64_t c = 0; c < L; ++c) y[r * L + c] /= sum;
  }
  return g.op(std::move(y), [x, R, L, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    const Tensor<S>& yv = gg.val(yid);
    Tensor<S>& dx = gg.grad(x);
    for (int64_t r = 0; r < R; ++r) {
      S dot = 0;
      for (int64_t c = 0; c < L; ++c) dot += dy[r * L + c] * yv[r * L + c];
      for (int64_t c = 0; c < L; ++c)
        dx[r * L + c] += yv[r * L + c] * (dy[r * L + c] - dot);
    }
  });
}

// Exact GELU: x * Phi(x) with Phi the standard normal CDF.
template <typename S>
int gelu(Graph<S>& g, int x) {
  const Tensor<S>& xv = g.val(x);
  Tensor<S> y = xv;
  for (int64_t i = 0; i < y.numel(); ++i) {
    const S xi = y[i];
    y[i] = S(0.5) * xi * (S(1) + std::erf(xi * S(0.70710678118654752440)));
  }
  return g.op(std::move(y), [x, yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    const Tensor<S>& xv = gg.val(x);
    Tensor<S>& dx = gg.grad(x);
    constexpr S inv_sqrt2 = S(0.70710678118654752440);
    constexpr S inv_sqrt2pi = S(0.39894228040143267794);
    for (int64_t i = 0; i < dy.numel(); ++i) {
      const S xi = xv[i];
      const S cdf = S(0.5) * (S(1) + std::erf(xi * inv_sqrt2));
      const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * xi * xi);
      dx[i] += dy[i] * (cdf + xi * pdf);
    }
  });
}

// Inverted dropout with an externally supplied 0/1 mask (so randomness stays
// in the caller's seeded stream); scales kept entries by 1/(1-p).
template <typename S>
int dropout_masked(Graph<S>& g, int x, const Tensor<S>& mask, S p) {
  const Tensor<S>& xv = g.val(x);
  detail::require(mask.numel() == xv.numel(), "dropout: mask size mismatch");
  const S inv_keep = S(1) / (S(1) - p);
  Tensor<S> y = xv;
  for (int64_t i = 0; i < y.numel(); ++i) y[i] *= mask[i] * inv_keep;
  return g.op(std::move(y),
              [x, mask, inv_keep, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                Tensor<S>& dy = gg.grad(yid);
                Tensor<S>& dx = gg.grad(x);
                for (int64_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * mask[i] * inv_keep;
              });
}

// ---- convolutions ----

// 1-D convolution: x [N,Ci,L], w [Co,Ci,K], optional bias [Co] (pass -1 to
// omit). Zero padding `pad` on both sides, stride `stride`.
template <typename S>
int conv1d(Graph<S>& g, int x, int w, int bias, int64_t stride, int64_t pad) {
  const Tensor<S>& xv = g.val(x);
  const Tensor<S>& wv = g.val(w);
  detail::require(xv.rank() == 3 && wv.rank() == 3 && xv.dim(1) == wv.dim(1),
                  "conv1d: shape mismatch");
  const int64_t N = xv.dim(0), Ci = xv.dim(1), L = xv.dim(2);
  const int64_t Co = wv.dim(0), K = wv.dim(2);
  const int64_t Lo = (L + 2 * pad - K) / stride + 1;
  detail::require(Lo >= 1, "conv1d: output length < 1");

  // im2col: [N*Lo, Ci*K]
  Tensor<S> cols({N * Lo, Ci * K});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t lo = 0; lo < Lo; ++lo)
      for (int64_t ci = 0; ci < Ci; ++ci)
        for (int64_t k = 0; k < K; ++k) {
          const int64_t li = lo * stride + k - pad;
          cols[((n * Lo + lo) * Ci + ci) * K + k] =
              (li >= 0 && li < L) ? xv[(n * Ci + ci) * L + li] : S(0);
        }

  // y2 [N*Lo, Co] = cols * W^T, then permute to [N, Co, Lo].
  Tensor<S> y2({N * Lo, Co});
  y2.mat2().noalias() = cols.mat2() * wv.mat(Co, Ci * K).transpose();
  Tensor<S> y({N, Co, Lo});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t lo = 0; lo < Lo; ++lo) {
        S v = y2[(n * Lo + lo) * Co + co];
        if (bias >= 0) v += g.val(bias)[co];
        y[(n * Co + co) * Lo + lo] = v;
      }

  return g.op(std::move(y), [x, w, bias, N, Ci, L, Co, K, Lo, stride, pad,
                             cols = std::move(cols),
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    // Permute grad back to [N*Lo, Co].
    Tensor<S> dy2({N * Lo, Co});
    for (int64_t n = 0; n < N; ++n)
      for (int64_t co = 0; co < Co; ++co)
        for (int64_t lo = 0; lo < Lo; ++lo)
          dy2[(n * Lo + lo) * Co + co] = dy[(n * Co + co) * Lo + lo];

    gg.grad(w).mat(Co, Ci * K).noalias() += dy2.mat2().transpose() * cols.mat2();
    if (bias >= 0) {
      Tensor<S>& db = gg.grad(bias);
      for (int64_t i = 0; i < N * Lo; ++i)
        for (int64_t co = 0; co < Co; ++co) db[co] += dy2[i * Co + co];
    }
    // dcols = dy2 * W; col2im scatter.
    Tensor<S> dcols({N * Lo, Ci * K});
    dcols.mat2().noalias() = dy2.mat2() * gg.val(w).mat(Co, Ci * K);
    Tensor<S>& dx = gg.grad(x);
    for (int64_t n = 0; n < N; ++n)
      for (int64_t lo = 0; lo < Lo; ++lo)
        for (int64_t ci = 0; ci < Ci; ++ci)
          for (int64_t k = 0; k < K; ++k) {
            const int64_t li = lo * stride + k - pad;
            if (li >= 0 && li < L)
              dx[(n * Ci + ci) * L + li] += dcols[((n * Lo + lo) * Ci + ci) * K + k];
          }
  });
}

// Depthwise 2-D convolution over a [C, n, D] grid: each of the D feature
// channels gets its own (kh, kw) kernel; 'same' zero padding, stride 1.
template <typename S>
int depthwise_conv2d(Graph<S>& g, int x, int w) {
  const Tensor<S>& xv = g.val(x);
  const Tensor<S>& wv = g.val(w);
  detail::require(xv.rank() == 3 && wv.rank() == 3 && wv.dim(0) == xv.dim(2),
                  "depthwise_conv2d: shape mismatch");
  const int64_t C = xv.dim(0), n = xv.dim(1), D = xv.dim(2);
  const int64_t kh = wv.dim(1), kw = wv.dim(2);
  detail::require(kh % 2 == 1 && kw % 2 == 1, "depthwise_conv2d: odd kernel required");
  const int64_t ph = kh / 2, pw = kw / 2;
  Tensor<S> y({C, n, D});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t m = 0; m < D; ++m) {
        S acc = 0;
        for (int64_t a = 0; a < kh; ++a) {
          const int64_t ci = c + a - ph;
          if (ci < 0 || ci >= C) continue;
          for (int64_t b = 0; b < kw; ++b) {
            const int64_t ji = j + b - pw;
            if (ji < 0 || ji >= n) continue;
            acc += xv[(ci * n + ji) * D + m] * wv[(m * kh + a) * kw + b];
          }
        }
        y[(c * n + j) * D + m] = acc;
      }
  return g.op(std::move(y), [x, w, C, n, D, kh, kw, ph, pw,
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    const Tensor<S>& xv = gg.val(x);
    const Tensor<S>& wv = gg.val(w);
    Tensor<S>& dx = gg.grad(x);
    Tensor<S>& dw = gg.grad(w);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t j = 0; j < n; ++j)
        for (int64_t m = 0; m < D; ++m) {
          const S dv = dy[(c * n + j) * D + m];
          if (dv == S(0)) continue;
          for (int64_t a = 0; a < kh; ++a) {
            const int64_t ci = c + a - ph;
            if (ci < 0 || ci >= C) continue;
            for (int64_t b = 0; b < kw; ++b) {
              const int64_t ji = j + b - pw;
              if (ji < 0 || ji >= n) continue;
              dx[(ci * n + ji) * D + m] += dv * wv[(m * kh + a) * kw + b];
              dw[(m * kh + a) * kw + b] += dv * xv[(ci * n + ji) * D + m];
            }
          }
        }
  });
}

// ---- gathers / masking ----

// e [R, D] plus a row gathered from `table` [rows, D] for each input row:
// y[r,:] = e[r,:] + table[idx[r],:].
template <typename S>
int add_table_rows(Graph<S>& g, int e, int table, std::vector<int64_t> idx) {
  const Tensor<S>& ev = g.val(e);
  const Tensor<S>& tv = g.val(table);
  detail::require(ev.rank() == 2 && tv.rank() == 2 && ev.dim(1) == tv.dim(1),
                  "add_table_rows: shape mismatch");
  detail::require(static_cast<int64_t>(idx.size()) == ev.dim(0), "add_table_rows: index count");
  const int64_t R = ev.dim(0), D = ev.dim(1);
  Tensor<S> y = ev;
  for (int64_t r = 0; r < R; ++r) {
    detail::require(idx[r] >= 0 && idx[r] < tv.dim(0), "add_table_rows: index out of range");
    for (int64_t c = 0; c < D; ++c) y[r * D + c] += tv[idx[r] * D + c];
  }
  return g.op(std::move(y), [e, table, idx = std::move(idx), R, D,
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& de = gg.grad(e);
    Tensor<S>& dt = gg.grad(table);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < D; ++c) {
        de[r * D + c] += dy[r * D + c];
        dt[idx[r] * D + c] += dy[r * D + c];
      }
  });
}

// Rows of x [N, t] where mask is true are replaced by `token` [t]. Gradient
// reaches the token through masked rows and x through unmasked rows only, so
// masked content never leaks back into the data.
template <typename S>
int replace_masked_rows(Graph<S>& g, int x, int token, std::vector<std::uint8_t> mask) {
  const Tensor<S>& xv = g.val(x);
  const Tensor<S>& tv = g.val(token);
  detail::require(xv.rank() == 2 && tv.numel() == xv.dim(1), "replace_masked_rows: shape");
  detail::require(static_cast<int64_t>(mask.size()) == xv.dim(0), "replace_masked_rows: mask");
  const int64_t N = xv.dim(0), t = xv.dim(1);
  Tensor<S> y = xv;
  for (int64_t r = 0; r < N; ++r)
    if (mask[static_cast<std::size_t>(r)])
      for (int64_t c = 0; c < t; ++c) y[r * t + c] = tv[c];
  return g.op(std::move(y), [x, token, mask = std::move(mask), N, t,
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    Tensor<S>& dy = gg.grad(yid);
    Tensor<S>& dtoken = gg.grad(token);
    Tensor<S>& dx = gg.grad(x);
    for (int64_t r = 0; r < N; ++r) {
      if (mask[static_cast<std::size_t>(r)]) {
        for (int64_t c = 0; c < t; ++c) dtoken[c] += dy[r * t + c];
      } else {
        for (int64_t c = 0; c < t; ++c) dx[r * t + c] += dy[r * t + c];
      }
    }
  });
}

// ---- losses ----

// Mean squared error over the entries of masked rows only:
//   loss = sum_{r in mask} ||pred[r,:] - target[r,:]||^2 / (M * t).
template <typename S>
int masked_mse(Graph<S>& g, int pred, const Tensor<S>& target,
               const std::vector<std::uint8_t>& mask) {
  const Tensor<S>& pv = g.val(pred);
  detail::require(pv.rank() == 2 && pv.same_shape(target), "masked_mse: shape mismatch");
  detail::require(static_cast<int64_t>(mask.size()) == pv.dim(0), "masked_mse: mask size");
  const int64_t N = pv.dim(0), t = pv.dim(1);
  int64_t M = 0;
  for (auto m : mask) M += m ? 1 : 0;
  detail::require(M > 0, "masked_mse: empty mask");
  S acc = 0;
  for (int64_t r = 0; r < N; ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    for (int64_t c = 0; c < t; ++c) {
      const S d = pv[r * t + c] - target[r * t + c];
      acc += d * d;
    }
  }
  const S denom = static_cast<S>(M) * static_cast<S>(t);
  Tensor<S> y = Tensor<S>::scalar(acc / denom);
  return g.op(std::move(y), [pred, target, mask, N, t, denom,
                             yid = static_cast<int>(g.size())](Graph<S>& gg) {
    const S dl = gg.grad(yid)[0];
    const Tensor<S>& pv = gg.val(pred);
    Tensor<S>& dp = gg.grad(pred);
    for (int64_t r = 0; r < N; ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      for (int64_t c = 0; c < t; ++c)
        dp[r * t + c] += dl * S(2) * (pv[r * t + c] - target[r * t + c]) / denom;
    }
  });
}

// Mean of scalar nodes (batch loss aggregation).
template <typename S>
int mean_scalars(Graph<S>& g, const std::vector<int>& xs) {
  detail::require(!xs.empty(), "mean_scalars: empty input");
  S acc = 0;
  for (int x : xs) {
    detail::require(g.val(x).numel() == 1, "mean_scalars: non-scalar input");
    acc += g.val(x)[0];
  }
  const S inv = S(1) / static_cast<S>(xs.size());
  return g.op(Tensor<S>::scalar(acc * inv),
              [xs, inv, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                const S dl = gg.grad(yid)[0];
                for (int x : xs) gg.grad(x)[0] += dl * inv;
              });
}

// Cross entropy with label smoothing on a single logit vector [k]:
//   q = (1-s) * onehot(y) + s/k;  loss = logsumexp(z) - sum_c q_c z_c.
template <typename S>
int cross_entropy_smoothed(Graph<S>& g, int logits, int64_t label, S smoothing) {
  const Tensor<S>& zv = g.val(logits);
  const int64_t k = zv.numel();
  detail::require(label >= 0 && label < k, "cross_entropy: label out of range");
  detail::require(smoothing >= S(0) && smoothing < S(1), "cross_entropy: bad smoothing");
  S mx = zv[0];
  for (int64_t c = 1; c < k; ++c) mx = std::max(mx, zv[c]);
  S sum = 0;
  for (int64_t c = 0; c < k; ++c) sum += std::exp(zv[c] - mx);
  const S lse = mx + std::log(sum);
  S dot = 0;
  for (int64_t c = 0; c < k; ++c) {
    const S q = (c == label ? S(1) - smoothing : S(0)) + smoothing / static_cast<S>(k);
    dot += q * zv[c];
  }
  return g.op(Tensor<S>::scalar(lse - dot),
              [logits, label, smoothing, k, lse, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                const S dl = gg.grad(yid)[0];
                const Tensor<S>& zv = gg.val(logits);
                Tensor<S>& dz = gg.grad(logits);
                for (int64_t c = 0; c < k; ++c) {
                  const S p = std::exp(zv[c] - lse);
                  const S q =
                      (c == label ? S(1) - smoothing : S(0)) + smoothing / static_cast<S>(k);
                  dz[c] += dl * (p - q);
                }
              });
}

// Binary cross entropy on a single raw logit: loss = softplus(z) - y*z.
template <typename S>
int bce_logit(Graph<S>& g, int logit, S y) {
  const Tensor<S>& zv = g.val(logit);
  detail::require(zv.numel() == 1, "bce_logit: scalar logit required");
  const S z = zv[0];
  const S sp = z > S(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return g.op(Tensor<S>::scalar(sp - y * z),
              [logit, y, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                const S dl = gg.grad(yid)[0];
                const S z = gg.val(logit)[0];
                const S sig = S(1) / (S(1) + std::exp(-z));
                gg.grad(logit)[0] += dl * (sig - y);
              });
}

// Mean squared error of a prediction vector against a constant target.
template <typename S>
int mse_vec(Graph<S>& g, int pred, const Tensor<S>& target) {
  const Tensor<S>& pv = g.val(pred);
  detail::require(pv.numel() == target.numel(), "mse_vec: shape mismatch");
  const int64_t n = pv.numel();
  S acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    const S d = pv[i] - target[i];
    acc += d * d;
  }
  return g.op(Tensor<S>::scalar(acc / static_cast<S>(n)),
              [pred, target, n, yid = static_cast<int>(g.size())](Graph<S>& gg) {
                const S dl = gg.grad(yid)[0];
                const Tensor<S>& pv = gg.val(pred);
                Tensor<S>& dp = gg.grad(pred);
                for (int64_t i = 0; i < n; ++i)
                  dp[i] += dl * S(2) * (pv[i] - target[i]) / static_cast<S>(n);
              });
}

}  // namespace cceeg::ops
