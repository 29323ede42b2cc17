#pragma once

#include "cceeg/dft.hpp"
#include "cceeg/graph.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/nn_ops.hpp"
#include "cceeg/parameters.hpp"
#include "cceeg/patching.hpp"
#include "cceeg/rng.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cceeg {

namespace ops {

// Differentiable per-row spectral energies: x [N, t] -> [N, bins] where
// bins = t/2 + 1, e_k = |X_k|^2 / t under the chosen energy mapping. The
// RealDft must outlive the graph (the model owns one). Gradients flow back
// through the transform, so a learnable mask token also learns from the
// frequency branch.
template <typename S>
int dft_energy(Graph<S>& g, int x, const RealDft& dft, EnergyKind kind) {
  const Tensor<S>& xv = g.val(x);
  detail::require(xv.rank() == 2 && xv.dim(1) == dft.length(), "dft_energy: bad input shape");
  const std::int64_t N = xv.dim(0), t = xv.dim(1), bins = dft.bins();
  Tensor<S> y({N, bins});
  std::vector<double> re(static_cast<std::size_t>(N * bins));
  std::vector<double> im(static_cast<std::size_t>(N * bins));
  std::vector<double> row(static_cast<std::size_t>(t));
  for (std::int64_t r = 0; r < N; ++r) {
    for (std::int64_t j = 0; j < t; ++j) row[static_cast<std::size_t>(j)] = static_cast<double>(xv[r * t + j]);
    dft.transform(row.data(), re.data() + r * bins, im.data() + r * bins);
    for (std::int64_t k = 0; k < bins; ++k) {
      const double rr = re[static_cast<std::size_t>(r * bins + k)];
      const double ii = im[static_cast<std::size_t>(r * bins + k)];
      double e = (rr * rr + ii * ii) / static_cast<double>(t);
      switch (kind) {
        case EnergyKind::power: break;
        case EnergyKind::magnitude: e = std::sqrt(e); break;
        case EnergyKind::log_power: e = std::log(e + 1e-10); break;
      }
      y[r * bins + k] = static_cast<S>(e);
    }
  }
  const RealDft* dftp = &dft;
  const int yid = static_cast<int>(g.size());
  return g.op(std::move(y), [x, N, t, bins, kind, dftp, yid, re = std::move(re),
                             im = std::move(im)](Graph<S>& gg) {
    if (!gg.grad_touched(yid)) return;
    const Tensor<S>& gy = gg.grad(yid);
    Tensor<S>& dx = gg.grad(x);
    std::vector<double> ge(static_cast<std::size_t>(bins));
    for (std::int64_t r = 0; r < N; ++r) {
      // Chain the energy mapping back to the raw power e = (re^2 + im^2)/t.
      for (std::int64_t k = 0; k < bins; ++k) {
        const double rr = re[static_cast<std::size_t>(r * bins + k)];
        const double ii = im[static_cast<std::size_t>(r * bins + k)];
        const double e = (rr * rr + ii * ii) / static_cast<double>(t);
        double gk = static_cast<double>(gy[r * bins + k]);
        switch (kind) {
          case EnergyKind::power: break;
          case EnergyKind::magnitude: gk = e > 0.0 ? gk / (2.0 * std::sqrt(e)) : 0.0; break;
          case EnergyKind::log_power: gk /= e + 1e-10; break;
        }
        ge[static_cast<std::size_t>(k)] = gk;
      }
      for (std::int64_t j = 0; j < t; ++j) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < bins; ++k) {
          const double rr = re[static_cast<std::size_t>(r * bins + k)];
          const double ii = im[static_cast<std::size_t>(r * bins + k)];
          acc += ge[static_cast<std::size_t>(k)] * 2.0 *
                 (rr * dftp->cos_kj(k, j) + ii * dftp->sin_kj(k, j)) / static_cast<double>(t);
        }
        dx[r * t + j] += static_cast<S>(acc);
      }
    }
  });
}

}  // namespace ops

// Deterministic dropout mask source; one stream per forward pass so masks
// depend only on (seed, draw order).
template <typename S>
class DropoutStream {
 public:
  DropoutStream(double p, std::uint64_t seed) : p_(p), rng_(seed) {}

  bool active() const { return p_ > 0.0; }
  double p() const { return p_; }

  Tensor<S> next_mask(const std::vector<std::int64_t>& shape) {
    Tensor<S> m(shape);
    for (std::int64_t i = 0; i < m.numel(); ++i) m[i] = rng_.uniform() < p_ ? S(0) : S(1);
    return m;
  }

  // Apply inverted dropout to a node (identity when inactive).
  int apply(Graph<S>& g, int x) {
    if (!active()) return x;
    return ops::dropout_masked(g, x, next_mask(g.val(x).shape()), static_cast<S>(p_));
  }

 private:
  double p_;
  Rng rng_;
};

enum class HeadKind { spatial, temporal, full_grid };

template <typename S>
struct AttnParamIds {
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int qn_gamma, kn_gamma;
};

// Multi-head attention over the [C, n] patch grid, input x = [C*n, d]
// (channel-major rows). Per head: spatial heads attend within each time
// stripe (the C tokens sharing a patch index), temporal heads within each
// channel stripe (the n tokens sharing a channel), full heads across all
// C*n tokens. Queries and keys are layer-normalized per head (scale only)
// before the scaled dot product.
template <typename S>
int attention_forward(Graph<S>& g, int x, const AttnParamIds<S>& p,
                      const std::vector<HeadKind>& heads, std::int64_t C, std::int64_t n,
                      S qk_eps, DropoutStream<S>* drop) {
  const std::int64_t N = C * n;
  const std::int64_t d = g.val(x).dim(1);
  const auto K = static_cast<std::int64_t>(heads.size());
  const std::int64_t dk = d / K;
  const S inv_sqrt_dk = S(1) / std::sqrt(static_cast<S>(dk));

  int q = ops::affine(g, x, p.wq, p.bq);
  int k = ops::affine(g, x, p.wk, p.bk);
  const int v = ops::affine(g, x, p.wv, p.bv);
  q = ops::segment_norm_scale(g, q, p.qn_gamma, dk, qk_eps);
  k = ops::segment_norm_scale(g, k, p.kn_gamma, dk, qk_eps);

  std::vector<int> outs;
  for (std::int64_t h = 0; h < K; ++h) {
    const int qh = ops::slice_cols(g, q, h * dk, (h + 1) * dk);
    const int kh = ops::slice_cols(g, k, h * dk, (h + 1) * dk);
    const int vh = ops::slice_cols(g, v, h * dk, (h + 1) * dk);
    int q3, k3, v3;
    switch (heads[static_cast<std::size_t>(h)]) {
      case HeadKind::spatial:
        // Stripes over the channel axis: batch by patch index -> [n, C, dk].
        q3 = ops::transpose01(g, ops::reshape(g, qh, {C, n, dk}));
        k3 = ops::transpose01(g, ops::reshape(g, kh, {C, n, dk}));
        v3 = ops::transpose01(g, ops::reshape(g, vh, {C, n, dk}));
        break;
      case HeadKind::temporal:
        // Stripes over the patch axis: batch by channel -> [C, n, dk].
        q3 = ops::reshape(g, qh, {C, n, dk});
        k3 = ops::reshape(g, kh, {C, n, dk});
        v3 = ops::reshape(g, vh, {C, n, dk});
        break;
      case HeadKind::full_grid:
      default:
        q3 = ops::reshape(g, qh, {1, N, dk});
        k3 = ops::reshape(g, kh, {1, N, dk});
        v3 = ops::reshape(g, vh, {1, N, dk});
        break;
    }
    const int scores = ops::scale(g, ops::bmm_nt(g, q3, k3), inv_sqrt_dk);
    const int attn = ops::softmax_lastdim(g, scores);
    int o3 = ops::bmm(g, attn, v3);
    if (heads[static_cast<std::size_t>(h)] == HeadKind::spatial) o3 = ops::transpose01(g, o3);
    outs.push_back(ops::reshape(g, o3, {N, dk}));
  }
  int out = ops::concat_cols(g, outs);
  out = ops::affine(g, out, p.wo, p.bo);
  if (drop) out = drop->apply(g, out);
  return out;
}

// Head layout for one block under the configured attention variant.
inline std::vector<HeadKind> head_layout(const ModelConfig& cfg, std::int64_t layer) {
  std::vector<HeadKind> heads;
  switch (cfg.attention) {
    case AttentionKind::criss_cross:
      for (std::int64_t h = 0; h < cfg.n_heads; ++h)
        heads.push_back(h < cfg.n_spatial_heads ? HeadKind::spatial : HeadKind::temporal);
      break;
    case AttentionKind::full:
      heads.assign(static_cast<std::size_t>(cfg.n_heads), HeadKind::full_grid);
      break;
    case AttentionKind::axial:
      heads.assign(static_cast<std::size_t>(cfg.n_heads),
                   layer < cfg.axial_switch_layer ? HeadKind::spatial : HeadKind::temporal);
      break;
  }
  return heads;
}

// A parameter set bound to one graph: every tensor becomes a leaf so a single
// backward pass accumulates gradients for all samples sharing the graph.
template <typename S>
class BoundModel {
 public:
  BoundModel(const ModelConfig& cfg, Graph<S>& g, const ParameterSet<S>& params)
      : cfg_(&cfg), g_(&g), dft_(cfg.patch_len) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      ids_[params.names()[i]] = g.leaf(params.value(i));
    }
    if (cfg.learnable_mask_token) token_values_ = params.get("mask.token");
  }

  Graph<S>& graph() const { return *g_; }
  const ModelConfig& config() const { return *cfg_; }

  int pid(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) throw ConfigError("model: unbound parameter '" + name + "'");
    return it->second;
  }
  bool has_pid(const std::string& name) const { return ids_.count(name) > 0; }

  // Encoder forward for one sample. `raw_patches` is [C*n, patch_len]; when
  // `mask` is given, masked rows are replaced by the mask token (zeros or
  // the learnable token) before any encoding, including the frequency
  // energies, so masked content cannot leak into the features.
  int encode(const Tensor<S>& raw_patches, const PatchGrid& grid,
             const std::vector<std::uint8_t>* mask, DropoutStream<S>* drop) const {
    const ModelConfig& cfg = *cfg_;
    Graph<S>& g = *g_;
    const std::int64_t C = grid.channels, n = grid.per_channel, t = grid.patch_len;
    const std::int64_t N = C * n;
    if (t != cfg.patch_len) throw ConfigError("model: patch length mismatch");
    if (raw_patches.rank() != 2 || raw_patches.dim(0) != N || raw_patches.dim(1) != t)
      throw ConfigError("model: raw patch tensor shape mismatch");

    // Values the encoder actually sees (mask applied), used for the
    // frequency branch and for the non-learnable time branch.
    Tensor<S> seen = raw_patches;
    if (mask) {
      for (std::int64_t r = 0; r < N; ++r) {
        if (!(*mask)[static_cast<std::size_t>(r)]) continue;
        for (std::int64_t c = 0; c < t; ++c)
          seen[r * t + c] = cfg.learnable_mask_token ? token_values_[c] : S(0);
      }
    }

    // Time branch input node.
    int x;
    if (mask && cfg.learnable_mask_token) {
      const int raw_id = g.constant(raw_patches);
      x = ops::replace_masked_rows(g, raw_id, pid("mask.token"), *mask);
    } else {
      x = g.constant(seen);
    }

    // Time branch: three conv stages with group norm + GELU.
    int h = ops::reshape(g, x, {N, 1, t});
    for (int i = 0; i < 3; ++i) {
      const std::string ci = "enc.conv" + std::to_string(i);
      const std::string gi = "enc.gn" + std::to_string(i);
      h = ops::conv1d(g, h, pid(ci + ".w"), pid(ci + ".b"),
                      cfg.conv_stride[static_cast<std::size_t>(i)],
                      cfg.conv_pad[static_cast<std::size_t>(i)]);
      h = ops::group_norm(g, h, pid(gi + ".gamma"), pid(gi + ".beta"), cfg.gn_groups,
                          static_cast<S>(cfg.ln_eps));
      h = ops::gelu(g, h);
    }
    const int time_emb = ops::reshape(g, h, {N, cfg.d});

    // Frequency branch: per-patch spectral energies mapped to d by one affine
    // layer. When the mask token is learnable it feeds this branch too, so the
    // transform must be part of the graph; otherwise the input rows are plain
    // data and the energies are precomputed constants.
    int energy;
    if (mask && cfg.learnable_mask_token) {
      energy = ops::dft_energy(g, x, dft_, cfg.energy);
    } else {
      energy = g.constant(patch_energies(seen, N, t));
    }
    const int freq_emb = ops::affine(g, energy, pid("enc.freq.w"), pid("enc.freq.b"));

    int e = ops::add(g, time_emb, freq_emb);

    // Positional encoding.
    switch (cfg.pos_enc) {
      case PosEncKind::acpe:
      case PosEncKind::cpe: {
        const char* name = cfg.pos_enc == PosEncKind::acpe ? "pe.acpe.w" : "pe.cpe.w";
        const int e3 = ops::reshape(g, e, {C, n, cfg.d});
        const int pe = ops::depthwise_conv2d(g, e3, pid(name));
        e = ops::reshape(g, ops::add(g, e3, pe), {N, cfg.d});
        break;
      }
      case PosEncKind::ape: {
        if (C > cfg.ape_max_channels || n > cfg.ape_max_patches)
          throw ConfigError("model: grid " + std::to_string(C) + "x" + std::to_string(n) +
                            " exceeds the learned position table (" +
                            std::to_string(cfg.ape_max_channels) + "x" +
                            std::to_string(cfg.ape_max_patches) + ")");
        std::vector<std::int64_t> idx(static_cast<std::size_t>(N));
        for (std::int64_t c = 0; c < C; ++c)
          for (std::int64_t j = 0; j < n; ++j)
            idx[static_cast<std::size_t>(c * n + j)] = c * cfg.ape_max_patches + j;
        e = ops::add_table_rows(g, e, pid("pe.ape.table"), std::move(idx));
        break;
      }
      case PosEncKind::none:
        break;
    }

    // Transformer blocks (pre-norm).
    int xb = e;
    for (std::int64_t l = 0; l < cfg.n_layers; ++l) {
      const std::string p = "blk" + std::to_string(l) + ".";
      const int h1 = ops::layer_norm(g, xb, pid(p + "ln1.gamma"), pid(p + "ln1.beta"),
                                     static_cast<S>(cfg.ln_eps));
      AttnParamIds<S> ap{pid(p + "attn.wq"), pid(p + "attn.bq"), pid(p + "attn.wk"),
                         pid(p + "attn.bk"), pid(p + "attn.wv"), pid(p + "attn.bv"),
                         pid(p + "attn.wo"), pid(p + "attn.bo"), pid(p + "attn.qn.gamma"),
                         pid(p + "attn.kn.gamma")};
      const int a = attention_forward(g, h1, ap, head_layout(cfg, l), C, n,
                                      static_cast<S>(cfg.qk_norm_eps), drop);
      xb = ops::add(g, xb, a);
      const int h2 = ops::layer_norm(g, xb, pid(p + "ln2.gamma"), pid(p + "ln2.beta"),
                                     static_cast<S>(cfg.ln_eps));
      int f = ops::affine(g, h2, pid(p + "ffn.w1"), pid(p + "ffn.b1"));
      f = ops::gelu(g, f);
      f = ops::affine(g, f, pid(p + "ffn.w2"), pid(p + "ffn.b2"));
      if (drop) f = drop->apply(g, f);
      xb = ops::add(g, xb, f);
    }
    return xb;
  }

  // Patch reconstruction head: features [N, d] -> [N, patch_len].
  int reconstruct(int features) const {
    return ops::affine(*g_, features, pid("recon.w"), pid("recon.b"));
  }

  // Masked reconstruction loss for one sample: encode with mask, predict all
  // patches, score only the masked ones against the original content.
  int pretrain_loss(const Tensor<S>& raw_patches, const PatchGrid& grid,
                    const std::vector<std::uint8_t>& mask, DropoutStream<S>* drop) const {
    const int feats = encode(raw_patches, grid, &mask, drop);
    const int pred = reconstruct(feats);
    return ops::masked_mse(*g_, pred, raw_patches, mask);
  }

  // Add this graph's parameter gradients into `grads` (same names/shapes).
  void accumulate_grads(ParameterSet<S>& grads) const {
    for (const auto& [name, id] : ids_) {
      if (!g_->grad_touched(id)) continue;
      Tensor<S>& dst = grads.get(name);
      const Tensor<S>& src = g_->grad(id);
      for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
    }
  }

  // Spectral energies for each patch row under the configured energy kind.
  Tensor<S> patch_energies(const Tensor<S>& patches, std::int64_t N, std::int64_t t) const {
    const std::int64_t bins = cfg_->freq_bins();
    Tensor<S> out({N, bins});
    std::vector<double> row(static_cast<std::size_t>(t));
    for (std::int64_t r = 0; r < N; ++r) {
      for (std::int64_t c = 0; c < t; ++c) row[static_cast<std::size_t>(c)] = static_cast<double>(patches[r * t + c]);
      const std::vector<double> e = dft_.energy(row.data());
      for (std::int64_t k = 0; k < bins; ++k) {
        double v = e[static_cast<std::size_t>(k)];
        switch (cfg_->energy) {
          case EnergyKind::power: break;
          case EnergyKind::magnitude: v = std::sqrt(v); break;
          case EnergyKind::log_power: v = std::log(v + 1e-10); break;
        }
        out[r * bins + k] = static_cast<S>(v);
      }
    }
    return out;
  }

 private:
  const ModelConfig* cfg_;
  Graph<S>* g_;
  std::map<std::string, int> ids_;
  Tensor<S> token_values_;
  RealDft dft_;
};

// Convert one float sample to the [C*n, t] tensor the model consumes.
template <typename S>
Tensor<S> sample_to_patch_tensor(const float* sample, const PatchGrid& grid) {
  const std::vector<float> p = to_patches(sample, grid);
  Tensor<S> t({grid.total(), grid.patch_len});
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(p[static_cast<std::size_t>(i)]);
  return t;
}

}  // namespace cceeg
