#include "cceeg/flops.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"
#include "cceeg/model.hpp"

namespace cceeg {

namespace {

constexpr std::int64_t kNormPerElem = 7;
constexpr std::int64_t kGeluPerElem = 15;
constexpr std::int64_t kSoftmaxPerLogit = 5;

std::int64_t linear_flops(std::int64_t rows, std::int64_t in, std::int64_t out, bool bias) {
  return 2 * rows * in * out + (bias ? rows * out : 0);
}

}  // namespace

FlopReport count_flops(const ModelConfig& cfg, std::int64_t channels, std::int64_t per_channel) {
  cfg.validate();
  if (channels < 1 || per_channel < 1)
    throw ConfigError("flops: grid dimensions must be positive");
  const std::int64_t C = channels, n = per_channel;
  const std::int64_t N = C * n;
  const std::int64_t d = cfg.d;
  const std::int64_t dk = cfg.head_dim();

  FlopReport r;
  r.channels = C;
  r.per_channel = n;

  // Patch encoder: three conv stages per patch, then the frequency FC and
  // the time+frequency merge.
  std::int64_t per_patch = 0;
  std::int64_t in_ch = 1;
  for (int i = 0; i < 3; ++i) {
    const std::int64_t out_len = cfg.conv_len(i);
    const std::int64_t out_ch = cfg.conv_channels[static_cast<std::size_t>(i)];
    const std::int64_t k = cfg.conv_kernel[static_cast<std::size_t>(i)];
    per_patch += 2 * out_len * out_ch * in_ch * k + out_len * out_ch;  // conv + bias
    per_patch += kNormPerElem * out_ch * out_len;                      // group norm
    per_patch += kGeluPerElem * out_ch * out_len;
    in_ch = out_ch;
  }
  r.patch_encoder = N * per_patch;
  r.patch_encoder += linear_flops(N, cfg.freq_bins(), d, true);  // frequency FC
  r.patch_encoder += N * d;                                      // time + frequency add

  // Positional encoding.
  switch (cfg.pos_enc) {
    case PosEncKind::acpe:
      r.pos_enc = 2 * N * d * cfg.acpe_kernel_spatial * cfg.acpe_kernel_temporal + N * d;
      break;
    case PosEncKind::cpe:
      r.pos_enc = 2 * N * d * cfg.cpe_kernel * cfg.cpe_kernel + N * d;
      break;
    case PosEncKind::ape:
      r.pos_enc = N * d;
      break;
    case PosEncKind::none:
      r.pos_enc = 0;
      break;
  }

  // Transformer blocks.
  for (std::int64_t l = 0; l < cfg.n_layers; ++l) {
    r.attn_proj += 4 * linear_flops(N, d, d, true);  // Q, K, V, output
    r.attn_proj += 2 * kNormPerElem * N * d;         // QK norms
    for (const HeadKind h : head_layout(cfg, l)) {
      std::int64_t batches = 0, len = 0;
      switch (h) {
        case HeadKind::spatial: batches = n; len = C; break;
        case HeadKind::temporal: batches = C; len = n; break;
        case HeadKind::full_grid: batches = 1; len = N; break;
      }
      const std::int64_t logits = batches * len * len;
      r.attn_scores += 2 * logits * dk;               // Q K^T
      r.attn_scores += logits;                        // 1/sqrt(dk) scaling
      r.attn_scores += kSoftmaxPerLogit * logits;
      r.attn_scores += 2 * logits * dk;               // attn * V
    }
    r.ffn += linear_flops(N, d, cfg.ffn_dim, true) + kGeluPerElem * N * cfg.ffn_dim +
             linear_flops(N, cfg.ffn_dim, d, true);
    r.norms_residual += 2 * kNormPerElem * N * d + 2 * N * d;  // ln1, ln2, two residuals
  }

  r.recon_head = linear_flops(N, d, cfg.patch_len, true);
  return r;
}

void FlopReport::to_kv(KvFile& kv) const {
  kv.set_int("flops.channels", channels);
  kv.set_int("flops.patches_per_channel", per_channel);
  kv.set_int("flops.patch_encoder", patch_encoder);
  kv.set_int("flops.pos_enc", pos_enc);
  kv.set_int("flops.attn_proj", attn_proj);
  kv.set_int("flops.attn_scores", attn_scores);
  kv.set_int("flops.attention", attention());
  kv.set_int("flops.ffn", ffn);
  kv.set_int("flops.norms_residual", norms_residual);
  kv.set_int("flops.recon_head", recon_head);
  kv.set_int("flops.total", total());
}

}  // namespace cceeg
