#pragma once

#include "cceeg/model_config.hpp"

#include <cstdint>

namespace cceeg {

class KvFile;

// Forward-pass FLOP estimate for one sample on a C x n patch grid.
//
// Conventions (documented so the numbers are reproducible):
//   * one multiply-accumulate = 2 FLOPs; biased layers add 1 FLOP per output
//   * normalization (layer / group / per-head QK) = 7 FLOPs per element
//   * GELU = 15 FLOPs per element, softmax = 5 FLOPs per logit,
//     elementwise add or scale = 1 FLOP per element
//   * the spectral-energy transform feeding the frequency branch is data
//     preparation, not a learned layer, and is not counted
//   * dropout is free (evaluation mode).
struct FlopReport {
  std::int64_t channels = 0;
  std::int64_t per_channel = 0;

  std::int64_t patch_encoder = 0;  // conv stages + group norms + GELU + freq FC + merge
  std::int64_t pos_enc = 0;
  std::int64_t attn_proj = 0;      // Q/K/V/output projections + QK norms, all layers
  std::int64_t attn_scores = 0;    // score matmuls, softmax, scaling, value apply
  std::int64_t ffn = 0;            // both linears + GELU
  std::int64_t norms_residual = 0; // block layer norms + residual adds
  std::int64_t recon_head = 0;     // patch reconstruction projection

  std::int64_t total() const {
    return patch_encoder + pos_enc + attn_proj + attn_scores + ffn + norms_residual +
           recon_head;
  }
  // Attention-only part (scores + projections); the quantity the attention
  // variants actually change is attn_scores.
  std::int64_t attention() const { return attn_proj + attn_scores; }

  void to_kv(KvFile& kv) const;
};

FlopReport count_flops(const ModelConfig& cfg, std::int64_t channels, std::int64_t per_channel);

}  // namespace cceeg
