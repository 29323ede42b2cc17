#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace cceeg {

class KvFile;

enum class AttentionKind { criss_cross, full, axial };
enum class PosEncKind { acpe, ape, cpe, none };
enum class EnergyKind { power, magnitude, log_power };

std::string to_string(AttentionKind k);
std::string to_string(PosEncKind k);
std::string to_string(EnergyKind k);
AttentionKind attention_from_string(const std::string& s);
PosEncKind posenc_from_string(const std::string& s);
EnergyKind energy_from_string(const std::string& s);

// Architecture hyperparameters. Defaults are the reference configuration:
// 200-dim embeddings over 1 s patches at 200 Hz, 12 blocks of 8 heads split
// half spatial / half temporal.
struct ModelConfig {
  std::int64_t patch_len = 200;  // t: samples per patch
  std::int64_t d = 200;          // embedding width
  std::int64_t n_layers = 12;
  std::int64_t n_heads = 8;
  std::int64_t n_spatial_heads = 4;  // criss-cross split (rest are temporal)
  std::int64_t ffn_dim = 800;
  double dropout = 0.1;

  // Time-branch encoder: three conv stages, each followed by group norm and
  // GELU. Flattened output must equal d.
  std::array<std::int64_t, 3> conv_channels = {25, 25, 25};
  std::array<std::int64_t, 3> conv_kernel = {49, 3, 3};
  std::array<std::int64_t, 3> conv_stride = {25, 1, 1};
  std::array<std::int64_t, 3> conv_pad = {24, 1, 1};
  std::int64_t gn_groups = 5;

  // Frequency branch: one-sided spectrum energies -> linear map to d.
  EnergyKind energy = EnergyKind::power;

  // Positional encoding.
  PosEncKind pos_enc = PosEncKind::acpe;
  std::int64_t acpe_kernel_spatial = 19;  // across channels
  std::int64_t acpe_kernel_temporal = 7;  // across patch index
  std::int64_t cpe_kernel = 7;            // symmetric ablation variant
  std::int64_t ape_max_channels = 64;     // learned-table ablation variant
  std::int64_t ape_max_patches = 64;

  // Attention variant.
  AttentionKind attention = AttentionKind::criss_cross;
  std::int64_t axial_switch_layer = 6;  // layers below: spatial; at/above: temporal

  // Masked-patch pretraining.
  double mask_ratio = 0.5;
  bool learnable_mask_token = false;  // default: masked patches become zeros

  double ln_eps = 1e-5;
  double qk_norm_eps = 1e-5;

  std::int64_t head_dim() const { return d / n_heads; }
  std::int64_t freq_bins() const { return patch_len / 2 + 1; }
  // Length after conv stage i (0-based); stage -1 is the raw patch.
  std::int64_t conv_len(int stage) const;

  // Throws ConfigError on any inconsistency (dimension mismatches, bad
  // fractions, even conv kernels for the positional encodings, ...).
  void validate() const;

  // Flat key=value round trip under "model." keys.
  void to_kv(KvFile& kv) const;
  static ModelConfig from_kv(const KvFile& kv);
};

}  // namespace cceeg
