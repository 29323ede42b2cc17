#include "cceeg/model_config.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

namespace cceeg {

std::string to_string(AttentionKind k) {
  switch (k) {
    case AttentionKind::criss_cross: return "criss_cross";
    case AttentionKind::full: return "full";
    case AttentionKind::axial: return "axial";
  }
  return "criss_cross";
}

std::string to_string(PosEncKind k) {
  switch (k) {
    case PosEncKind::acpe: return "acpe";
    case PosEncKind::ape: return "ape";
    case PosEncKind::cpe: return "cpe";
    case PosEncKind::none: return "none";
  }
  return "acpe";
}

std::string to_string(EnergyKind k) {
  switch (k) {
    case EnergyKind::power: return "power";
    case EnergyKind::magnitude: return "magnitude";
    case EnergyKind::log_power: return "log_power";
  }
  return "power";
}

AttentionKind attention_from_string(const std::string& s) {
  if (s == "criss_cross") return AttentionKind::criss_cross;
  if (s == "full") return AttentionKind::full;
  if (s == "axial") return AttentionKind::axial;
  throw ConfigError("unknown attention kind '" + s + "'");
}

PosEncKind posenc_from_string(const std::string& s) {
  if (s == "acpe") return PosEncKind::acpe;
  if (s == "ape") return PosEncKind::ape;
  if (s == "cpe") return PosEncKind::cpe;
  if (s == "none") return PosEncKind::none;
  throw ConfigError("unknown positional encoding kind '" + s + "'");
}

EnergyKind energy_from_string(const std::string& s) {
  if (s == "power") return EnergyKind::power;
  if (s == "magnitude") return EnergyKind::magnitude;
  if (s == "log_power") return EnergyKind::log_power;
  throw ConfigError("unknown energy kind '" + s + "'");
}

std::int64_t ModelConfig::conv_len(int stage) const {
  std::int64_t len = patch_len;
  for (int i = 0; i <= stage; ++i) {
    len = (len + 2 * conv_pad[static_cast<std::size_t>(i)] -
           conv_kernel[static_cast<std::size_t>(i)]) /
              conv_stride[static_cast<std::size_t>(i)] +
          1;
  }
  return len;
}

void ModelConfig::validate() const {
  if (patch_len < 2) throw ConfigError("model: patch_len must be >= 2");
  if (d < 1) throw ConfigError("model: d must be >= 1");
  if (n_layers < 1) throw ConfigError("model: n_layers must be >= 1");
  if (n_heads < 1) throw ConfigError("model: n_heads must be >= 1");
  if (d % n_heads != 0) throw ConfigError("model: d must be divisible by n_heads");
  if (n_spatial_heads < 0 || n_spatial_heads > n_heads)
    throw ConfigError("model: n_spatial_heads must lie in [0, n_heads]");
  if (ffn_dim < 1) throw ConfigError("model: ffn_dim must be >= 1");
  if (!(dropout >= 0.0) || dropout >= 1.0) throw ConfigError("model: dropout must be in [0,1)");

  std::int64_t len = patch_len;
  for (int i = 0; i < 3; ++i) {
    const auto k = conv_kernel[static_cast<std::size_t>(i)];
    const auto s = conv_stride[static_cast<std::size_t>(i)];
    const auto p = conv_pad[static_cast<std::size_t>(i)];
    if (conv_channels[static_cast<std::size_t>(i)] < 1)
      throw ConfigError("model: conv channels must be >= 1");
    if (k < 1 || s < 1 || p < 0) throw ConfigError("model: bad conv geometry");
    len = (len + 2 * p - k) / s + 1;
    if (len < 1) throw ConfigError("model: conv stage " + std::to_string(i) +
                                   " collapses the patch (length < 1)");
  }
  if (conv_channels[2] * len != d)
    throw ConfigError("model: flattened conv output (" + std::to_string(conv_channels[2]) + "*" +
                      std::to_string(len) + ") must equal d (" + std::to_string(d) + ")");
  if (conv_channels[0] % gn_groups != 0 || conv_channels[1] % gn_groups != 0 ||
      conv_channels[2] % gn_groups != 0)
    throw ConfigError("model: conv channels must be divisible by gn_groups");

  if (pos_enc == PosEncKind::acpe) {
    if (acpe_kernel_spatial % 2 == 0 || acpe_kernel_temporal % 2 == 0)
      throw ConfigError("model: positional conv kernels must be odd");
  }
  if (pos_enc == PosEncKind::cpe && cpe_kernel % 2 == 0)
    throw ConfigError("model: positional conv kernels must be odd");
  if (pos_enc == PosEncKind::ape && (ape_max_channels < 1 || ape_max_patches < 1))
    throw ConfigError("model: ape table dimensions must be >= 1");

  if (attention == AttentionKind::axial &&
      (axial_switch_layer < 0 || axial_switch_layer > n_layers))
    throw ConfigError("model: axial_switch_layer must lie in [0, n_layers]");

  if (!(mask_ratio > 0.0) || !(mask_ratio < 1.0))
    throw ConfigError("model: mask_ratio must lie in (0,1)");
  if (!(ln_eps > 0.0) || !(qk_norm_eps > 0.0)) throw ConfigError("model: eps must be > 0");
}

void ModelConfig::to_kv(KvFile& kv) const {
  kv.set_int("model.patch_len", patch_len);
  kv.set_int("model.d", d);
  kv.set_int("model.layers", n_layers);
  kv.set_int("model.heads", n_heads);
  kv.set_int("model.spatial_heads", n_spatial_heads);
  kv.set_int("model.ffn", ffn_dim);
  kv.set_double("model.dropout", dropout);
  for (int i = 0; i < 3; ++i) {
    const std::string p = "model.conv" + std::to_string(i) + ".";
    kv.set_int(p + "channels", conv_channels[static_cast<std::size_t>(i)]);
    kv.set_int(p + "kernel", conv_kernel[static_cast<std::size_t>(i)]);
    kv.set_int(p + "stride", conv_stride[static_cast<std::size_t>(i)]);
    kv.set_int(p + "pad", conv_pad[static_cast<std::size_t>(i)]);
  }
  kv.set_int("model.gn_groups", gn_groups);
  kv.set("model.energy", to_string(energy));
  kv.set("model.pos_enc", to_string(pos_enc));
  kv.set_int("model.acpe_kernel_spatial", acpe_kernel_spatial);
  kv.set_int("model.acpe_kernel_temporal", acpe_kernel_temporal);
  kv.set_int("model.cpe_kernel", cpe_kernel);
  kv.set_int("model.ape_max_channels", ape_max_channels);
  kv.set_int("model.ape_max_patches", ape_max_patches);
  kv.set("model.attention", to_string(attention));
  kv.set_int("model.axial_switch_layer", axial_switch_layer);
  kv.set_double("model.mask_ratio", mask_ratio);
  kv.set_int("model.learnable_mask_token", learnable_mask_token ? 1 : 0);
  kv.set_double("model.ln_eps", ln_eps);
  kv.set_double("model.qk_norm_eps", qk_norm_eps);
}

ModelConfig ModelConfig::from_kv(const KvFile& kv) {
  ModelConfig cfg;
  auto geti = [&](const char* key, std::int64_t& out) {
    if (kv.has(key)) out = kv.get_int(key);
  };
  auto getd = [&](const char* key, double& out) {
    if (kv.has(key)) out = kv.get_double(key);
  };
  geti("model.patch_len", cfg.patch_len);
  geti("model.d", cfg.d);
  geti("model.layers", cfg.n_layers);
  geti("model.heads", cfg.n_heads);
  geti("model.spatial_heads", cfg.n_spatial_heads);
  geti("model.ffn", cfg.ffn_dim);
  getd("model.dropout", cfg.dropout);
  for (int i = 0; i < 3; ++i) {
    const std::string p = "model.conv" + std::to_string(i) + ".";
    geti((p + "channels").c_str(), cfg.conv_channels[static_cast<std::size_t>(i)]);
    geti((p + "kernel").c_str(), cfg.conv_kernel[static_cast<std::size_t>(i)]);
    geti((p + "stride").c_str(), cfg.conv_stride[static_cast<std::size_t>(i)]);
    geti((p + "pad").c_str(), cfg.conv_pad[static_cast<std::size_t>(i)]);
  }
  geti("model.gn_groups", cfg.gn_groups);
  if (kv.has("model.energy")) cfg.energy = energy_from_string(kv.get("model.energy"));
  if (kv.has("model.pos_enc")) cfg.pos_enc = posenc_from_string(kv.get("model.pos_enc"));
  geti("model.acpe_kernel_spatial", cfg.acpe_kernel_spatial);
  geti("model.acpe_kernel_temporal", cfg.acpe_kernel_temporal);
  geti("model.cpe_kernel", cfg.cpe_kernel);
  geti("model.ape_max_channels", cfg.ape_max_channels);
  geti("model.ape_max_patches", cfg.ape_max_patches);
  if (kv.has("model.attention"))
    cfg.attention = attention_from_string(kv.get("model.attention"));
  geti("model.axial_switch_layer", cfg.axial_switch_layer);
  getd("model.mask_ratio", cfg.mask_ratio);
  if (kv.has("model.learnable_mask_token"))
    cfg.learnable_mask_token = kv.get_int("model.learnable_mask_token") != 0;
  getd("model.ln_eps", cfg.ln_eps);
  getd("model.qk_norm_eps", cfg.qk_norm_eps);
  cfg.validate();
  return cfg;
}

}  // namespace cceeg
