#include "cceeg/parameters.hpp"

namespace cceeg {

void for_each_param(const ModelConfig& cfg, const std::function<void(const ParamSpec&)>& fn) {
  auto emit = [&](std::string name, std::vector<std::int64_t> shape, InitKind init,
                  std::int64_t fan_in = 0) {
    fn(ParamSpec{std::move(name), std::move(shape), init, fan_in});
  };

  // Time branch: conv stages with group norm affine.
  std::int64_t in_ch = 1;
  for (int i = 0; i < 3; ++i) {
    const auto out_ch = cfg.conv_channels[static_cast<std::size_t>(i)];
    const auto k = cfg.conv_kernel[static_cast<std::size_t>(i)];
    const std::string p = "enc.conv" + std::to_string(i);
    emit(p + ".w", {out_ch, in_ch, k}, InitKind::kaiming, in_ch * k);
    emit(p + ".b", {out_ch}, InitKind::zeros);
    emit("enc.gn" + std::to_string(i) + ".gamma", {out_ch}, InitKind::ones);
    emit("enc.gn" + std::to_string(i) + ".beta", {out_ch}, InitKind::zeros);
    in_ch = out_ch;
  }
  // Frequency branch: energies -> d.
  emit("enc.freq.w", {cfg.freq_bins(), cfg.d}, InitKind::kaiming, cfg.freq_bins());
  emit("enc.freq.b", {cfg.d}, InitKind::zeros);

  // Positional encoding.
  switch (cfg.pos_enc) {
    case PosEncKind::acpe:
      emit("pe.acpe.w", {cfg.d, cfg.acpe_kernel_spatial, cfg.acpe_kernel_temporal},
           InitKind::kaiming, cfg.acpe_kernel_spatial * cfg.acpe_kernel_temporal);
      break;
    case PosEncKind::cpe:
      emit("pe.cpe.w", {cfg.d, cfg.cpe_kernel, cfg.cpe_kernel}, InitKind::kaiming,
           cfg.cpe_kernel * cfg.cpe_kernel);
      break;
    case PosEncKind::ape:
      emit("pe.ape.table", {cfg.ape_max_channels * cfg.ape_max_patches, cfg.d}, InitKind::table);
      break;
    case PosEncKind::none:
      break;
  }

  if (cfg.learnable_mask_token) emit("mask.token", {cfg.patch_len}, InitKind::zeros);

  for (std::int64_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "blk" + std::to_string(l) + ".";
    emit(p + "ln1.gamma", {cfg.d}, InitKind::ones);
    emit(p + "ln1.beta", {cfg.d}, InitKind::zeros);
    for (const char* w : {"wq", "wk", "wv", "wo"})
      emit(p + "attn." + w, {cfg.d, cfg.d}, InitKind::kaiming, cfg.d);
    for (const char* b : {"bq", "bk", "bv", "bo"}) emit(p + "attn." + b, {cfg.d}, InitKind::zeros);
    emit(p + "attn.qn.gamma", {cfg.d}, InitKind::ones);
    emit(p + "attn.kn.gamma", {cfg.d}, InitKind::ones);
    emit(p + "ln2.gamma", {cfg.d}, InitKind::ones);
    emit(p + "ln2.beta", {cfg.d}, InitKind::zeros);
    emit(p + "ffn.w1", {cfg.d, cfg.ffn_dim}, InitKind::kaiming, cfg.d);
    emit(p + "ffn.b1", {cfg.ffn_dim}, InitKind::zeros);
    emit(p + "ffn.w2", {cfg.ffn_dim, cfg.d}, InitKind::kaiming, cfg.ffn_dim);
    emit(p + "ffn.b2", {cfg.d}, InitKind::zeros);
  }

  emit("recon.w", {cfg.d, cfg.patch_len}, InitKind::kaiming, cfg.d);
  emit("recon.b", {cfg.patch_len}, InitKind::zeros);
}

std::int64_t count_params(const ModelConfig& cfg) {
  std::int64_t total = 0;
  for_each_param(cfg, [&](const ParamSpec& spec) {
    std::int64_t n = 1;
    for (auto d : spec.shape) n *= d;
    total += n;
  });
  return total;
}

std::vector<std::int64_t> parse_dims(const std::string& s) {
  std::vector<std::int64_t> dims;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find('x', pos);
    if (next == std::string::npos) next = s.size();
    dims.push_back(std::strtoll(s.substr(pos, next - pos).c_str(), nullptr, 10));
    pos = next + 1;
  }
  if (dims.empty()) throw IoError("empty tensor shape string");
  return dims;
}

}  // namespace cceeg
