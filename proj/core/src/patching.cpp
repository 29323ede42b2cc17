#include "cceeg/patching.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/rng.hpp"

#include <cmath>
#include <numeric>

namespace cceeg {

PatchGrid make_patch_grid(std::int64_t channels, std::int64_t timepoints,
                          std::int64_t patch_len) {
  if (channels < 1) throw ConfigError("patch grid: channels must be >= 1");
  if (patch_len < 2) throw ConfigError("patch grid: patch_len must be >= 2");
  if (timepoints < patch_len || timepoints % patch_len != 0)
    throw ConfigError("patch grid: timepoints (" + std::to_string(timepoints) +
                      ") must be a positive multiple of patch_len (" +
                      std::to_string(patch_len) + ")");
  return PatchGrid{channels, timepoints / patch_len, patch_len};
}

std::vector<float> to_patches(const float* sample, const PatchGrid& grid) {
  const std::int64_t C = grid.channels, n = grid.per_channel, t = grid.patch_len;
  std::vector<float> out(static_cast<std::size_t>(C * n * t));
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t k = 0; k < t; ++k)
        out[static_cast<std::size_t>((c * n + j) * t + k)] = sample[c * (n * t) + j * t + k];
  return out;
}

std::vector<std::uint8_t> random_mask(std::int64_t n_patches, double ratio, std::uint64_t seed) {
  if (n_patches < 1) throw ConfigError("random_mask: need at least one patch");
  if (!(ratio >= 0.0) || !(ratio <= 1.0)) throw ConfigError("random_mask: ratio outside [0,1]");
  const auto m = static_cast<std::int64_t>(std::llround(ratio * static_cast<double>(n_patches)));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n_patches));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first m entries become the masked set.
  for (std::int64_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::int64_t>(
                           rng.below(static_cast<std::uint64_t>(n_patches - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_patches), 0);
  for (std::int64_t i = 0; i < m; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
  return mask;
}

void apply_mask(std::vector<float>& patches, const PatchGrid& grid,
                const std::vector<std::uint8_t>& mask, const std::vector<float>* token) {
  const std::int64_t N = grid.total(), t = grid.patch_len;
  if (static_cast<std::int64_t>(mask.size()) != N)
    throw ConfigError("apply_mask: mask size does not match patch count");
  if (static_cast<std::int64_t>(patches.size()) != N * t)
    throw ConfigError("apply_mask: patch buffer size mismatch");
  if (token && static_cast<std::int64_t>(token->size()) != t)
    throw ConfigError("apply_mask: token length mismatch");
  for (std::int64_t r = 0; r < N; ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    for (std::int64_t k = 0; k < t; ++k)
      patches[static_cast<std::size_t>(r * t + k)] = token ? (*token)[static_cast<std::size_t>(k)] : 0.0f;
  }
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> masked_index_sets(
    const std::vector<std::uint8_t>& mask) {
  std::vector<std::int64_t> masked, visible;
  for (std::size_t i = 0; i < mask.size(); ++i)
    (mask[i] ? masked : visible).push_back(static_cast<std::int64_t>(i));
  return {masked, visible};
}

}  // namespace cceeg
