#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cceeg {

// Layout of a sample cut into per-channel time patches: `channels` rows of
// `per_channel` patches, each `patch_len` points. Patch (c, j) maps to flat
// row c * per_channel + j.
struct PatchGrid {
  std::int64_t channels = 0;
  std::int64_t per_channel = 0;
  std::int64_t patch_len = 0;
  std::int64_t total() const { return channels * per_channel; }
};

// Errors unless timepoints divides evenly into patches.
PatchGrid make_patch_grid(std::int64_t channels, std::int64_t timepoints, std::int64_t patch_len);

// Rearrange one [C, T] sample into the [C*n, t] patch matrix (pure copy; the
// flat row order is channel-major).
std::vector<float> to_patches(const float* sample, const PatchGrid& grid);

// Mask with exactly round(ratio * n_patches) entries set, chosen uniformly
// without replacement; deterministic in seed.
std::vector<std::uint8_t> random_mask(std::int64_t n_patches, double ratio, std::uint64_t seed);

// Overwrite masked rows with `token` (patch_len values) or zeros when token
// is null.
void apply_mask(std::vector<float>& patches, const PatchGrid& grid,
                const std::vector<std::uint8_t>& mask, const std::vector<float>* token);

// (masked indices, visible indices) partition of [0, mask.size()).
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> masked_index_sets(
    const std::vector<std::uint8_t>& mask);

}  // namespace cceeg
