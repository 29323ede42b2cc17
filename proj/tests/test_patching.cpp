#include <doctest.h>

#include "cceeg/errors.hpp"
#include "cceeg/patching.hpp"
#include "cceeg/sampleset.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

using cceeg::apply_mask;
using cceeg::ConfigError;
using cceeg::make_patch_grid;
using cceeg::masked_index_sets;
using cceeg::PatchGrid;
using cceeg::random_mask;
using cceeg::to_patches;

TEST_CASE("19 channels x 30 s at 200 Hz yield exactly 570 patches of 200 samples") {
  const PatchGrid grid = make_patch_grid(19, 30 * 200, 200);
  CHECK(grid.channels == 19);
  CHECK(grid.per_channel == 30);
  CHECK(grid.patch_len == 200);
  CHECK(grid.total() == 570);
}

TEST_CASE("patch grid rejects lengths that do not divide the recording evenly") {
  CHECK_THROWS_AS(make_patch_grid(19, 6001, 200), ConfigError);
  CHECK_THROWS_AS(make_patch_grid(1, 199, 200), ConfigError);
  CHECK_THROWS_AS(make_patch_grid(0, 6000, 200), ConfigError);
}

TEST_CASE("patch layout is channel-major and preserves sample content") {
  const std::int64_t C = 3, T = 8, t = 4;
  std::vector<float> sample(static_cast<std::size_t>(C * T));
  for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = static_cast<float>(i);

  const PatchGrid grid = make_patch_grid(C, T, t);
  CHECK(grid.per_channel == 2);
  const std::vector<float> patches = to_patches(sample.data(), grid);
  REQUIRE(static_cast<std::int64_t>(patches.size()) == grid.total() * t);

  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t k = 0; k < grid.per_channel; ++k)
      for (std::int64_t j = 0; j < t; ++j) {
        const std::int64_t row = c * grid.per_channel + k;
        CHECK(patches[static_cast<std::size_t>(row * t + j)] ==
              sample[static_cast<std::size_t>(c * T + k * t + j)]);
      }
}

TEST_CASE("random masks hit the requested count exactly and are seed-deterministic") {
  const auto m = random_mask(570, 0.5, 42);
  REQUIRE(static_cast<std::int64_t>(m.size()) == 570);
  std::int64_t on = 0;
  for (const auto v : m) {
    CHECK((v == 0 || v == 1));
    on += v;
  }
  CHECK(on == 285);

  // round(0.4 * 10) = 4; round(0.35 * 10) = 4 as well (round-half-away).
  std::int64_t on10 = 0;
  for (const auto v : random_mask(10, 0.4, 7)) on10 += v;
  CHECK(on10 == 4);

  CHECK(random_mask(100, 0.5, 9) == random_mask(100, 0.5, 9));
  bool any_difference = false;
  for (std::uint64_t s = 1; s <= 4 && !any_difference; ++s)
    any_difference = random_mask(100, 0.5, 9) != random_mask(100, 0.5, 9 + s);
  CHECK(any_difference);
}

TEST_CASE("mask application overwrites exactly the masked rows") {
  const PatchGrid grid = make_patch_grid(2, 8, 4);
  std::vector<float> patches(static_cast<std::size_t>(grid.total() * grid.patch_len), 5.0f);
  const std::vector<std::uint8_t> mask = {1, 0, 0, 1};

  SUBCASE("zero token") {
    apply_mask(patches, grid, mask, nullptr);
    for (std::int64_t r = 0; r < grid.total(); ++r)
      for (std::int64_t j = 0; j < grid.patch_len; ++j) {
        const float want = mask[static_cast<std::size_t>(r)] ? 0.0f : 5.0f;
        CHECK(patches[static_cast<std::size_t>(r * grid.patch_len + j)] == want);
      }
  }

  SUBCASE("learned token values") {
    const std::vector<float> token = {1.0f, 2.0f, 3.0f, 4.0f};
    apply_mask(patches, grid, mask, &token);
    for (std::int64_t r = 0; r < grid.total(); ++r)
      for (std::int64_t j = 0; j < grid.patch_len; ++j) {
        const float want = mask[static_cast<std::size_t>(r)]
                               ? token[static_cast<std::size_t>(j)]
                               : 5.0f;
        CHECK(patches[static_cast<std::size_t>(r * grid.patch_len + j)] == want);
      }
  }
}

TEST_CASE("masked and visible index sets partition the grid") {
  const auto mask = random_mask(37, 0.3, 11);
  const auto [masked, visible] = masked_index_sets(mask);
  CHECK(masked.size() + visible.size() == 37);
  std::set<std::int64_t> all(masked.begin(), masked.end());
  all.insert(visible.begin(), visible.end());
  CHECK(all.size() == 37);
  for (const auto i : masked) CHECK(mask[static_cast<std::size_t>(i)] == 1);
  for (const auto i : visible) CHECK(mask[static_cast<std::size_t>(i)] == 0);
}
