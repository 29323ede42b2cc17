#include <doctest.h>

#include "cceeg/errors.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/synthetic.hpp"
#include "cceeg/trainer.hpp"
#include "cceeg/trainlog.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

using cceeg::ConfigError;
using cceeg::generate_synthetic;
using cceeg::ModelConfig;
using cceeg::NumericError;
using cceeg::pretrain;
using cceeg::PretrainConfig;
using cceeg::PretrainResult;
using cceeg::SampleSet;
using cceeg::SyntheticSpec;
using cceeg::TrainLog;
using cceeg::TrainLogRow;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.patch_len = 16;
  cfg.d = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.n_spatial_heads = 1;
  cfg.ffn_dim = 16;
  cfg.dropout = 0.1;
  cfg.conv_channels = {2, 2, 2};
  cfg.conv_kernel = {5, 3, 3};
  cfg.conv_stride = {4, 1, 1};
  cfg.conv_pad = {2, 1, 1};
  cfg.gn_groups = 2;
  cfg.acpe_kernel_spatial = 3;
  cfg.acpe_kernel_temporal = 1;
  cfg.cpe_kernel = 3;
  cfg.ape_max_channels = 8;
  cfg.ape_max_patches = 8;
  cfg.axial_switch_layer = 1;
  return cfg;
}

SampleSet band_data(std::int64_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_samples = n;
  spec.n_channels = 4;
  spec.duration_s = 0.4;  // 80 points -> 5 patches of 16 per channel
  spec.sample_rate = 200.0;
  spec.class_count = 1;
  spec.bands = {{{0, 1}, 10.0, 14.0, 1.0}};
  spec.noise_std = 0.3;
  spec.seed = seed;
  return generate_synthetic(spec);
}

PretrainConfig quick_config(const fs::path& out_dir) {
  PretrainConfig t;
  t.epochs = 2;
  t.batch_size = 16;
  t.lr = 1e-3;
  t.min_lr = 1e-5;
  t.seed = 11;
  t.threads = 1;
  t.checkpoint_every = 1;
  t.out_dir = out_dir;
  return t;
}

}  // namespace

TEST_CASE("pretraining reduces the masked reconstruction loss") {
  TempDir dir("cceeg_test_descent");
  const SampleSet data = band_data(128, 21);
  PretrainConfig t = quick_config(dir.path);
  t.epochs = 4;  // 32 steps

  const PretrainResult res = pretrain(tiny_config(), data, t, nullptr);
  CHECK(res.steps == 32);

  const auto rows = TrainLog::read((dir.path / "train_log.csv").string());
  REQUIRE(rows.size() == 32);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += rows[static_cast<std::size_t>(i)].loss;
    tail += rows[rows.size() - 1 - static_cast<std::size_t>(i)].loss;
  }
  CAPTURE(head / 5.0);
  CAPTURE(tail / 5.0);
  CHECK(tail < head);
  CHECK(std::isfinite(res.final_loss));
  CHECK(fs::exists(res.last_checkpoint / "manifest.txt"));
}

TEST_CASE("the same master seed reproduces the loss log bit for bit") {
  TempDir a("cceeg_test_det_a"), b("cceeg_test_det_b");
  const SampleSet data = band_data(48, 4);
  pretrain(tiny_config(), data, quick_config(a.path), nullptr);
  pretrain(tiny_config(), data, quick_config(b.path), nullptr);

  const auto ra = TrainLog::read((a.path / "train_log.csv").string());
  const auto rb = TrainLog::read((b.path / "train_log.csv").string());
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].loss == rb[i].loss);
    CHECK(ra[i].lr == rb[i].lr);
    CHECK(ra[i].grad_norm == rb[i].grad_norm);
  }
}

TEST_CASE("a different seed changes the trajectory") {
  TempDir a("cceeg_test_seed_a"), b("cceeg_test_seed_b");
  const SampleSet data = band_data(48, 4);
  PretrainConfig tb = quick_config(b.path);
  tb.seed = 12;
  pretrain(tiny_config(), data, quick_config(a.path), nullptr);
  pretrain(tiny_config(), data, tb, nullptr);
  const auto ra = TrainLog::read((a.path / "train_log.csv").string());
  const auto rb = TrainLog::read((b.path / "train_log.csv").string());
  CHECK(ra[0].loss != rb[0].loss);
}

TEST_CASE("resuming from a checkpoint replays the interrupted run exactly") {
  TempDir full("cceeg_test_res_full"), resumed("cceeg_test_res_part");
  const SampleSet data = band_data(48, 4);

  // Pin the schedule length: an interrupted run keeps the full run's cosine
  // cycle, while cosine_cycle=0 would re-derive it from each leg's epochs.
  PretrainConfig whole = quick_config(full.path);
  whole.cosine_cycle = whole.epochs;
  pretrain(tiny_config(), data, whole, nullptr);

  PretrainConfig first = quick_config(resumed.path);
  first.cosine_cycle = whole.cosine_cycle;
  first.epochs = 1;
  pretrain(tiny_config(), data, first, nullptr);
  const fs::path ckpt = resumed.path / "checkpoint_epoch0";
  REQUIRE(fs::exists(ckpt / "manifest.txt"));

  PretrainConfig second = quick_config(resumed.path);
  second.cosine_cycle = whole.cosine_cycle;
  const PretrainResult res = pretrain(tiny_config(), data, second, &ckpt);

  const auto ra = TrainLog::read((full.path / "train_log.csv").string());
  const auto rb = TrainLog::read((resumed.path / "train_log.csv").string());
  REQUIRE(ra.size() == rb.size());
  CHECK(res.steps == static_cast<std::int64_t>(ra.size()));
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].step == rb[i].step);
    CHECK(ra[i].loss == rb[i].loss);
    CHECK(ra[i].grad_norm == rb[i].grad_norm);
  }
}

TEST_CASE("resume guards: wrong seed and exhausted epochs are refused") {
  TempDir dir("cceeg_test_res_guard");
  const SampleSet data = band_data(32, 4);
  PretrainConfig t = quick_config(dir.path);
  t.epochs = 1;
  pretrain(tiny_config(), data, t, nullptr);
  const fs::path ckpt = dir.path / "checkpoint_epoch0";

  PretrainConfig other_seed = t;
  other_seed.epochs = 2;
  other_seed.seed = 999;
  CHECK_THROWS_AS(pretrain(tiny_config(), data, other_seed, &ckpt), ConfigError);

  PretrainConfig done = t;  // epochs=1 already covered by the checkpoint
  CHECK_THROWS_AS(pretrain(tiny_config(), data, done, &ckpt), ConfigError);
}

TEST_CASE("checkpoints follow the requested cadence") {
  TempDir dir("cceeg_test_cadence");
  const SampleSet data = band_data(32, 4);
  PretrainConfig t = quick_config(dir.path);
  t.epochs = 4;
  t.checkpoint_every = 2;
  pretrain(tiny_config(), data, t, nullptr);
  CHECK_FALSE(fs::exists(dir.path / "checkpoint_epoch0"));
  CHECK(fs::exists(dir.path / "checkpoint_epoch1"));
  CHECK_FALSE(fs::exists(dir.path / "checkpoint_epoch2"));
  CHECK(fs::exists(dir.path / "checkpoint_epoch3"));
}

TEST_CASE("an exploding configuration raises a numeric error instead of logging garbage") {
  TempDir dir("cceeg_test_explode");
  const SampleSet data = band_data(32, 4);
  PretrainConfig t = quick_config(dir.path);
  t.lr = 1e20;  // one step puts the parameters far outside float32 range
  t.epochs = 2;
  CHECK_THROWS_AS(pretrain(tiny_config(), data, t, nullptr), NumericError);
}

TEST_CASE("invalid training configurations are rejected before any work") {
  PretrainConfig t = quick_config("/tmp/unused");
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = quick_config("/tmp/unused");
  t.lr = -1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = quick_config("/tmp/unused");
  t.min_lr = 1.0;  // above lr
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = quick_config("/tmp/unused");
  t.out_dir.clear();
  CHECK_THROWS_AS(t.validate(), ConfigError);
}
