#include <doctest.h>

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/parameters.hpp"
#include "cceeg/recording.hpp"
#include "cceeg/rng.hpp"
#include "cceeg/sampleset.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

using cceeg::EEGRecording;
using cceeg::init_parameters;
using cceeg::IoError;
using cceeg::KvFile;
using cceeg::LabelKind;
using cceeg::load_checkpoint;
using cceeg::load_recording;
using cceeg::load_sampleset;
using cceeg::load_split;
using cceeg::ModelConfig;
using cceeg::ParameterSet;
using cceeg::Rng;
using cceeg::SampleSet;
using cceeg::save_checkpoint;
using cceeg::save_recording;
using cceeg::save_sampleset;
using cceeg::save_split;
using cceeg::subset;
using cceeg::Tensor;

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
  cfg.dropout = 0.0;
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

}  // namespace

TEST_CASE("recordings round-trip exactly, metadata included") {
  TempDir dir("cceeg_test_rec");
  EEGRecording rec;
  rec.channels = 3;
  rec.timepoints = 50;
  rec.sample_rate = 256.0;
  rec.unit_scale = 1e-6;
  rec.channel_names = {"Fp1", "Cz", "O2"};
  Rng rng(3);
  rec.data.resize(150);
  for (float& v : rec.data) v = static_cast<float>(rng.normal());

  save_recording(rec, dir.path);
  const EEGRecording back = load_recording(dir.path);
  CHECK(back.channels == 3);
  CHECK(back.timepoints == 50);
  CHECK(back.sample_rate == 256.0);
  CHECK(back.unit_scale == 1e-6);
  CHECK(back.channel_names == rec.channel_names);
  CHECK(back.data == rec.data);
}

TEST_CASE("a recording directory with corrupt metadata is an I/O error") {
  TempDir dir("cceeg_test_rec_bad");
  CHECK_THROWS_AS(load_recording(dir.path), IoError);  // no manifest at all

  EEGRecording rec;
  rec.channels = 1;
  rec.timepoints = 4;
  rec.sample_rate = 100.0;
  rec.unit_scale = 1.0;
  rec.data = {1, 2, 3, 4};
  save_recording(rec, dir.path);
  // Truncate the payload behind the manifest's back.
  std::filesystem::resize_file(dir.path / "data.f32", 8);
  CHECK_THROWS_AS(load_recording(dir.path), IoError);
}

TEST_CASE("sample sets round-trip for every label kind") {
  Rng rng(5);
  SampleSet set;
  set.n = 4;
  set.channels = 2;
  set.timepoints = 6;
  set.sample_rate = 200.0;
  set.data.resize(48);
  for (float& v : set.data) v = static_cast<float>(rng.normal());

  SUBCASE("unlabeled") {
    TempDir dir("cceeg_test_set_none");
    save_sampleset(set, dir.path);
    CHECK_FALSE(fs::exists(dir.path / "labels.txt"));
    const SampleSet back = load_sampleset(dir.path);
    CHECK(back.label_kind == LabelKind::none);
    CHECK(back.data == set.data);
    CHECK(back.sample_rate == 200.0);
  }
  SUBCASE("integer labels") {
    TempDir dir("cceeg_test_set_int");
    set.label_kind = LabelKind::integer;
    set.labels = {0, 1, 1, 0};
    save_sampleset(set, dir.path);
    const SampleSet back = load_sampleset(dir.path);
    CHECK(back.label_kind == LabelKind::integer);
    CHECK(back.labels == set.labels);
  }
  SUBCASE("real labels") {
    TempDir dir("cceeg_test_set_real");
    set.label_kind = LabelKind::real;
    set.labels = {0.25, -1.5, 3.75, 0.125};
    save_sampleset(set, dir.path);
    const SampleSet back = load_sampleset(dir.path);
    CHECK(back.label_kind == LabelKind::real);
    CHECK(back.labels == set.labels);
  }
}

TEST_CASE("subsets copy rows and labels by index") {
  SampleSet set;
  set.n = 5;
  set.channels = 1;
  set.timepoints = 2;
  set.sample_rate = 1.0;
  set.label_kind = LabelKind::integer;
  set.data = {0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
  set.labels = {10, 11, 12, 13, 14};

  const SampleSet sub = subset(set, {4, 1});
  CHECK(sub.n == 2);
  CHECK(sub.data == std::vector<float>{4, 4, 1, 1});
  CHECK(sub.labels == std::vector<double>{14, 11});
}

TEST_CASE("split files are validated on load") {
  TempDir dir("cceeg_test_split");
  const fs::path file = dir.path / "train.txt";
  save_split({0, 2, 4}, file);
  CHECK(load_split(file, 5) == std::vector<std::int64_t>{0, 2, 4});
  CHECK_THROWS_AS(load_split(file, 4), IoError);  // 4 is out of range now

  std::ofstream(file) << "1\n1\n";
  CHECK_THROWS_AS(load_split(file, 5), IoError);  // duplicate
  std::ofstream(file) << "banana\n";
  CHECK_THROWS_AS(load_split(file, 5), IoError);  // not an index
  CHECK_THROWS_AS(load_split(dir.path / "absent.txt", 5), IoError);
}

TEST_CASE("checkpoints restore every tensor bit for bit") {
  TempDir dir("cceeg_test_ckpt");
  const ModelConfig cfg = tiny_config();
  ParameterSet<float> params = init_parameters<float>(cfg, 99);

  KvFile extra;
  extra.set_int("train.step", 123);
  save_checkpoint(dir.path, cfg, params, extra);

  KvFile manifest;
  const ParameterSet<float> back = load_checkpoint<float>(dir.path, cfg, &manifest);
  CHECK(manifest.get_int("train.step") == 123);
  REQUIRE(back.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<float>& a = params.value(i);
    const Tensor<float>& b = back.get(params.names()[i]);
    REQUIRE(a.numel() == b.numel());
    for (std::int64_t j = 0; j < a.numel(); ++j) CHECK(a[j] == b[j]);
  }
}

TEST_CASE("checkpoints carry extra tensors such as optimizer moments") {
  TempDir dir("cceeg_test_ckpt_opt");
  const ModelConfig cfg = tiny_config();
  ParameterSet<float> params = init_parameters<float>(cfg, 7);

  ParameterSet<float> with_opt;
  for (std::size_t i = 0; i < params.size(); ++i)
    with_opt.add(params.names()[i], params.value(i));
  Tensor<float> m({3});
  m[0] = 0.5f;
  m[1] = -0.25f;
  m[2] = 4.0f;
  with_opt.add("opt.m.blk0.ffn.b1", m);

  save_checkpoint(dir.path, cfg, with_opt, KvFile{});
  const ParameterSet<float> back = load_checkpoint<float>(dir.path, cfg, nullptr);
  REQUIRE(back.has("opt.m.blk0.ffn.b1"));
  const Tensor<float>& bm = back.get("opt.m.blk0.ffn.b1");
  CHECK(bm[0] == 0.5f);
  CHECK(bm[1] == -0.25f);
  CHECK(bm[2] == 4.0f);
}

TEST_CASE("loading a checkpoint against a different architecture is refused") {
  TempDir dir("cceeg_test_ckpt_cfg");
  const ModelConfig cfg = tiny_config();
  save_checkpoint(dir.path, cfg, init_parameters<float>(cfg, 1), KvFile{});

  ModelConfig other = cfg;
  other.n_layers = 3;
  CHECK_THROWS_AS(load_checkpoint<float>(dir.path, other, nullptr), IoError);

  ModelConfig other2 = cfg;
  other2.dropout = 0.2;  // even training-only knobs must match the snapshot
  CHECK_THROWS_AS(load_checkpoint<float>(dir.path, other2, nullptr), IoError);
}

TEST_CASE("key=value files preserve doubles exactly") {
  KvFile kv;
  kv.set_double("a", 0.1);
  kv.set_double("b", 1.0 / 3.0);
  kv.set_double("c", 1e-300);
  kv.set_double("d", -12345.6789);
  const fs::path file = fs::temp_directory_path() / "cceeg_test_kv.txt";
  kv.save(file);
  const KvFile back = KvFile::load(file);
  fs::remove(file);
  CHECK(back.get_double("a") == 0.1);
  CHECK(back.get_double("b") == 1.0 / 3.0);
  CHECK(back.get_double("c") == 1e-300);
  CHECK(back.get_double("d") == -12345.6789);
}
