#include <doctest.h>

#include "cceeg/commands.hpp"
#include "cceeg/config.hpp"
#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using cceeg::ConfigError;
using cceeg::default_run_config;
using cceeg::GlobalOptions;
using cceeg::load_run_config;
using cceeg::resolve_config;
using cceeg::RunConfig;
using cceeg::save_run_config;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("cceeg_test_" + name);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// A config file line on top of the defaults.
RunConfig load_patched(const std::string& extra_lines) {
  const fs::path file = temp_file("patched.cfg");
  const fs::path base = temp_file("base.cfg");
  save_run_config(default_run_config(), base);
  std::ifstream in(base);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  write_text(file, text + "\n" + extra_lines + "\n");
  RunConfig cfg = load_run_config(file);
  fs::remove(file);
  fs::remove(base);
  return cfg;
}

}  // namespace

TEST_CASE("the default configuration round-trips through its file form") {
  const RunConfig def = default_run_config();
  const fs::path file = temp_file("roundtrip.cfg");
  save_run_config(def, file);
  const RunConfig back = load_run_config(file);
  fs::remove(file);

  CHECK(back.seed == def.seed);
  CHECK(back.out_dir == def.out_dir);
  CHECK(back.threads == def.threads);
  CHECK(back.model.d == def.model.d);
  CHECK(back.model.n_layers == def.model.n_layers);
  CHECK(back.model.dropout == def.model.dropout);
  CHECK(back.preprocess.target_rate_hz == def.preprocess.target_rate_hz);
  CHECK(back.pretrain.lr == def.pretrain.lr);
  CHECK(back.finetune.label_smoothing == def.finetune.label_smoothing);
  CHECK(back.synth.bands.size() == def.synth.bands.size());
  REQUIRE(back.synth.bands.size() == 2);
  CHECK(back.synth.bands[0].freq_lo == def.synth.bands[0].freq_lo);
  CHECK(back.synth.bands[1].channels == def.synth.bands[1].channels);
}

TEST_CASE("whitespace around keys, values, and comments is tolerated") {
  const fs::path file = temp_file("spacing.cfg");
  write_text(file,
             "# comment\n"
             "  seed = 99 \n"
             "\tthreads\t=\t3\n"
             "   # indented comment\n"
             "out_dir = /tmp/spaced out dir\n");
  const RunConfig cfg = load_run_config(file);
  fs::remove(file);
  CHECK(cfg.seed == 99);
  CHECK(cfg.threads == 3);
  CHECK(cfg.out_dir == "/tmp/spaced out dir");
}

TEST_CASE("unknown keys are rejected loudly") {
  const fs::path file = temp_file("unknown.cfg");
  write_text(file, "seed=1\nmodle.d=200\n");
  CHECK_THROWS_AS(load_run_config(file), ConfigError);
  write_text(file, "synth.band7.lo=4\n");  // band index beyond synth.classes
  CHECK_THROWS_AS(load_run_config(file), ConfigError);
  fs::remove(file);
}

TEST_CASE("malformed and inconsistent values are configuration errors") {
  CHECK_THROWS_AS(load_patched("threads=0"), ConfigError);
  CHECK_THROWS_AS(load_patched("seed=abc"), ConfigError);
  CHECK_THROWS_AS(load_patched("model.dropout=1.5"), ConfigError);
  CHECK_THROWS_AS(load_patched("model.heads=7"), ConfigError);  // does not divide d=200
  CHECK_THROWS_AS(load_patched("model.spatial_heads=9"), ConfigError);
  CHECK_THROWS_AS(load_patched("preprocess.bandpass_lo=80\npreprocess.bandpass_hi=10"),
                  ConfigError);
  CHECK_THROWS_AS(load_patched("synth.band0.lo=150"), ConfigError);  // above Nyquist
  CHECK_THROWS_AS(load_patched("synth.band0.channels=0,99"), ConfigError);
  CHECK_THROWS_AS(load_patched("pretrain.lr=0"), ConfigError);
  CHECK_THROWS_AS(load_patched("finetune.data_fraction=0"), ConfigError);
  CHECK_THROWS_AS(load_patched("finetune.task=segmentation"), ConfigError);
}

TEST_CASE("valid overrides change exactly what they name") {
  const RunConfig cfg = load_patched(
      "model.attention=full\nmodel.pos_enc=cpe\nmodel.energy=log_power\n"
      "synth.classes=3\nsynth.band2.channels=4,5\nsynth.band2.lo=30\nsynth.band2.hi=40\n"
      "finetune.frozen=true\n");
  CHECK(cfg.model.attention == cceeg::AttentionKind::full);
  CHECK(cfg.model.pos_enc == cceeg::PosEncKind::cpe);
  CHECK(cfg.model.energy == cceeg::EnergyKind::log_power);
  REQUIRE(cfg.synth.bands.size() == 3);
  CHECK(cfg.synth.bands[2].freq_lo == 30.0);
  CHECK(cfg.synth.bands[2].channels == std::vector<std::int64_t>{4, 5});
  CHECK(cfg.finetune.frozen);
  // Untouched keys keep their defaults.
  CHECK(cfg.model.d == 200);
  CHECK(cfg.pretrain.lr == default_run_config().pretrain.lr);
}

TEST_CASE("config resolution: flags beat the file, the file beats the environment default") {
  const fs::path file = temp_file("resolve.cfg");
  write_text(file, "seed=10\nthreads=2\nout_dir=/tmp/from_file\n");
  const fs::path env_file = temp_file("resolve_env.cfg");
  write_text(env_file, "seed=20\n");

  GlobalOptions g;
  g.config_path = file.string();
  RunConfig cfg = resolve_config(g);
  CHECK(cfg.seed == 10);
  CHECK(cfg.out_dir == "/tmp/from_file");

  g.seed = 77;
  g.out_dir = "/tmp/from_flag";
  g.threads = 4;
  cfg = resolve_config(g);
  CHECK(cfg.seed == 77);
  CHECK(cfg.out_dir == "/tmp/from_flag");
  CHECK(cfg.threads == 4);

  setenv("CCEEG_CONFIG", env_file.string().c_str(), 1);
  cfg = resolve_config(GlobalOptions{});
  CHECK(cfg.seed == 20);
  // An explicit path still wins over the environment.
  GlobalOptions g2;
  g2.config_path = file.string();
  CHECK(resolve_config(g2).seed == 10);
  unsetenv("CCEEG_CONFIG");
  cfg = resolve_config(GlobalOptions{});
  CHECK(cfg.seed == default_run_config().seed);

  fs::remove(file);
  fs::remove(env_file);
}

TEST_CASE("flag overrides are validated like any other value") {
  GlobalOptions g;
  g.threads = 0;
  CHECK_THROWS_AS(resolve_config(g), ConfigError);
}
