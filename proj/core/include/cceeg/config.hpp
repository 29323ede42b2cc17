#pragma once

#include "cceeg/finetune.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/preprocess.hpp"
#include "cceeg/synthetic.hpp"
#include "cceeg/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace cceeg {

// Every tunable for the whole pipeline, loaded from one flat key=value file
// ('#' comments, blank lines ignored). Keys are namespaced by section:
// model.*, preprocess.*, pretrain.*, finetune.*, synth.*, plus the globals
// seed / out_dir / threads. Unknown keys are rejected before any work starts.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 1;

  ModelConfig model;
  PreprocessConfig preprocess;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  SyntheticSpec synth;

  // Data locations consumed by the commands (relative paths resolve against
  // the working directory).
  std::string pretrain_data;        // sample-set dir for pretraining
  std::string finetune_data;        // labeled sample-set dir for fine-tuning
  std::string finetune_checkpoint;  // encoder checkpoint ("" = train from scratch)
  std::string train_split;          // optional split files ("" = seeded 60/20/20)
  std::string val_split;
  std::string test_split;

  // Checks global fields and cross-field consistency that the per-module
  // validators cannot see; the per-module validate() calls run when the
  // relevant command starts. Throws ConfigError.
  void validate() const;
};

// The built-in defaults: reference architecture, standard cleaning chain,
// and a small band-limited synthetic corpus recipe.
RunConfig default_run_config();

// Parse `file` over the defaults. Throws ConfigError on unknown keys or bad
// values, IoError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& file);

// Write the complete key vocabulary with current values; the emitted file
// reloads to an equivalent config and serves as documentation.
void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

}  // namespace cceeg
