// Command-line front end. All substance lives in the core library
// (cceeg/commands.hpp); this file only parses flags and maps the error
// taxonomy onto process exit codes:
//   0 success | 2 configuration | 3 numeric/check failure | 4 file I/O
#include "CLI11.hpp"

#include "cceeg/commands.hpp"
#include "cceeg/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{
      "EEG representation-learning workbench: preprocessing, masked-patch "
      "pretraining, fine-tuning, and verification utilities"};
  app.require_subcommand(1);

  cceeg::GlobalOptions gopts;
  app.add_option("--config", gopts.config_path,
                 "key=value config file (default: $CCEEG_CONFIG, else built-in defaults)");
  app.add_option("--seed", gopts.seed, "master seed overriding the config file");
  app.add_option("--out-dir", gopts.out_dir, "artifact directory overriding the config file");
  app.add_option("--threads", gopts.threads, "worker threads overriding the config file");

  int rc = 0;

  auto* pre = app.add_subcommand(
      "preprocess", "filter, resample, segment, and normalize raw recordings");
  pre->fallthrough();
  std::string pre_in, pre_out;
  pre->add_option("--in", pre_in, "recording directory, or a directory of recording directories")
      ->required();
  pre->add_option("--out", pre_out, "output sample-set directory")->required();
  pre->callback([&] {
    rc = cceeg::cmd_preprocess(cceeg::resolve_config(gopts), pre_in, pre_out);
  });

  auto* synth = app.add_subcommand(
      "synth", "generate the synthetic band-power sample set described by synth.* keys");
  synth->fallthrough();
  std::string synth_out;
  synth->add_option("--out", synth_out, "output sample-set directory")->required();
  synth->callback([&] { rc = cceeg::cmd_synth(cceeg::resolve_config(gopts), synth_out); });

  auto* pret = app.add_subcommand(
      "pretrain", "masked-patch reconstruction pretraining on pretrain.data");
  pret->fallthrough();
  std::string resume_str;
  auto* resume_opt =
      pret->add_option("--resume", resume_str, "checkpoint directory to resume from");
  pret->callback([&] {
    const fs::path resume_path = resume_str;
    const fs::path* resume = resume_opt->count() ? &resume_path : nullptr;
    rc = cceeg::cmd_pretrain(cceeg::resolve_config(gopts), resume);
  });

  auto* fine = app.add_subcommand(
      "finetune", "supervised training on finetune.data from a pretrained checkpoint");
  fine->fallthrough();
  cceeg::FinetuneOverrides fov;
  std::string fine_ckpt;
  auto* fine_ckpt_opt = fine->add_option(
      "--checkpoint", fine_ckpt, "encoder checkpoint (overrides finetune.checkpoint)");
  bool fine_frozen = false;
  auto* fine_frozen_opt = fine->add_flag(
      "--frozen", fine_frozen, "freeze the encoder and train only the head (linear probing)");
  double fine_fraction = 1.0;
  auto* fine_fraction_opt = fine->add_option(
      "--data-fraction", fine_fraction, "seeded random fraction of the training split to use");
  fine->callback([&] {
    if (fine_ckpt_opt->count()) fov.checkpoint = fine_ckpt;
    if (fine_frozen_opt->count()) fov.frozen = fine_frozen;
    if (fine_fraction_opt->count()) fov.data_fraction = fine_fraction;
    rc = cceeg::cmd_finetune(cceeg::resolve_config(gopts), fov);
  });

  auto* eval = app.add_subcommand("evaluate", "run a checkpoint over a labeled sample set");
  eval->fallthrough();
  std::string eval_ckpt, eval_data, eval_split;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  eval->add_option("--data", eval_data, "labeled sample-set directory")->required();
  eval->add_option("--split", eval_split, "optional split file restricting the samples");
  eval->callback([&] {
    rc = cceeg::cmd_evaluate(cceeg::resolve_config(gopts), eval_ckpt, eval_data, eval_split);
  });

  auto* flops = app.add_subcommand(
      "flops", "analytic FLOP/parameter accounting for every attention variant");
  flops->fallthrough();
  std::int64_t flops_channels = 16;
  double flops_seconds = 10.0;
  flops->add_option("--channels", flops_channels, "electrode count (default 16)");
  flops->add_option("--seconds", flops_seconds, "input duration in seconds (default 10)");
  flops->callback([&] {
    rc = cceeg::cmd_flops(cceeg::resolve_config(gopts), flops_channels, flops_seconds);
  });

  auto* grad = app.add_subcommand(
      "gradcheck", "finite-difference check of every parameter family's gradient");
  grad->fallthrough();
  std::string corrupt;
  grad->add_option("--corrupt", corrupt,
                   "deliberately corrupt one op family's analytic gradient "
                   "(negative control for the check itself)");
  grad->callback([&] { rc = cceeg::cmd_gradcheck(cceeg::resolve_config(gopts), corrupt); });

  auto* oracle = app.add_subcommand(
      "oracle", "compare fast paths against naive reference implementations");
  oracle->fallthrough();
  oracle->callback([&] { rc = cceeg::cmd_oracle(cceeg::resolve_config(gopts)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help; anything else is a usage problem.
    return code == 0 ? 0 : 2;
  } catch (const cceeg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cceeg::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const cceeg::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
