#pragma once

#include "cceeg/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace cceeg {

// Flags shared by every command; explicit flags override file values, the
// file overrides built-in defaults. An empty config_path falls back to the
// CCEEG_CONFIG environment variable, then to the defaults.
struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

RunConfig resolve_config(const GlobalOptions& g);

// Per-verb overrides for fine-tuning protocol flags.
struct FinetuneOverrides {
  std::optional<bool> frozen;
  std::optional<double> data_fraction;
  std::optional<std::string> checkpoint;
};

// Every command prints the master seed, writes its artifacts under
// cfg.out_dir, and returns a process exit code: 0 success. Failures are
// reported by throwing (ConfigError -> 2, NumericError -> 3, IoError -> 4,
// mapped by the CLI shell); verification commands return 3 directly when a
// check fails without being an exceptional condition.
int cmd_preprocess(const RunConfig& cfg, const std::filesystem::path& in_path,
                   const std::filesystem::path& out_path);
int cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_path);
int cmd_pretrain(const RunConfig& cfg, const std::filesystem::path* resume);
int cmd_finetune(const RunConfig& cfg, const FinetuneOverrides& ov);
int cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& data_path, const std::string& split_file);
int cmd_flops(const RunConfig& cfg, std::int64_t channels, double seconds);
// corrupt_family: "" for the real check; an op-family name deliberately
// corrupts that family's analytic gradient (negative control for the
// harness itself).
int cmd_gradcheck(const RunConfig& cfg, const std::string& corrupt_family);
int cmd_oracle(const RunConfig& cfg);

}  // namespace cceeg
