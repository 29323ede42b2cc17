#pragma once

#include "cceeg/metrics.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/parameters.hpp"
#include "cceeg/sampleset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace cceeg {

enum class TaskKind { binary, multiclass, regression };

std::string to_string(TaskKind k);
TaskKind task_from_string(const std::string& s);

struct FinetuneConfig {
  TaskKind task = TaskKind::binary;
  std::int64_t n_classes = 2;  // multiclass only
  std::int64_t epochs = 5;
  std::int64_t batch_size = 16;
  double lr = 1e-4;
  double min_lr = 1e-6;
  std::int64_t cosine_cycle = 0;  // 0 -> epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.05;
  double clip_norm = 1.0;
  double label_smoothing = 0.1;   // multiclass cross-entropy
  std::int64_t head_hidden = 0;   // 0 -> model width d
  bool frozen = false;            // freeze encoder, train the head on cached features
  double data_fraction = 1.0;     // seeded random fraction of the training split
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;

  void validate() const;
};

struct FinetuneResult {
  std::int64_t best_epoch = 0;       // 1-based epoch whose val metric was best
  double best_val_metric = 0.0;      // monitored metric (auroc / kappa / r2)
  std::string monitor;               // name of the monitored metric
  EvalReport test_report;            // best model evaluated on the test split
  std::filesystem::path best_checkpoint;
  std::filesystem::path predictions_path;  // per-sample test predictions (TSV)
};

// Supervised training on top of the encoder. `encoder` holds the starting
// encoder parameters (pretrained or fresh); the head is always freshly
// initialized from the seed. Selects the best epoch by the task's monitor
// metric on `val`, then reports that model on `test`.
FinetuneResult finetune(const ModelConfig& cfg, const ParameterSet<float>& encoder,
                        const SampleSet& train, const SampleSet& val, const SampleSet& test,
                        const FinetuneConfig& fcfg);

// Evaluate a parameter set that already contains head.* tensors on a labeled
// sample set. Writes per-sample predictions as TSV when predictions_out is
// given. Head geometry is recovered from the tensor shapes.
EvalReport evaluate_model(const ModelConfig& cfg, const ParameterSet<float>& params,
                          const SampleSet& data, TaskKind task,
                          const std::filesystem::path* predictions_out);

}  // namespace cceeg
