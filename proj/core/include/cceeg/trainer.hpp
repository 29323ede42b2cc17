#pragma once

#include "cceeg/model_config.hpp"
#include "cceeg/parameters.hpp"
#include "cceeg/sampleset.hpp"

#include <cstdint>
#include <filesystem>

namespace cceeg {

struct PretrainConfig {
  std::int64_t epochs = 5;
  std::int64_t batch_size = 16;
  double lr = 5e-4;
  double min_lr = 1e-5;
  std::int64_t cosine_cycle = 0;  // epochs; 0 means "use `epochs`"
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.05;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::int64_t checkpoint_every = 1;  // epochs between checkpoints
  std::filesystem::path out_dir;

  void validate() const;
};

struct PretrainResult {
  std::int64_t steps = 0;          // total optimizer steps taken (global)
  double final_loss = 0.0;         // loss of the last step
  std::filesystem::path last_checkpoint;
};

// Masked-patch reconstruction pretraining. Initializes parameters from
// cfg/seed (or restores them from `resume_from`, along with optimizer
// moments and step counters) and trains for the remaining epochs. All
// randomness (shuffling, mask choice, dropout) is derived from
// (seed, epoch, step, sample), so a resumed run replays the exact stream
// the original run would have seen; training state is float32 throughout,
// making checkpoint round-trips bit-exact.
//
// Writes `train_log.csv` (step,epoch,loss,lr,grad_norm) and per-epoch
// checkpoint directories `checkpoint_epoch<k>` under out_dir.
PretrainResult pretrain(const ModelConfig& cfg, const SampleSet& train,
                        const PretrainConfig& tcfg,
                        const std::filesystem::path* resume_from = nullptr);

// Helper shared with fine-tuning: a zeroed clone of a parameter set.
template <typename S>
ParameterSet<S> zeros_like(const ParameterSet<S>& p) {
  ParameterSet<S> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    out.add(p.names()[i], Tensor<S>::zeros(p.value(i).shape()));
  return out;
}

}  // namespace cceeg
