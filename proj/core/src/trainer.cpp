#include "cceeg/trainer.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/graph.hpp"
#include "cceeg/model.hpp"
#include "cceeg/optim.hpp"
#include "cceeg/patching.hpp"
#include "cceeg/trainlog.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "cceeg/batching.hpp"

namespace cceeg {

void PretrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("pretrain: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("pretrain: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("pretrain: lr must be > 0");
  if (min_lr < 0.0 || min_lr > lr) throw ConfigError("pretrain: min_lr must be in [0, lr]");
  if (cosine_cycle < 0) throw ConfigError("pretrain: cosine_cycle must be >= 0");
  if (threads < 1) throw ConfigError("pretrain: threads must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("pretrain: checkpoint_every must be >= 1");
  if (out_dir.empty()) throw ConfigError("pretrain: out_dir is required");
}

namespace {

// Gradients and loss sum for one contiguous slice of a batch. Each worker
// builds an independent graph per sample, so threads share only read-only
// state; slices are reduced in thread order to keep results deterministic
// for a fixed thread count.
struct WorkerOut {
  ParameterSet<float> grads;
  double loss_sum = 0.0;
};

void run_slice(const ModelConfig& cfg, const ParameterSet<float>& params,
               const SampleSet& train, const PatchGrid& grid,
               const std::vector<std::int64_t>& batch, std::size_t lo, std::size_t hi,
               std::uint64_t step_seed, WorkerOut& out) {
  for (std::size_t i = lo; i < hi; ++i) {
    Graph<float> g;
    BoundModel<float> model(cfg, g, params);
    const Tensor<float> patches =
        sample_to_patch_tensor<float>(train.sample(batch[i]), grid);
    const auto mask = random_mask(grid.total(), cfg.mask_ratio,
                                  derive_seed(step_seed, "sample", static_cast<std::uint64_t>(i)));
    DropoutStream<float> drop(cfg.dropout,
                              derive_seed(step_seed, "drop", static_cast<std::uint64_t>(i)));
    const int loss = model.pretrain_loss(patches, grid, mask, &drop);
    out.loss_sum += static_cast<double>(g.val(loss)[0]);
    g.backward(loss);
    model.accumulate_grads(out.grads);
  }
}

}  // namespace

PretrainResult pretrain(const ModelConfig& cfg, const SampleSet& train,
                        const PretrainConfig& tcfg,
                        const std::filesystem::path* resume_from) {
  cfg.validate();
  tcfg.validate();
  train.validate();
  if (train.n < 1) throw ConfigError("pretrain: empty training set");
  const PatchGrid grid = make_patch_grid(train.channels, train.timepoints, cfg.patch_len);

  ParameterSet<float> params;
  AdamWConfig ocfg;
  ocfg.beta1 = tcfg.beta1;
  ocfg.beta2 = tcfg.beta2;
  ocfg.eps = tcfg.adam_eps;
  ocfg.weight_decay = tcfg.weight_decay;

  std::int64_t start_epoch = 0;
  std::int64_t global_step = 0;

  std::unique_ptr<AdamW<float>> opt;
  if (resume_from) {
    KvFile manifest;
    ParameterSet<float> all = load_checkpoint<float>(*resume_from, cfg, &manifest);
    if (manifest.get_int("train.seed") != static_cast<std::int64_t>(tcfg.seed))
      throw ConfigError("pretrain: resume seed mismatch (checkpoint has " +
                        manifest.get("train.seed") + ")");
    start_epoch = manifest.get_int("train.epochs_done");
    global_step = manifest.get_int("train.step");
    if (start_epoch >= tcfg.epochs)
      throw ConfigError("pretrain: checkpoint already covers all requested epochs");
    for (std::size_t i = 0; i < all.size(); ++i) {
      const std::string& name = all.names()[i];
      if (name.rfind("opt.", 0) == 0) continue;
      params.add(name, all.value(i));
    }
    opt = std::make_unique<AdamW<float>>(params, ocfg);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string& name = params.names()[i];
      opt->moments_m().get(name) = all.get("opt.m." + name);
      opt->moments_v().get(name) = all.get("opt.v." + name);
    }
    opt->set_step_count(global_step);
  } else {
    params = init_parameters<float>(cfg, tcfg.seed);
    opt = std::make_unique<AdamW<float>>(params, ocfg);
  }

  std::filesystem::create_directories(tcfg.out_dir);
  TrainLog log;
  const std::filesystem::path log_path = tcfg.out_dir / "train_log.csv";
  log.open(log_path.string(), resume_from != nullptr && std::filesystem::exists(log_path));

  const double cycle = static_cast<double>(tcfg.cosine_cycle > 0 ? tcfg.cosine_cycle : tcfg.epochs);
  const std::int64_t steps_per_epoch =
      (train.n + tcfg.batch_size - 1) / tcfg.batch_size;

  PretrainResult result;
  for (std::int64_t epoch = start_epoch; epoch < tcfg.epochs; ++epoch) {
    const auto batches = make_batches(train.n, tcfg.batch_size,
                                      derive_seed(tcfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const auto& batch = batches[step];
      const std::uint64_t step_seed =
          derive_seed(derive_seed(tcfg.seed, "epoch", static_cast<std::uint64_t>(epoch)), "step",
                      static_cast<std::uint64_t>(step));

      const auto B = batch.size();
      const int n_workers = static_cast<int>(std::min<std::size_t>(
          static_cast<std::size_t>(tcfg.threads), B));
      std::vector<WorkerOut> outs(static_cast<std::size_t>(n_workers));
      for (auto& o : outs) o.grads = zeros_like(params);
      if (n_workers == 1) {
        run_slice(cfg, params, train, grid, batch, 0, B, step_seed, outs[0]);
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (B + static_cast<std::size_t>(n_workers) - 1) /
                                  static_cast<std::size_t>(n_workers);
        for (int w = 0; w < n_workers; ++w) {
          const std::size_t lo = static_cast<std::size_t>(w) * chunk;
          const std::size_t hi = std::min(B, lo + chunk);
          if (lo >= hi) break;
          pool.emplace_back(run_slice, std::cref(cfg), std::cref(params), std::cref(train),
                            std::cref(grid), std::cref(batch), lo, hi, step_seed,
                            std::ref(outs[static_cast<std::size_t>(w)]));
        }
        for (auto& th : pool) th.join();
      }

      // Reduce worker slices in order; gradients become the batch mean.
      ParameterSet<float>& grads = outs[0].grads;
      double loss_sum = outs[0].loss_sum;
      for (std::size_t w = 1; w < outs.size(); ++w) {
        loss_sum += outs[w].loss_sum;
        for (std::size_t i = 0; i < grads.size(); ++i) {
          Tensor<float>& dst = grads.value(i);
          const Tensor<float>& src = outs[w].grads.value(i);
          for (std::int64_t j = 0; j < dst.numel(); ++j) dst[j] += src[j];
        }
      }
      const float inv_b = 1.0f / static_cast<float>(B);
      for (std::size_t i = 0; i < grads.size(); ++i) {
        Tensor<float>& gt = grads.value(i);
        for (std::int64_t j = 0; j < gt.numel(); ++j) gt[j] *= inv_b;
      }

      const double grad_norm = clip_grad_norm(grads, tcfg.clip_norm);
      const double frac_epoch =
          static_cast<double>(epoch) + static_cast<double>(step) / static_cast<double>(steps_per_epoch);
      const double lr = cosine_lr(tcfg.lr, tcfg.min_lr, cycle, frac_epoch);
      opt->step(params, grads, lr);
      ++global_step;

      result.final_loss = loss_sum / static_cast<double>(B);
      if (!std::isfinite(result.final_loss))
        throw NumericError("pretrain: non-finite loss at step " + std::to_string(global_step));
      result.steps = global_step;
      log.write({global_step, epoch, result.final_loss, lr, grad_norm});
    }

    if ((epoch + 1) % tcfg.checkpoint_every == 0 || epoch + 1 == tcfg.epochs) {
      const auto dir = tcfg.out_dir / ("checkpoint_epoch" + std::to_string(epoch));
      ParameterSet<float> snapshot;
      for (std::size_t i = 0; i < params.size(); ++i)
        snapshot.add(params.names()[i], params.value(i));
      for (std::size_t i = 0; i < params.size(); ++i)
        snapshot.add("opt.m." + params.names()[i], opt->moments_m().value(i));
      for (std::size_t i = 0; i < params.size(); ++i)
        snapshot.add("opt.v." + params.names()[i], opt->moments_v().value(i));
      KvFile extra;
      extra.set_int("train.seed", static_cast<std::int64_t>(tcfg.seed));
      extra.set_int("train.epochs_done", epoch + 1);
      extra.set_int("train.step", global_step);
      save_checkpoint(dir, cfg, snapshot, extra);
      result.last_checkpoint = dir;
    }
  }
  log.close();
  return result;
}

}  // namespace cceeg
