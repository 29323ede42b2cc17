#include "cceeg/finetune.hpp"

#include "cceeg/batching.hpp"
#include "cceeg/errors.hpp"
#include "cceeg/graph.hpp"
#include "cceeg/heads.hpp"
#include "cceeg/kvfile.hpp"
#include "cceeg/model.hpp"
#include "cceeg/optim.hpp"
#include "cceeg/patching.hpp"
#include "cceeg/trainer.hpp"
#include "cceeg/trainlog.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <thread>

namespace cceeg {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::binary: return "binary";
    case TaskKind::multiclass: return "multiclass";
    case TaskKind::regression: return "regression";
  }
  throw ConfigError("unknown task kind");
}

TaskKind task_from_string(const std::string& s) {
  if (s == "binary") return TaskKind::binary;
  if (s == "multiclass") return TaskKind::multiclass;
  if (s == "regression") return TaskKind::regression;
  throw ConfigError("unknown task '" + s + "' (binary|multiclass|regression)");
}

void FinetuneConfig::validate() const {
  if (task == TaskKind::multiclass && n_classes < 2)
    throw ConfigError("finetune: multiclass needs n_classes >= 2");
  if (epochs < 1) throw ConfigError("finetune: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("finetune: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("finetune: lr must be > 0");
  if (min_lr < 0.0 || min_lr > lr) throw ConfigError("finetune: min_lr must be in [0, lr]");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw ConfigError("finetune: label_smoothing must be in [0, 1)");
  if (head_hidden < 0) throw ConfigError("finetune: head_hidden must be >= 0");
  if (!(data_fraction > 0.0) || data_fraction > 1.0)
    throw ConfigError("finetune: data_fraction must be in (0, 1]");
  if (threads < 1) throw ConfigError("finetune: threads must be >= 1");
  if (out_dir.empty()) throw ConfigError("finetune: out_dir is required");
}

namespace {

// Integer labels, validated against the task.
std::vector<std::int64_t> int_labels(const SampleSet& s, TaskKind task, std::int64_t k) {
  if (s.label_kind != LabelKind::integer)
    throw ConfigError("finetune: classification needs integer labels");
  std::vector<std::int64_t> out(static_cast<std::size_t>(s.n));
  const std::int64_t hi = task == TaskKind::binary ? 2 : k;
  for (std::int64_t i = 0; i < s.n; ++i) {
    const auto v = static_cast<std::int64_t>(s.labels[static_cast<std::size_t>(i)]);
    if (static_cast<double>(v) != s.labels[static_cast<std::size_t>(i)] || v < 0 || v >= hi)
      throw ConfigError("finetune: label " + std::to_string(s.labels[static_cast<std::size_t>(i)]) +
                        " outside [0, " + std::to_string(hi) + ") at sample " + std::to_string(i));
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

std::vector<double> real_labels(const SampleSet& s) {
  if (s.label_kind == LabelKind::none)
    throw ConfigError("finetune: regression needs labeled samples");
  return s.labels;
}

std::int64_t head_out_dim(TaskKind task, std::int64_t n_classes) {
  return task == TaskKind::multiclass ? n_classes : 1;
}

// Split a combined parameter set into encoder (registry) and head tensors.
void split_params(const ModelConfig& cfg, const ParameterSet<float>& all,
                  ParameterSet<float>& encoder, ParameterSet<float>& head) {
  for_each_param(cfg, [&](const ParamSpec& spec) { encoder.add(spec.name, all.get(spec.name)); });
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string& name = all.names()[i];
    if (name.rfind("head.", 0) == 0) head.add(name, all.value(i));
  }
  if (head.size() != 4) throw ConfigError("finetune: parameter set lacks head tensors");
}

// Raw head outputs for every sample (evaluation mode: no mask, no dropout).
std::vector<std::vector<double>> model_outputs(const ModelConfig& cfg,
                                               const ParameterSet<float>& encoder,
                                               const ParameterSet<float>& head,
                                               const SampleSet& data) {
  const PatchGrid grid = make_patch_grid(data.channels, data.timepoints, cfg.patch_len);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(data.n));
  for (std::int64_t i = 0; i < data.n; ++i) {
    Graph<float> g;
    BoundModel<float> model(cfg, g, encoder);
    const HeadIds<float> hid = bind_head(g, head);
    const Tensor<float> patches = sample_to_patch_tensor<float>(data.sample(i), grid);
    const int feats = model.encode(patches, grid, nullptr, nullptr);
    const int logits = head_forward<float>(g, feats, hid, nullptr);
    const Tensor<float>& z = g.val(logits);
    std::vector<double> row(static_cast<std::size_t>(z.numel()));
    for (std::int64_t j = 0; j < z.numel(); ++j) row[static_cast<std::size_t>(j)] = z[j];
    out[static_cast<std::size_t>(i)] = std::move(row);
  }
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> softmax_row(const std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

// A metric that is undefined on this data (degenerate labels/predictions) is
// reported as NaN rather than aborting the whole evaluation.
double metric_or_nan(const std::function<double()>& f) {
  try {
    return f();
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

EvalReport build_report(TaskKind task, const std::vector<std::vector<double>>& outputs,
                        const SampleSet& data, std::int64_t n_classes,
                        const std::filesystem::path* predictions_out) {
  EvalReport r;
  r.task = to_string(task);
  r.n = data.n;
  std::ofstream pf;
  if (predictions_out) {
    pf.open(*predictions_out);
    if (!pf) throw IoError("cannot write predictions: " + predictions_out->string());
  }

  if (task == TaskKind::binary) {
    const auto truth = int_labels(data, task, 2);
    std::vector<double> score(outputs.size());
    std::vector<std::int64_t> pred(outputs.size());
    if (pf) pf << "index\tscore\tpred\tlabel\n";
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      score[i] = sigmoid(outputs[i][0]);
      pred[i] = score[i] >= 0.5 ? 1 : 0;
      if (pf)
        pf << i << '\t' << format_double(score[i]) << '\t' << pred[i] << '\t' << truth[i] << '\n';
    }
    r.set("auroc", metric_or_nan([&] { return auroc(score, truth); }));
    r.set("auc_pr", metric_or_nan([&] { return auc_pr(score, truth); }));
    r.set("balanced_accuracy", metric_or_nan([&] { return balanced_accuracy(pred, truth); }));
    r.set("cohen_kappa", metric_or_nan([&] { return cohen_kappa(pred, truth); }));
    r.set("weighted_f1", metric_or_nan([&] { return weighted_f1(pred, truth); }));
  } else if (task == TaskKind::multiclass) {
    const auto truth = int_labels(data, task, n_classes);
    std::vector<std::int64_t> pred(outputs.size());
    if (pf) pf << "index\tpred\tlabel\tprobs\n";
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const auto p = softmax_row(outputs[i]);
      pred[i] = static_cast<std::int64_t>(
          std::max_element(p.begin(), p.end()) - p.begin());
      if (pf) {
        pf << i << '\t' << pred[i] << '\t' << truth[i] << '\t';
        for (std::size_t j = 0; j < p.size(); ++j) pf << (j ? "," : "") << format_double(p[j]);
        pf << '\n';
      }
    }
    r.set("balanced_accuracy", metric_or_nan([&] { return balanced_accuracy(pred, truth); }));
    r.set("cohen_kappa", metric_or_nan([&] { return cohen_kappa(pred, truth); }));
    r.set("weighted_f1", metric_or_nan([&] { return weighted_f1(pred, truth); }));
  } else {
    const auto truth = real_labels(data);
    std::vector<double> pred(outputs.size());
    if (pf) pf << "index\tpred\ttarget\n";
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      pred[i] = outputs[i][0];
      if (pf)
        pf << i << '\t' << format_double(pred[i]) << '\t' << format_double(truth[i]) << '\n';
    }
    r.set("pearson_r", metric_or_nan([&] { return pearson_r(pred, truth); }));
    r.set("r2", metric_or_nan([&] { return r2_score(pred, truth); }));
    r.set("rmse", metric_or_nan([&] { return rmse(pred, truth); }));
  }
  return r;
}

const char* monitor_name(TaskKind task) {
  switch (task) {
    case TaskKind::binary: return "auroc";
    case TaskKind::multiclass: return "cohen_kappa";
    case TaskKind::regression: return "r2";
  }
  return "";
}

// Per-sample supervised loss node.
int sample_loss(Graph<float>& g, int logits, TaskKind task, double label,
                double smoothing) {
  switch (task) {
    case TaskKind::binary:
      return ops::bce_logit(g, logits, static_cast<float>(label));
    case TaskKind::multiclass:
      return ops::cross_entropy_smoothed(g, logits, static_cast<std::int64_t>(label),
                                         static_cast<float>(smoothing));
    case TaskKind::regression:
    default:
      return ops::mse_vec(g, logits, Tensor<float>::scalar(static_cast<float>(label)));
  }
}

struct SliceOut {
  ParameterSet<float> grads;
  double loss_sum = 0.0;
};

}  // namespace

FinetuneResult finetune(const ModelConfig& cfg, const ParameterSet<float>& encoder_init,
                        const SampleSet& train_full, const SampleSet& val,
                        const SampleSet& test, const FinetuneConfig& fcfg) {
  cfg.validate();
  fcfg.validate();
  train_full.validate();
  val.validate();
  test.validate();

  // Seeded training fraction.
  SampleSet train = train_full;
  if (fcfg.data_fraction < 1.0) {
    const auto n = train_full.n;
    const auto k = std::max<std::int64_t>(1, std::llround(fcfg.data_fraction * static_cast<double>(n)));
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng(derive_seed(fcfg.seed, "fraction", 0));
    for (std::int64_t i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    std::vector<std::int64_t> idx(perm.begin(), perm.begin() + k);
    std::sort(idx.begin(), idx.end());
    train = subset(train_full, idx);
  }
  if (train.n < 1) throw ConfigError("finetune: empty training split");

  const PatchGrid grid = make_patch_grid(train.channels, train.timepoints, cfg.patch_len);
  const std::int64_t hidden = fcfg.head_hidden > 0 ? fcfg.head_hidden : cfg.d;
  const std::int64_t out_dim = head_out_dim(fcfg.task, fcfg.n_classes);

  // Label sanity up front (throws on task/label mismatch).
  if (fcfg.task == TaskKind::regression) {
    real_labels(train);
  } else {
    int_labels(train, fcfg.task, fcfg.n_classes);
    int_labels(val, fcfg.task, fcfg.n_classes);
    int_labels(test, fcfg.task, fcfg.n_classes);
  }

  ParameterSet<float> encoder;
  for_each_param(cfg, [&](const ParamSpec& spec) {
    encoder.add(spec.name, encoder_init.get(spec.name));
  });
  ParameterSet<float> head = init_head_params<float>(grid.total(), cfg.d, hidden, out_dim,
                                                     derive_seed(fcfg.seed, "head", 0));

  // Trainable set: head always; encoder unless frozen.
  ParameterSet<float> trainable;
  if (!fcfg.frozen)
    for (std::size_t i = 0; i < encoder.size(); ++i)
      trainable.add(encoder.names()[i], encoder.value(i));
  for (std::size_t i = 0; i < head.size(); ++i) trainable.add(head.names()[i], head.value(i));

  AdamWConfig ocfg;
  ocfg.beta1 = fcfg.beta1;
  ocfg.beta2 = fcfg.beta2;
  ocfg.eps = fcfg.adam_eps;
  ocfg.weight_decay = fcfg.weight_decay;
  AdamW<float> opt(trainable, ocfg);

  // Frozen probe: encoder outputs do not change, cache them once.
  std::vector<Tensor<float>> cache;
  if (fcfg.frozen) {
    cache.reserve(static_cast<std::size_t>(train.n));
    for (std::int64_t i = 0; i < train.n; ++i) {
      Graph<float> g;
      BoundModel<float> model(cfg, g, encoder);
      const Tensor<float> patches = sample_to_patch_tensor<float>(train.sample(i), grid);
      const int feats = model.encode(patches, grid, nullptr, nullptr);
      cache.push_back(g.val(feats));
    }
  }

  std::filesystem::create_directories(fcfg.out_dir);
  TrainLog log;
  log.open((fcfg.out_dir / "finetune_log.csv").string(), false);

  const double cycle = static_cast<double>(fcfg.cosine_cycle > 0 ? fcfg.cosine_cycle : fcfg.epochs);
  const std::int64_t steps_per_epoch = (train.n + fcfg.batch_size - 1) / fcfg.batch_size;

  auto run_slice = [&](const std::vector<std::int64_t>& batch, std::size_t lo, std::size_t hi,
                       std::uint64_t step_seed, SliceOut& out) {
    for (std::size_t i = lo; i < hi; ++i) {
      Graph<float> g;
      DropoutStream<float> drop(cfg.dropout,
                                derive_seed(step_seed, "drop", static_cast<std::uint64_t>(i)));
      const HeadIds<float> hid = bind_head(g, head);
      std::unique_ptr<BoundModel<float>> model;
      int feats;
      if (fcfg.frozen) {
        feats = g.constant(cache[static_cast<std::size_t>(batch[i])]);
      } else {
        model = std::make_unique<BoundModel<float>>(cfg, g, encoder);
        const Tensor<float> patches = sample_to_patch_tensor<float>(train.sample(batch[i]), grid);
        feats = model->encode(patches, grid, nullptr, &drop);
      }
      const int logits = head_forward(g, feats, hid, &drop);
      const int loss = sample_loss(g, logits, fcfg.task,
                                   train.labels[static_cast<std::size_t>(batch[i])],
                                   fcfg.label_smoothing);
      out.loss_sum += static_cast<double>(g.val(loss)[0]);
      g.backward(loss);
      if (model) model->accumulate_grads(out.grads);
      const std::array<std::pair<const char*, int>, 4> hg = {
          {{"head.w1", hid.w1}, {"head.b1", hid.b1}, {"head.w2", hid.w2}, {"head.b2", hid.b2}}};
      for (const auto& [name, id] : hg) {
        if (!g.grad_touched(id)) continue;
        Tensor<float>& dst = out.grads.get(name);
        const Tensor<float>& src = g.grad(id);
        for (std::int64_t j = 0; j < dst.numel(); ++j) dst[j] += src[j];
      }
    }
  };

  FinetuneResult result;
  result.monitor = monitor_name(fcfg.task);
  double best = std::numeric_limits<double>::lowest();
  ParameterSet<float> best_encoder, best_head;
  std::int64_t global_step = 0;

  for (std::int64_t epoch = 0; epoch < fcfg.epochs; ++epoch) {
    const auto batches = make_batches(train.n, fcfg.batch_size,
                                      derive_seed(fcfg.seed, "fshuffle", static_cast<std::uint64_t>(epoch)));
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const auto& batch = batches[step];
      const std::uint64_t step_seed =
          derive_seed(derive_seed(fcfg.seed, "fepoch", static_cast<std::uint64_t>(epoch)), "step",
                      static_cast<std::uint64_t>(step));
      const auto B = batch.size();
      const int n_workers =
          static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(fcfg.threads), B));
      std::vector<SliceOut> outs(static_cast<std::size_t>(n_workers));
      for (auto& o : outs) o.grads = zeros_like(trainable);
      if (n_workers == 1) {
        run_slice(batch, 0, B, step_seed, outs[0]);
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk =
            (B + static_cast<std::size_t>(n_workers) - 1) / static_cast<std::size_t>(n_workers);
        for (int w = 0; w < n_workers; ++w) {
          const std::size_t lo = static_cast<std::size_t>(w) * chunk;
          const std::size_t hi = std::min(B, lo + chunk);
          if (lo >= hi) break;
          pool.emplace_back([&, lo, hi, w] {
            run_slice(batch, lo, hi, step_seed, outs[static_cast<std::size_t>(w)]);
          });
        }
        for (auto& th : pool) th.join();
      }

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

      const double grad_norm = clip_grad_norm(grads, fcfg.clip_norm);
      const double frac_epoch =
          static_cast<double>(epoch) + static_cast<double>(step) / static_cast<double>(steps_per_epoch);
      const double lr = cosine_lr(fcfg.lr, fcfg.min_lr, cycle, frac_epoch);
      opt.step(trainable, grads, lr);
      // `trainable` aliases copies, push values back to encoder/head.
      for (std::size_t i = 0; i < trainable.size(); ++i) {
        const std::string& name = trainable.names()[i];
        if (name.rfind("head.", 0) == 0)
          head.get(name) = trainable.value(i);
        else
          encoder.get(name) = trainable.value(i);
      }
      ++global_step;
      const double batch_loss = loss_sum / static_cast<double>(B);
      if (!std::isfinite(batch_loss))
        throw NumericError("finetune: non-finite loss at step " + std::to_string(global_step));
      log.write({global_step, epoch, batch_loss, lr, grad_norm});
    }

    // Validation monitor.
    const auto val_out = model_outputs(cfg, encoder, head, val);
    const EvalReport vr = build_report(fcfg.task, val_out, val, fcfg.n_classes, nullptr);
    const double metric = vr.get(result.monitor);
    if (!std::isnan(metric) && metric > best) {
      best = metric;
      result.best_epoch = epoch + 1;
      result.best_val_metric = metric;
      best_encoder = encoder;
      best_head = head;
    }
  }
  log.close();

  if (result.best_epoch == 0) {
    // Monitor never produced a finite value; fall back to the final model so
    // the run still yields a usable artifact (reported honestly).
    result.best_epoch = fcfg.epochs;
    result.best_val_metric = std::numeric_limits<double>::quiet_NaN();
    best_encoder = encoder;
    best_head = head;
  }

  // Test evaluation + artifacts from the best model.
  result.predictions_path = fcfg.out_dir / "predictions.tsv";
  const auto test_out = model_outputs(cfg, best_encoder, best_head, test);
  result.test_report =
      build_report(fcfg.task, test_out, test, fcfg.n_classes, &result.predictions_path);
  result.test_report.save(fcfg.out_dir / "eval_report.txt");

  ParameterSet<float> snapshot;
  for (std::size_t i = 0; i < best_encoder.size(); ++i)
    snapshot.add(best_encoder.names()[i], best_encoder.value(i));
  for (std::size_t i = 0; i < best_head.size(); ++i)
    snapshot.add(best_head.names()[i], best_head.value(i));
  KvFile extra;
  extra.set("finetune.task", to_string(fcfg.task));
  extra.set_int("finetune.n_classes", fcfg.n_classes);
  extra.set_int("finetune.best_epoch", result.best_epoch);
  extra.set("finetune.monitor", result.monitor);
  extra.set_double("finetune.monitor_value", result.best_val_metric);
  extra.set_int("finetune.frozen", fcfg.frozen ? 1 : 0);
  extra.set_int("finetune.seed", static_cast<std::int64_t>(fcfg.seed));
  result.best_checkpoint = fcfg.out_dir / "checkpoint_best";
  save_checkpoint(result.best_checkpoint, cfg, snapshot, extra);
  return result;
}

EvalReport evaluate_model(const ModelConfig& cfg, const ParameterSet<float>& params,
                          const SampleSet& data, TaskKind task,
                          const std::filesystem::path* predictions_out) {
  cfg.validate();
  data.validate();
  ParameterSet<float> encoder, head;
  split_params(cfg, params, encoder, head);
  const std::int64_t out_dim = head.get("head.w2").dim(1);
  const std::int64_t n_classes = task == TaskKind::multiclass ? out_dim : 2;
  if (task == TaskKind::multiclass && out_dim < 2)
    throw ConfigError("evaluate: head output width " + std::to_string(out_dim) +
                      " cannot serve a multiclass task");
  if (task != TaskKind::multiclass && out_dim != 1)
    throw ConfigError("evaluate: head output width " + std::to_string(out_dim) +
                      " requires the multiclass task");
  const auto outputs = model_outputs(cfg, encoder, head, data);
  return build_report(task, outputs, data, n_classes, predictions_out);
}

}  // namespace cceeg
