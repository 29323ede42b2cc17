#include "cceeg/commands.hpp"

#include "cceeg/dft.hpp"
#include "cceeg/errors.hpp"
#include "cceeg/finetune.hpp"
#include "cceeg/flops.hpp"
#include "cceeg/heads.hpp"
#include "cceeg/kvfile.hpp"
#include "cceeg/metrics.hpp"
#include "cceeg/model.hpp"
#include "cceeg/parameters.hpp"
#include "cceeg/patching.hpp"
#include "cceeg/preprocess.hpp"
#include "cceeg/recording.hpp"
#include "cceeg/reference.hpp"
#include "cceeg/rng.hpp"
#include "cceeg/sampleset.hpp"
#include "cceeg/synthetic.hpp"
#include "cceeg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cceeg {

namespace {

namespace fs = std::filesystem;

void print_seed(const RunConfig& cfg) { std::cout << "seed: " << cfg.seed << "\n"; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

RunConfig resolve_config(const GlobalOptions& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("CCEEG_CONFIG")) path = env;
  }
  RunConfig cfg = path.empty() ? default_run_config() : load_run_config(path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

int cmd_preprocess(const RunConfig& cfg, const fs::path& in_path, const fs::path& out_path) {
  print_seed(cfg);
  std::vector<std::pair<std::string, fs::path>> recordings;
  const bool single = fs::exists(in_path / "manifest.txt");
  if (single) {
    recordings.emplace_back(in_path.filename().string(), in_path);
  } else if (fs::is_directory(in_path)) {
    for (const auto& entry : fs::directory_iterator(in_path))
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt"))
        recordings.emplace_back(entry.path().filename().string(), entry.path());
    std::sort(recordings.begin(), recordings.end());
  }
  if (recordings.empty())
    throw IoError("preprocess: no recordings under '" + in_path.string() + "'");

  std::int64_t total_segments = 0, total_rejected = 0;
  for (const auto& [name, dir] : recordings) {
    const EEGRecording rec = load_recording(dir);
    PipelineStats stats;
    const SampleSet set = run_pipeline(rec, cfg.preprocess, &stats);
    save_sampleset(set, single ? out_path : out_path / name);
    total_segments += stats.segments;
    total_rejected += stats.rejected;
    if (single)
      std::cout << stats.segments << " segments, " << stats.rejected << " rejected\n";
    else
      std::cout << name << ": " << stats.segments << " segments, " << stats.rejected
                << " rejected\n";
  }
  if (!single)
    std::cout << "total: " << total_segments << " segments, " << total_rejected
              << " rejected across " << recordings.size() << " recordings\n";
  std::cout << "wrote: " << out_path.string() << "\n";
  return 0;
}

int cmd_synth(const RunConfig& cfg, const fs::path& out_path) {
  print_seed(cfg);
  SyntheticSpec spec = cfg.synth;
  spec.seed = derive_seed(cfg.seed, "synth", 0);
  const SampleSet set = generate_synthetic(spec);
  save_sampleset(set, out_path);
  std::cout << set.n << " samples, " << set.channels << " channels x " << set.timepoints
            << " points at " << set.sample_rate << " Hz, "
            << (set.label_kind == LabelKind::none
                    ? std::string("unlabeled")
                    : std::to_string(spec.class_count) + " classes")
            << "\n";
  std::cout << "wrote: " << out_path.string() << "\n";
  return 0;
}

int cmd_pretrain(const RunConfig& cfg, const fs::path* resume) {
  print_seed(cfg);
  if (cfg.pretrain_data.empty())
    throw ConfigError("pretrain: set pretrain.data to a sample-set directory");
  const SampleSet data = load_sampleset(cfg.pretrain_data);
  PretrainConfig t = cfg.pretrain;
  t.seed = cfg.seed;
  t.threads = cfg.threads;
  t.out_dir = cfg.out_dir;
  t.validate();
  fs::create_directories(t.out_dir);
  const PretrainResult res = pretrain(cfg.model, data, t, resume);
  std::cout << "steps: " << res.steps << "\n";
  std::cout << "final_loss: " << fmt(res.final_loss) << "\n";
  std::cout << "checkpoint: " << res.last_checkpoint.string() << "\n";
  std::cout << "loss_curve: " << (t.out_dir / "train_log.csv").string() << "\n";
  return 0;
}

int cmd_finetune(const RunConfig& cfg, const FinetuneOverrides& ov) {
  print_seed(cfg);
  if (cfg.finetune_data.empty())
    throw ConfigError("finetune: set finetune.data to a labeled sample-set directory");
  const SampleSet all = load_sampleset(cfg.finetune_data);
  if (all.label_kind == LabelKind::none)
    throw ConfigError("finetune: data set '" + cfg.finetune_data + "' has no labels");

  FinetuneConfig f = cfg.finetune;
  f.seed = cfg.seed;
  f.threads = cfg.threads;
  f.out_dir = cfg.out_dir;
  if (ov.frozen) f.frozen = *ov.frozen;
  if (ov.data_fraction) f.data_fraction = *ov.data_fraction;
  f.validate();
  const std::string ckpt = ov.checkpoint ? *ov.checkpoint : cfg.finetune_checkpoint;

  std::vector<std::int64_t> tr, va, te;
  const bool any_split =
      !cfg.train_split.empty() || !cfg.val_split.empty() || !cfg.test_split.empty();
  if (any_split) {
    if (cfg.train_split.empty() || cfg.val_split.empty() || cfg.test_split.empty())
      throw ConfigError("finetune: provide all three split files or none");
    tr = load_split(cfg.train_split, all.n);
    va = load_split(cfg.val_split, all.n);
    te = load_split(cfg.test_split, all.n);
  } else {
    if (all.n < 5) throw ConfigError("finetune: too few samples for an automatic split");
    std::vector<std::int64_t> perm(static_cast<std::size_t>(all.n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(cfg.seed, "split", 0));
    for (std::int64_t i = all.n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    const auto n_tr = static_cast<std::int64_t>(0.6 * static_cast<double>(all.n));
    const auto n_va = static_cast<std::int64_t>(0.2 * static_cast<double>(all.n));
    tr.assign(perm.begin(), perm.begin() + n_tr);
    va.assign(perm.begin() + n_tr, perm.begin() + n_tr + n_va);
    te.assign(perm.begin() + n_tr + n_va, perm.end());
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    std::sort(te.begin(), te.end());
  }
  const SampleSet train = subset(all, tr), val = subset(all, va), test = subset(all, te);
  std::cout << "split: " << train.n << " train / " << val.n << " val / " << test.n
            << " test\n";

  ParameterSet<float> encoder;
  if (!ckpt.empty()) {
    const auto loaded = load_checkpoint<float>(ckpt, cfg.model);
    for_each_param(cfg.model,
                   [&](const ParamSpec& s) { encoder.add(s.name, loaded.get(s.name)); });
    std::cout << "encoder: " << ckpt << "\n";
  } else {
    encoder = init_parameters<float>(cfg.model, cfg.seed);
    std::cout << "encoder: fresh (no pretraining checkpoint)\n";
  }

  fs::create_directories(f.out_dir);
  const FinetuneResult res = finetune(cfg.model, encoder, train, val, test, f);
  std::cout << "monitor: " << res.monitor << "\n";
  std::cout << "best_epoch: " << res.best_epoch << "\n";
  std::cout << "best_val_" << res.monitor << ": " << fmt(res.best_val_metric) << "\n";
  for (const auto& [name, value] : res.test_report.metrics)
    std::cout << "test_" << name << ": " << fmt(value) << "\n";
  std::cout << "checkpoint: " << res.best_checkpoint.string() << "\n";
  std::cout << "predictions: " << res.predictions_path.string() << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data_path,
                 const std::string& split_file) {
  print_seed(cfg);
  SampleSet data = load_sampleset(data_path);
  if (!split_file.empty()) data = subset(data, load_split(split_file, data.n));
  if (data.label_kind == LabelKind::none)
    throw ConfigError("evaluate: data set '" + data_path.string() + "' has no labels");

  KvFile manifest;
  const auto loaded = load_checkpoint<float>(checkpoint, cfg.model, &manifest);
  TaskKind task = cfg.finetune.task;
  if (manifest.has("finetune.task")) task = task_from_string(manifest.get("finetune.task"));

  ParameterSet<float> params;
  for_each_param(cfg.model, [&](const ParamSpec& s) { params.add(s.name, loaded.get(s.name)); });
  if (loaded.has("head.w1")) {
    for (const char* name : {"head.w1", "head.b1", "head.w2", "head.b2"})
      params.add(name, loaded.get(name));
  } else {
    // Pretraining-only checkpoint: attach a fresh, untrained head so the
    // command still produces a (chance-level) report.
    const PatchGrid grid = make_patch_grid(data.channels, data.timepoints, cfg.model.patch_len);
    const std::int64_t hidden =
        cfg.finetune.head_hidden > 0 ? cfg.finetune.head_hidden : cfg.model.d;
    const std::int64_t out = task == TaskKind::multiclass ? cfg.finetune.n_classes : 1;
    const auto head = init_head_params<float>(grid.total(), cfg.model.d, hidden, out,
                                              derive_seed(cfg.seed, "head", 0));
    for (std::size_t i = 0; i < head.size(); ++i) params.add(head.names()[i], head.value(i));
    std::cout << "head: freshly initialized (untrained)\n";
  }

  fs::create_directories(cfg.out_dir);
  const fs::path pred_path = fs::path(cfg.out_dir) / "predictions.tsv";
  const EvalReport rep = evaluate_model(cfg.model, params, data, task, &pred_path);
  rep.save(fs::path(cfg.out_dir) / "eval_report.txt");
  std::cout << "task: " << rep.task << "\n";
  std::cout << "n: " << rep.n << "\n";
  for (const auto& [name, value] : rep.metrics) std::cout << name << ": " << fmt(value) << "\n";
  std::cout << "predictions: " << pred_path.string() << "\n";
  std::cout << "report: " << (fs::path(cfg.out_dir) / "eval_report.txt").string() << "\n";
  return 0;
}

int cmd_flops(const RunConfig& cfg, std::int64_t channels, double seconds) {
  print_seed(cfg);
  if (channels < 1) throw ConfigError("flops: channels must be >= 1");
  if (!(seconds > 0.0)) throw ConfigError("flops: seconds must be > 0");
  const auto samples =
      static_cast<std::int64_t>(std::llround(seconds * cfg.preprocess.target_rate_hz));
  const std::int64_t n = samples / cfg.model.patch_len;
  if (n < 1)
    throw ConfigError("flops: input shorter than one patch (" + std::to_string(samples) +
                      " samples, patch " + std::to_string(cfg.model.patch_len) + ")");

  std::cout << "grid: " << channels << " channels x " << n << " patches ("
            << fmt(seconds) << " s at " << fmt(cfg.preprocess.target_rate_hz) << " Hz, patch "
            << cfg.model.patch_len << ")\n";

  fs::create_directories(cfg.out_dir);
  std::map<AttentionKind, FlopReport> reports;
  for (const AttentionKind variant :
       {AttentionKind::criss_cross, AttentionKind::axial, AttentionKind::full}) {
    ModelConfig m = cfg.model;
    m.attention = variant;
    m.validate();
    const FlopReport rep = count_flops(m, channels, n);
    reports[variant] = rep;
    std::cout << "\n[" << to_string(variant) << "]\n";
    std::cout << "  patch_encoder:  " << rep.patch_encoder << "\n";
    std::cout << "  pos_enc:        " << rep.pos_enc << "\n";
    std::cout << "  attn_proj:      " << rep.attn_proj << "\n";
    std::cout << "  attn_scores:    " << rep.attn_scores << "\n";
    std::cout << "  ffn:            " << rep.ffn << "\n";
    std::cout << "  norms_residual: " << rep.norms_residual << "\n";
    std::cout << "  recon_head:     " << rep.recon_head << "\n";
    std::cout << "  total:          " << rep.total() << "\n";
    std::cout << "  params:         " << count_params(m) << "\n";

    KvFile kv;
    rep.to_kv(kv);
    kv.set_int("flops.params", count_params(m));
    kv.save(fs::path(cfg.out_dir) / ("flops_" + to_string(variant) + ".txt"));
  }
  const double cc = static_cast<double>(reports[AttentionKind::criss_cross].total());
  const double full = static_cast<double>(reports[AttentionKind::full].total());
  const double cc_att = static_cast<double>(reports[AttentionKind::criss_cross].attention());
  const double full_att = static_cast<double>(reports[AttentionKind::full].attention());
  std::cout << "\nratio criss_cross/full (total):          " << fmt(cc / full) << "\n";
  std::cout << "ratio criss_cross/full (attention only): " << fmt(cc_att / full_att) << "\n";
  return 0;
}

namespace {

// Op family a parameter belongs to, for the gradient-check report.
std::string param_family(const std::string& name) {
  if (name.rfind("enc.conv", 0) == 0) return "conv";
  if (name.rfind("enc.gn", 0) == 0) return "norm";
  if (name.rfind("enc.freq", 0) == 0) return "freq_fc";
  if (name.rfind("pe.", 0) == 0) return "pos_enc";
  if (name == "mask.token") return "mask_token";
  if (name.rfind("recon.", 0) == 0) return "head";
  if (name.find(".ln") != std::string::npos) return "norm";
  if (name.find("attn.qn") != std::string::npos || name.find("attn.kn") != std::string::npos)
    return "norm";
  if (name.find(".attn.") != std::string::npos) return "attention";
  if (name.find(".ffn.") != std::string::npos) return "ffn";
  return "other";
}

ModelConfig gradcheck_config(const ModelConfig& base) {
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
  cfg.mask_ratio = 0.5;
  // Variant choices carry over so each wiring can be checked.
  cfg.attention = base.attention;
  cfg.pos_enc = base.pos_enc;
  cfg.energy = base.energy;
  // The check runs with a learnable mask token holding random values: the
  // default all-zero token drives masked rows to exactly zero, where group
  // norm sits at a 1/sqrt(eps) variance cusp and central differences carry
  // huge truncation error. The derivative is verified at a well-conditioned
  // point instead.
  cfg.learnable_mask_token = true;
  return cfg;
}

}  // namespace

int cmd_gradcheck(const RunConfig& cfg, const std::string& corrupt_family) {
  print_seed(cfg);
  const ModelConfig tiny = gradcheck_config(cfg.model);
  tiny.validate();

  auto params = init_parameters<double>(tiny, derive_seed(cfg.seed, "gradcheck", 0));
  {
    Tensor<double>& token = params.get("mask.token");
    Rng tr(derive_seed(cfg.seed, "token", 0));
    for (std::int64_t i = 0; i < token.numel(); ++i) token[i] = tr.normal() * 0.5;
  }
  const PatchGrid grid{4, 4, tiny.patch_len};
  Tensor<double> raw({grid.total(), tiny.patch_len});
  {
    Rng dr(derive_seed(cfg.seed, "data", 0));
    for (std::int64_t i = 0; i < raw.numel(); ++i) raw[i] = dr.normal();
  }
  const auto mask = random_mask(grid.total(), tiny.mask_ratio, derive_seed(cfg.seed, "mask", 0));

  auto loss_value = [&]() {
    Graph<double> g;
    BoundModel<double> m(tiny, g, params);
    return g.val(m.pretrain_loss(raw, grid, mask, nullptr))[0];
  };

  ParameterSet<double> grads = zeros_like(params);
  {
    Graph<double> g;
    BoundModel<double> m(tiny, g, params);
    const int loss = m.pretrain_loss(raw, grid, mask, nullptr);
    g.backward(loss);
    m.accumulate_grads(grads);
  }

  std::set<std::string> families;
  for (const auto& name : params.names()) families.insert(param_family(name));
  if (!corrupt_family.empty()) {
    if (!families.count(corrupt_family))
      throw ConfigError("gradcheck: unknown op family '" + corrupt_family + "'");
    // Deliberate corruption the check must catch: scale-plus-offset keeps the
    // relative error above tolerance at every gradient magnitude.
    for (const auto& name : params.names())
      if (param_family(name) == corrupt_family) {
        Tensor<double>& gt = grads.get(name);
        for (std::int64_t i = 0; i < gt.numel(); ++i) gt[i] = gt[i] * 1.01 + 1e-3;
      }
  }

  const double h = 1e-5, tol = 1e-4;
  struct FamilyStat {
    double worst = 0.0;
    std::int64_t coords = 0;
  };
  std::map<std::string, FamilyStat> stats;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const std::string& name = params.names()[pi];
    Tensor<double>& tv = params.value(pi);
    const Tensor<double>& gv = grads.get(name);
    FamilyStat& st = stats[param_family(name)];
    Rng pick(derive_seed(cfg.seed, "coord." + name, 0));
    const std::int64_t n_check = std::min<std::int64_t>(tv.numel(), 5);
    for (std::int64_t k = 0; k < n_check; ++k) {
      const auto j = static_cast<std::int64_t>(pick.below(static_cast<std::uint64_t>(tv.numel())));
      const double keep = tv[j];
      tv[j] = keep + h;
      const double up = loss_value();
      tv[j] = keep - h;
      const double dn = loss_value();
      tv[j] = keep;
      const double num = (up - dn) / (2.0 * h);
      const double rel = std::abs(gv[j] - num) / std::max({std::abs(gv[j]), std::abs(num), 1e-4});
      st.worst = std::max(st.worst, rel);
      ++st.coords;
    }
  }

  bool ok = true;
  std::int64_t total_coords = 0;
  for (const auto& [family, st] : stats) {
    const bool pass = st.worst < tol;
    ok = ok && pass;
    total_coords += st.coords;
    std::cout << family << ": worst rel err " << fmt(st.worst) << " over " << st.coords
              << " coords -> " << (pass ? "pass" : "FAIL") << "\n";
  }
  std::cout << "checked " << total_coords << " coordinates across " << stats.size()
            << " op families (tol " << fmt(tol) << ")\n";
  std::cout << (ok ? "gradcheck: PASS\n" : "gradcheck: FAIL\n");
  return ok ? 0 : 3;
}

namespace {

// Brute-force metric references for the oracle command: deliberately naive
// derivations, sharing nothing with the library implementations.
double ref_auroc(const std::vector<double>& score, const std::vector<int>& truth) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (truth[i] != 1) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (truth[j] != 0) continue;
      ++pairs;
      if (score[i] > score[j])
        wins += 1.0;
      else if (score[i] == score[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double ref_balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  const int k = 1 + *std::max_element(truth.begin(), truth.end());
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    std::int64_t tp = 0, total = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      ++total;
      if (pred[i] == c) ++tp;
    }
    if (total == 0) continue;
    ++present;
    sum += static_cast<double>(tp) / static_cast<double>(total);
  }
  return sum / static_cast<double>(present);
}

double ref_kappa(const std::vector<int>& pred, const std::vector<int>& truth) {
  const int k = 1 + std::max(*std::max_element(pred.begin(), pred.end()),
                             *std::max_element(truth.begin(), truth.end()));
  const auto n = static_cast<double>(truth.size());
  double po = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (pred[i] == truth[i]) po += 1.0;
  po /= n;
  double pe = 0.0;
  for (int c = 0; c < k; ++c) {
    double row = 0.0, col = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c) row += 1.0;
      if (pred[i] == c) col += 1.0;
    }
    pe += (row / n) * (col / n);
  }
  return (po - pe) / (1.0 - pe);
}

double ref_weighted_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  const int k = 1 + std::max(*std::max_element(pred.begin(), pred.end()),
                             *std::max_element(truth.begin(), truth.end()));
  double out = 0.0;
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c) ++support;
      if (pred[i] == c && truth[i] == c) ++tp;
      if (pred[i] == c && truth[i] != c) ++fp;
      if (pred[i] != c && truth[i] == c) ++fn;
    }
    if (support == 0) continue;
    const double denom = 2 * tp + fp + fn;
    const double f1 = denom > 0 ? 2 * tp / denom : 0.0;
    out += f1 * support / static_cast<double>(truth.size());
  }
  return out;
}

struct OracleCheck {
  std::string name;
  double deviation;
  double tolerance;
  bool pass() const { return deviation < tolerance; }
};

}  // namespace

int cmd_oracle(const RunConfig& cfg) {
  print_seed(cfg);
  std::vector<OracleCheck> checks;

  // 1. Striped attention vs the dense masked reference, covering degenerate
  //    grids and the head layouts used by every attention variant
  //    (criss-cross mix, full, axial all-spatial / all-temporal).
  {
    double worst = 0.0;
    std::uint64_t seed = derive_seed(cfg.seed, "oracle.attn", 0);
    const std::vector<std::pair<std::string, std::vector<HeadKind>>> layouts = {
        {"criss_cross", {HeadKind::spatial, HeadKind::temporal}},
        {"full", {HeadKind::full_grid, HeadKind::full_grid}},
        {"axial_spatial", {HeadKind::spatial, HeadKind::spatial}},
        {"axial_temporal", {HeadKind::temporal, HeadKind::temporal}},
    };
    for (const std::int64_t C : {1, 3, 8}) {
      for (const std::int64_t n : {1, 4, 10}) {
        for (const auto& [label, heads] : layouts) {
          const std::int64_t d = 16;
          Rng rng(seed++);
          auto rnd = [&rng](std::vector<std::int64_t> shape, double scale) {
            Tensor<double> t(std::move(shape));
            for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
            return t;
          };
          const Tensor<double> x = rnd({C * n, d}, 1.0);
          const Tensor<double> wq = rnd({d, d}, 0.3), bq = rnd({d}, 0.1);
          const Tensor<double> wk = rnd({d, d}, 0.3), bk = rnd({d}, 0.1);
          const Tensor<double> wv = rnd({d, d}, 0.3), bv = rnd({d}, 0.1);
          const Tensor<double> wo = rnd({d, d}, 0.3), bo = rnd({d}, 0.1);
          Tensor<double> qn({d}), kn({d});
          for (std::int64_t i = 0; i < d; ++i) {
            qn[i] = 1.0 + 0.2 * rng.normal();
            kn[i] = 1.0 + 0.2 * rng.normal();
          }
          Graph<double> g;
          AttnParamIds<double> ids{g.leaf(wq), g.leaf(bq), g.leaf(wk), g.leaf(bk), g.leaf(wv),
                                   g.leaf(bv), g.leaf(wo), g.leaf(bo), g.leaf(qn), g.leaf(kn)};
          const int y = attention_forward<double>(g, g.constant(x), ids, heads, C, n, 1e-5,
                                                  nullptr);
          const auto want =
              dense_masked_attention(x, wq, bq, wk, bk, wv, bv, wo, bo, qn, kn, heads, C, n, 1e-5);
          const Tensor<double>& got = g.val(y);
          for (std::int64_t i = 0; i < got.numel(); ++i)
            worst = std::max(worst, std::abs(got[i] - want[static_cast<std::size_t>(i)]));
        }
      }
    }
    checks.push_back({"striped attention vs dense masked reference (max |delta|)", worst, 1e-6});
  }

  // 2. Spectral transform vs the textbook loop; tone-concentration anchor.
  {
    double worst = 0.0;
    Rng rng(derive_seed(cfg.seed, "oracle.dft", 0));
    for (const std::int64_t t : {std::int64_t{8}, std::int64_t{16}, std::int64_t{200},
                                 std::int64_t{31}}) {
      const RealDft dft(t);
      std::vector<double> x(static_cast<std::size_t>(t));
      for (auto& v : x) v = rng.normal();
      std::vector<double> re_n, im_n;
      naive_real_dft(x, re_n, im_n);
      std::vector<double> re(static_cast<std::size_t>(dft.bins())), im(re.size());
      dft.transform(x.data(), re.data(), im.data());
      for (std::size_t k = 0; k < re.size(); ++k) {
        const double mag = std::max({std::abs(re_n[k]), std::abs(im_n[k]), 1.0});
        worst = std::max(worst, std::abs(re[k] - re_n[k]) / mag);
        worst = std::max(worst, std::abs(im[k] - im_n[k]) / mag);
      }
    }
    checks.push_back({"spectral transform vs textbook loop (max rel)", worst, 1e-9});

    const RealDft dft(200);
    std::vector<double> tone(200);
    for (std::int64_t i = 0; i < 200; ++i)
      tone[static_cast<std::size_t>(i)] =
          std::sin(2.0 * M_PI * 10.0 * static_cast<double>(i) / 200.0);
    const auto e = dft.energy(tone.data());
    double total = 0.0;
    for (const double v : e) total += v;
    checks.push_back({"10 Hz tone energy outside bin 10 (fraction)", 1.0 - e[10] / total, 0.01});
  }

  // 3. Masked reconstruction loss vs a scalar loop; exact-reconstruction zero.
  {
    Rng rng(derive_seed(cfg.seed, "oracle.mse", 0));
    const std::int64_t N = 12, t = 16;
    Tensor<double> target({N, t}), pred({N, t});
    for (std::int64_t i = 0; i < target.numel(); ++i) {
      target[i] = rng.normal();
      pred[i] = rng.normal();
    }
    const auto mask = random_mask(N, 0.5, derive_seed(cfg.seed, "oracle.mask", 0));

    Graph<double> g;
    const int loss = ops::masked_mse(g, g.constant(pred), target, mask);
    double want = 0.0;
    std::int64_t rows = 0;
    for (std::int64_t r = 0; r < N; ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      ++rows;
      for (std::int64_t c = 0; c < t; ++c) {
        const double d = pred[r * t + c] - target[r * t + c];
        want += d * d;
      }
    }
    want /= static_cast<double>(rows * t);
    checks.push_back({"masked loss vs scalar loop (|delta|)", std::abs(g.val(loss)[0] - want),
                      1e-10});

    Tensor<double> exact = target;
    for (std::int64_t r = 0; r < N; ++r)
      if (!mask[static_cast<std::size_t>(r)])
        for (std::int64_t c = 0; c < t; ++c) exact[r * t + c] += 7.0;  // visible rows only
    const int zero = ops::masked_mse(g, g.constant(exact), target, mask);
    checks.push_back({"exact reconstruction loss (must be 0)", std::abs(g.val(zero)[0]), 1e-300});
  }

  // 4. Metric oracles: the hand-computed kappa anchor, AUROC on random
  //    scores, and brute-force references on small random sets.
  {
    // Confusion [[50,10],[5,35]]: rows = truth, columns = prediction.
    std::vector<std::int64_t> pred_v, truth_v;
    auto emit = [&](int t, int p, int count) {
      for (int i = 0; i < count; ++i) {
        truth_v.push_back(t);
        pred_v.push_back(p);
      }
    };
    emit(0, 0, 50);
    emit(0, 1, 10);
    emit(1, 0, 5);
    emit(1, 1, 35);
    checks.push_back({"kappa on [[50,10],[5,35]] vs 0.6938775510",
                      std::abs(cohen_kappa(pred_v, truth_v) - 0.69387755102040816), 1e-3});

    Rng rng(derive_seed(cfg.seed, "oracle.metrics", 0));
    std::vector<double> rscore(10000);
    std::vector<std::int64_t> rtruth(10000);
    for (std::size_t i = 0; i < rscore.size(); ++i) {
      rscore[i] = rng.uniform();
      rtruth[i] = static_cast<std::int64_t>(i % 2);
    }
    checks.push_back({"AUROC of random scores vs 0.5 (|delta|, tol 0.02)",
                      std::abs(auroc(rscore, rtruth) - 0.5), 0.02});

    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const std::int64_t n = 20 + static_cast<std::int64_t>(rng.below(31));  // 20..50
      std::vector<std::int64_t> p(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
      std::vector<int> pi(static_cast<std::size_t>(n)), ti(static_cast<std::size_t>(n));
      const int k = 2 + static_cast<int>(rng.below(3));  // 2..4 classes
      for (std::int64_t i = 0; i < n; ++i) {
        pi[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        // Guarantee every class appears in truth so recalls are defined.
        ti[static_cast<std::size_t>(i)] =
            i < k ? static_cast<int>(i) : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        p[static_cast<std::size_t>(i)] = pi[static_cast<std::size_t>(i)];
        t[static_cast<std::size_t>(i)] = ti[static_cast<std::size_t>(i)];
      }
      worst = std::max(worst, std::abs(balanced_accuracy(p, t) - ref_balanced_accuracy(pi, ti)));
      worst = std::max(worst, std::abs(cohen_kappa(p, t) - ref_kappa(pi, ti)));
      worst = std::max(worst, std::abs(weighted_f1(p, t) - ref_weighted_f1(pi, ti)));

      std::vector<double> score(static_cast<std::size_t>(n));
      std::vector<std::int64_t> bt(static_cast<std::size_t>(n));
      std::vector<int> bti(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) {
        score[static_cast<std::size_t>(i)] = rng.below(8) / 8.0;  // force score ties
        bt[static_cast<std::size_t>(i)] = i < 2 ? i % 2 : static_cast<std::int64_t>(rng.below(2));
        bti[static_cast<std::size_t>(i)] = static_cast<int>(bt[static_cast<std::size_t>(i)]);
      }
      worst = std::max(worst, std::abs(auroc(score, bt) - ref_auroc(score, bti)));
    }
    checks.push_back({"metrics vs brute-force references (max |delta|)", worst, 1e-9});
  }

  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.pass();
    std::cout << c.name << ": " << fmt(c.deviation) << " (tol " << fmt(c.tolerance) << ") -> "
              << (c.pass() ? "pass" : "FAIL") << "\n";
  }
  std::cout << (ok ? "oracle: PASS\n" : "oracle: FAIL\n");
  return ok ? 0 : 3;
}

}  // namespace cceeg
