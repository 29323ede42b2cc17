#include "cceeg/config.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <charconv>
#include <set>
#include <sstream>
#include <string>

namespace cceeg {

namespace {

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: " + key + ": not a non-negative integer: '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + ": not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config: " + key + ": expected 0/1/true/false, got '" + v + "'");
}

std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, item));
  if (out.empty()) throw ConfigError("config: " + key + ": empty list");
  return out;
}

std::string join_ints(const std::vector<std::int64_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

void preprocess_to_kv(const PreprocessConfig& p, KvFile& kv) {
  kv.set_double("preprocess.bandpass_lo", p.bandpass_lo_hz);
  kv.set_double("preprocess.bandpass_hi", p.bandpass_hi_hz);
  kv.set_int("preprocess.bandpass_order", p.bandpass_order);
  kv.set_double("preprocess.notch", p.notch_hz);
  kv.set_double("preprocess.notch_q", p.notch_q);
  kv.set_double("preprocess.target_rate", p.target_rate_hz);
  kv.set_double("preprocess.segment_s", p.segment_seconds);
  kv.set_double("preprocess.reject_amp_uv", p.reject_threshold_uv);
  kv.set_double("preprocess.unit_uv", p.unit_uv);
  kv.set_double("preprocess.trim_start_s", p.trim_start_s);
  kv.set_double("preprocess.trim_end_s", p.trim_end_s);
}

void pretrain_to_kv(const RunConfig& c, KvFile& kv) {
  kv.set("pretrain.data", c.pretrain_data);
  kv.set_int("pretrain.epochs", c.pretrain.epochs);
  kv.set_int("pretrain.batch", c.pretrain.batch_size);
  kv.set_double("pretrain.lr", c.pretrain.lr);
  kv.set_double("pretrain.min_lr", c.pretrain.min_lr);
  kv.set_int("pretrain.cycle", c.pretrain.cosine_cycle);
  kv.set_double("pretrain.beta1", c.pretrain.beta1);
  kv.set_double("pretrain.beta2", c.pretrain.beta2);
  kv.set_double("pretrain.adam_eps", c.pretrain.adam_eps);
  kv.set_double("pretrain.weight_decay", c.pretrain.weight_decay);
  kv.set_double("pretrain.clip", c.pretrain.clip_norm);
  kv.set_int("pretrain.checkpoint_every", c.pretrain.checkpoint_every);
}

void finetune_to_kv(const RunConfig& c, KvFile& kv) {
  kv.set("finetune.data", c.finetune_data);
  kv.set("finetune.checkpoint", c.finetune_checkpoint);
  kv.set("finetune.train_split", c.train_split);
  kv.set("finetune.val_split", c.val_split);
  kv.set("finetune.test_split", c.test_split);
  kv.set("finetune.task", to_string(c.finetune.task));
  kv.set_int("finetune.classes", c.finetune.n_classes);
  kv.set_int("finetune.epochs", c.finetune.epochs);
  kv.set_int("finetune.batch", c.finetune.batch_size);
  kv.set_double("finetune.lr", c.finetune.lr);
  kv.set_double("finetune.min_lr", c.finetune.min_lr);
  kv.set_int("finetune.cycle", c.finetune.cosine_cycle);
  kv.set_double("finetune.beta1", c.finetune.beta1);
  kv.set_double("finetune.beta2", c.finetune.beta2);
  kv.set_double("finetune.adam_eps", c.finetune.adam_eps);
  kv.set_double("finetune.weight_decay", c.finetune.weight_decay);
  kv.set_double("finetune.clip", c.finetune.clip_norm);
  kv.set_double("finetune.label_smoothing", c.finetune.label_smoothing);
  kv.set_int("finetune.head_hidden", c.finetune.head_hidden);
  kv.set_int("finetune.frozen", c.finetune.frozen ? 1 : 0);
  kv.set_double("finetune.data_fraction", c.finetune.data_fraction);
}

void synth_to_kv(const SyntheticSpec& s, KvFile& kv) {
  kv.set_int("synth.samples", s.n_samples);
  kv.set_int("synth.channels", s.n_channels);
  kv.set_double("synth.duration_s", s.duration_s);
  kv.set_double("synth.rate", s.sample_rate);
  kv.set_int("synth.classes", s.class_count);
  kv.set_double("synth.noise_std", s.noise_std);
  for (std::size_t k = 0; k < s.bands.size(); ++k) {
    const std::string p = "synth.band" + std::to_string(k) + ".";
    kv.set(p + "channels", join_ints(s.bands[k].channels));
    kv.set_double(p + "lo", s.bands[k].freq_lo);
    kv.set_double(p + "hi", s.bands[k].freq_hi);
    kv.set_double(p + "amp", s.bands[k].amplitude);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 1 || threads > 256) throw ConfigError("config: threads must be in [1, 256]");
  if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
  model.validate();
  // Sample-rate-independent half of the preprocessing invariants; the
  // recording-dependent half (notch below the original Nyquist) runs when a
  // recording is actually processed.
  if (!(preprocess.bandpass_lo_hz > 0.0) ||
      !(preprocess.bandpass_lo_hz < preprocess.bandpass_hi_hz) ||
      !(preprocess.bandpass_hi_hz < preprocess.target_rate_hz / 2.0))
    throw ConfigError("config: need 0 < bandpass_lo < bandpass_hi < target_rate/2");
  if (preprocess.bandpass_order < 1 || preprocess.bandpass_order > 8)
    throw ConfigError("config: bandpass_order must be in [1, 8]");
  if (!(preprocess.segment_seconds > 0.0)) throw ConfigError("config: segment_s must be > 0");
  if (!(preprocess.reject_threshold_uv > 0.0))
    throw ConfigError("config: reject_amp_uv must be > 0");
  if (!(preprocess.unit_uv > 0.0)) throw ConfigError("config: unit_uv must be > 0");
  if (preprocess.trim_start_s < 0.0 || preprocess.trim_end_s < 0.0)
    throw ConfigError("config: trim seconds must be >= 0");
  if (synth.class_count < 1) throw ConfigError("config: synth.classes must be >= 1");
  if (synth.bands.size() != static_cast<std::size_t>(synth.class_count))
    throw ConfigError("config: synth needs exactly one band recipe per class (" +
                      std::to_string(synth.class_count) + " classes, " +
                      std::to_string(synth.bands.size()) + " bands)");
  if (synth.n_samples < 1 || synth.n_channels < 1 || !(synth.duration_s > 0.0) ||
      !(synth.sample_rate > 0.0))
    throw ConfigError("config: synth geometry must be positive");
  for (std::size_t k = 0; k < synth.bands.size(); ++k) {
    const BandAssignment& b = synth.bands[k];
    if (b.channels.empty()) throw ConfigError("config: synth.band" + std::to_string(k) +
                                              ".channels must not be empty");
    for (const std::int64_t c : b.channels)
      if (c < 0 || c >= synth.n_channels)
        throw ConfigError("config: synth.band" + std::to_string(k) + " channel out of range");
    if (!(b.freq_lo > 0.0) || !(b.freq_lo <= b.freq_hi) ||
        !(b.freq_hi < synth.sample_rate / 2.0))
      throw ConfigError("config: synth.band" + std::to_string(k) +
                        " needs 0 < lo <= hi < rate/2");
  }
  if (synth.noise_std < 0.0) throw ConfigError("config: synth.noise_std must be >= 0");

  // Numeric screening of the training sections. Their run-time fields
  // (out_dir, seed, threads) are injected by the command right before use,
  // so validate stand-ins to reject bad hyperparameters at load time.
  PretrainConfig t = pretrain;
  t.out_dir = out_dir.empty() ? "-" : out_dir;
  t.threads = 1;
  t.validate();
  FinetuneConfig f = finetune;
  f.out_dir = t.out_dir;
  f.threads = 1;
  f.validate();
}

RunConfig default_run_config() {
  RunConfig c;
  c.synth.n_samples = 2000;
  c.synth.n_channels = 8;
  c.synth.duration_s = 5.0;
  c.synth.sample_rate = 200.0;
  c.synth.class_count = 2;
  c.synth.noise_std = 0.5;
  c.synth.bands = {
      {{0, 1, 2, 3}, 8.0, 12.0, 1.0},
      {{0, 1, 2, 3}, 18.0, 25.0, 1.0},
  };
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  const KvFile kv = KvFile::load(file);
  RunConfig c = default_run_config();

  // Band count first: it determines how many synth.band<k>.* keys are legal.
  if (kv.has("synth.classes")) {
    c.synth.class_count = parse_int("synth.classes", kv.get("synth.classes"));
    if (c.synth.class_count < 1) throw ConfigError("config: synth.classes must be >= 1");
    c.synth.bands.resize(static_cast<std::size_t>(c.synth.class_count));
  }

  // The legal vocabulary is exactly what save_run_config would emit for this
  // band count.
  KvFile known;
  known.set_int("seed", 0);
  known.set("out_dir", "");
  known.set_int("threads", 1);
  c.model.to_kv(known);
  preprocess_to_kv(c.preprocess, known);
  pretrain_to_kv(c, known);
  finetune_to_kv(c, known);
  synth_to_kv(c.synth, known);
  for (const auto& [key, value] : kv.entries())
    if (!known.has(key)) throw ConfigError("config: unknown key '" + key + "'");

  const auto gets = [&kv](const char* key, std::string& out) {
    if (kv.has(key)) out = kv.get(key);
  };
  const auto geti = [&kv](const char* key, std::int64_t& out) {
    if (kv.has(key)) out = parse_int(key, kv.get(key));
  };
  const auto getd = [&kv](const char* key, double& out) {
    if (kv.has(key)) out = parse_double(key, kv.get(key));
  };

  if (kv.has("seed")) c.seed = parse_uint("seed", kv.get("seed"));
  gets("out_dir", c.out_dir);
  if (kv.has("threads")) {
    const std::int64_t t = parse_int("threads", kv.get("threads"));
    c.threads = static_cast<int>(t);
  }

  try {
    c.model = ModelConfig::from_kv(kv);
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  getd("preprocess.bandpass_lo", c.preprocess.bandpass_lo_hz);
  getd("preprocess.bandpass_hi", c.preprocess.bandpass_hi_hz);
  if (kv.has("preprocess.bandpass_order"))
    c.preprocess.bandpass_order =
        static_cast<int>(parse_int("preprocess.bandpass_order", kv.get("preprocess.bandpass_order")));
  getd("preprocess.notch", c.preprocess.notch_hz);
  getd("preprocess.notch_q", c.preprocess.notch_q);
  getd("preprocess.target_rate", c.preprocess.target_rate_hz);
  getd("preprocess.segment_s", c.preprocess.segment_seconds);
  getd("preprocess.reject_amp_uv", c.preprocess.reject_threshold_uv);
  getd("preprocess.unit_uv", c.preprocess.unit_uv);
  getd("preprocess.trim_start_s", c.preprocess.trim_start_s);
  getd("preprocess.trim_end_s", c.preprocess.trim_end_s);

  gets("pretrain.data", c.pretrain_data);
  geti("pretrain.epochs", c.pretrain.epochs);
  geti("pretrain.batch", c.pretrain.batch_size);
  getd("pretrain.lr", c.pretrain.lr);
  getd("pretrain.min_lr", c.pretrain.min_lr);
  geti("pretrain.cycle", c.pretrain.cosine_cycle);
  getd("pretrain.beta1", c.pretrain.beta1);
  getd("pretrain.beta2", c.pretrain.beta2);
  getd("pretrain.adam_eps", c.pretrain.adam_eps);
  getd("pretrain.weight_decay", c.pretrain.weight_decay);
  getd("pretrain.clip", c.pretrain.clip_norm);
  geti("pretrain.checkpoint_every", c.pretrain.checkpoint_every);

  gets("finetune.data", c.finetune_data);
  gets("finetune.checkpoint", c.finetune_checkpoint);
  gets("finetune.train_split", c.train_split);
  gets("finetune.val_split", c.val_split);
  gets("finetune.test_split", c.test_split);
  if (kv.has("finetune.task")) {
    try {
      c.finetune.task = task_from_string(kv.get("finetune.task"));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: finetune.task: ") + e.what());
    }
  }
  geti("finetune.classes", c.finetune.n_classes);
  geti("finetune.epochs", c.finetune.epochs);
  geti("finetune.batch", c.finetune.batch_size);
  getd("finetune.lr", c.finetune.lr);
  getd("finetune.min_lr", c.finetune.min_lr);
  geti("finetune.cycle", c.finetune.cosine_cycle);
  getd("finetune.beta1", c.finetune.beta1);
  getd("finetune.beta2", c.finetune.beta2);
  getd("finetune.adam_eps", c.finetune.adam_eps);
  getd("finetune.weight_decay", c.finetune.weight_decay);
  getd("finetune.clip", c.finetune.clip_norm);
  getd("finetune.label_smoothing", c.finetune.label_smoothing);
  geti("finetune.head_hidden", c.finetune.head_hidden);
  if (kv.has("finetune.frozen"))
    c.finetune.frozen = parse_bool("finetune.frozen", kv.get("finetune.frozen"));
  getd("finetune.data_fraction", c.finetune.data_fraction);

  geti("synth.samples", c.synth.n_samples);
  geti("synth.channels", c.synth.n_channels);
  getd("synth.duration_s", c.synth.duration_s);
  getd("synth.rate", c.synth.sample_rate);
  getd("synth.noise_std", c.synth.noise_std);
  for (std::size_t k = 0; k < c.synth.bands.size(); ++k) {
    const std::string p = "synth.band" + std::to_string(k) + ".";
    if (kv.has(p + "channels"))
      c.synth.bands[k].channels = parse_int_list(p + "channels", kv.get(p + "channels"));
    getd((p + "lo").c_str(), c.synth.bands[k].freq_lo);
    getd((p + "hi").c_str(), c.synth.bands[k].freq_hi);
    getd((p + "amp").c_str(), c.synth.bands[k].amplitude);
  }
  // New band slots left untouched by the file would be invalid; fill them
  // with the first default recipe so a file that only bumps synth.classes
  // still validates against channel bounds below.
  for (std::size_t k = 0; k < c.synth.bands.size(); ++k)
    if (c.synth.bands[k].channels.empty() && !kv.has("synth.band" + std::to_string(k) + ".channels"))
      throw ConfigError("config: synth.band" + std::to_string(k) + ".channels is required for class " +
                        std::to_string(k));

  c.validate();
  return c;
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
  KvFile kv;
  kv.set_int("seed", static_cast<std::int64_t>(cfg.seed));
  kv.set("out_dir", cfg.out_dir);
  kv.set_int("threads", cfg.threads);
  cfg.model.to_kv(kv);
  preprocess_to_kv(cfg.preprocess, kv);
  pretrain_to_kv(cfg, kv);
  finetune_to_kv(cfg, kv);
  synth_to_kv(cfg.synth, kv);
  kv.save(file);
}

}  // namespace cceeg
