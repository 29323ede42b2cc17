#pragma once

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"
#include "cceeg/model_config.hpp"
#include "cceeg/rng.hpp"
#include "cceeg/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cceeg {

enum class InitKind { kaiming, zeros, ones, table };  // table: N(0, 0.02)

struct ParamSpec {
  std::string name;
  std::vector<std::int64_t> shape;
  InitKind init = InitKind::zeros;
  std::int64_t fan_in = 0;  // for kaiming
};

// Single source of truth for every named tensor the encoder owns (task heads
// are registered separately by the fine-tuning layer). Order is stable and
// drives init, checkpointing and parameter counting.
void for_each_param(const ModelConfig& cfg, const std::function<void(const ParamSpec&)>& fn);

// Ordered name -> tensor collection with stable iteration.
template <typename S>
class ParameterSet {
 public:
  void add(const std::string& name, Tensor<S> value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
    index_[name] = names_.size();
    names_.push_back(name);
    values_.push_back(std::move(value));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<S>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return values_[it->second];
  }
  const Tensor<S>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return values_[it->second];
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor<S>& value(std::size_t i) { return values_[i]; }
  const Tensor<S>& value(std::size_t i) const { return values_[i]; }

  std::int64_t total_elements() const {
    std::int64_t n = 0;
    for (const auto& v : values_) n += v.numel();
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<S>> values_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {
template <typename S>
Tensor<S> init_tensor(const ParamSpec& spec, std::uint64_t master_seed) {
  Tensor<S> t(spec.shape);
  switch (spec.init) {
    case InitKind::zeros:
      break;
    case InitKind::ones:
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = S(1);
      break;
    case InitKind::kaiming: {
      Rng rng(derive_seed(master_seed, "init." + spec.name, 0));
      const double std = std::sqrt(2.0 / static_cast<double>(spec.fan_in));
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.normal(0.0, std));
      break;
    }
    case InitKind::table: {
      Rng rng(derive_seed(master_seed, "init." + spec.name, 0));
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.normal(0.0, 0.02));
      break;
    }
  }
  return t;
}
}  // namespace detail

// Fresh parameter set: Kaiming-normal weights, unit norm scales, zero biases
// and mask token, N(0, 0.02) position table. Deterministic in `seed`.
template <typename S>
ParameterSet<S> init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterSet<S> params;
  for_each_param(cfg, [&](const ParamSpec& spec) {
    params.add(spec.name, detail::init_tensor<S>(spec, seed));
  });
  return params;
}

// Total trainable scalar count for the encoder + reconstruction head (task
// heads excluded by construction).
std::int64_t count_params(const ModelConfig& cfg);

// ---- checkpoints ----
//
// A checkpoint is a directory: manifest.txt carries format_version,
// kind=checkpoint, the full model.* config snapshot, bookkeeping keys the
// caller supplies (step, epoch, ...), and one `tensor.<name>=<d0>x<d1>...`
// line per tensor; each tensor lives in `<name>.f32` as raw little-endian
// float32. Training runs in float32, so save/load round-trips are
// bit-exact.

template <typename S>
void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     const ParameterSet<S>& tensors, const KvFile& extra) {
  std::filesystem::create_directories(dir);
  KvFile kv;
  kv.set_int("format_version", 1);
  kv.set("kind", "checkpoint");
  for (const auto& [k, v] : extra.entries()) kv.set(k, v);
  cfg.to_kv(kv);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& name = tensors.names()[i];
    const auto& t = tensors.value(i);
    std::string dims;
    for (std::size_t d = 0; d < t.shape().size(); ++d) {
      if (d) dims += 'x';
      dims += std::to_string(t.shape()[d]);
    }
    kv.set("tensor." + name, dims);
    std::vector<float> buf(static_cast<std::size_t>(t.numel()));
    for (std::int64_t j = 0; j < t.numel(); ++j) buf[static_cast<std::size_t>(j)] = static_cast<float>(t[j]);
    write_f32(dir / (name + ".f32"), buf);
  }
  kv.save(dir / "manifest.txt");
}

std::vector<std::int64_t> parse_dims(const std::string& s);

// Loads every tensor listed in the manifest. Model tensors are validated
// against the registry for `cfg` (shape and presence); the stored config
// snapshot must match `cfg` exactly. Extra tensors (e.g. optimizer moments,
// task heads) are loaded as-is.
template <typename S>
ParameterSet<S> load_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                                KvFile* manifest_out = nullptr) {
  const KvFile kv = KvFile::load(dir / "manifest.txt");
  if (kv.get_int("format_version") != 1)
    throw IoError("checkpoint '" + dir.string() + "': unsupported format_version");
  if (kv.get_or("kind", "checkpoint") != "checkpoint")
    throw IoError("checkpoint '" + dir.string() + "': manifest kind mismatch");

  // The stored architecture must agree with the caller's.
  KvFile want;
  cfg.to_kv(want);
  for (const auto& [k, v] : want.entries()) {
    if (!kv.has(k) || kv.get(k) != v)
      throw IoError("checkpoint '" + dir.string() + "': config mismatch on '" + k +
                    "' (checkpoint has '" + (kv.has(k) ? kv.get(k) : "<missing>") +
                    "', expected '" + v + "')");
  }

  ParameterSet<S> out;
  // Registry tensors first, in registry order, with shape validation.
  for_each_param(cfg, [&](const ParamSpec& spec) {
    const std::string key = "tensor." + spec.name;
    if (!kv.has(key))
      throw IoError("checkpoint '" + dir.string() + "': missing tensor '" + spec.name + "'");
    const auto dims = parse_dims(kv.get(key));
    if (dims != spec.shape)
      throw IoError("checkpoint '" + dir.string() + "': tensor '" + spec.name +
                    "' has shape " + shape_str(dims) + ", expected " + shape_str(spec.shape));
    const auto buf = read_f32(dir / (spec.name + ".f32"), Tensor<float>::numel_of(dims));
    Tensor<S> t(dims);
    for (std::int64_t j = 0; j < t.numel(); ++j) t[j] = static_cast<S>(buf[static_cast<std::size_t>(j)]);
    out.add(spec.name, std::move(t));
  });
  // Any remaining tensors (optimizer state, task head) in manifest order.
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("tensor.", 0) != 0) continue;
    const std::string name = k.substr(7);
    if (out.has(name)) continue;
    const auto dims = parse_dims(v);
    const auto buf = read_f32(dir / (name + ".f32"), Tensor<float>::numel_of(dims));
    Tensor<S> t(dims);
    for (std::int64_t j = 0; j < t.numel(); ++j) t[j] = static_cast<S>(buf[static_cast<std::size_t>(j)]);
    out.add(name, std::move(t));
  }
  if (manifest_out) *manifest_out = kv;
  return out;
}

}  // namespace cceeg
