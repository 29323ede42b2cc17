#include "cceeg/sampleset.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace cceeg {

namespace {
constexpr int kFormatVersion = 1;

std::string label_kind_str(LabelKind k) {
  switch (k) {
    case LabelKind::none: return "none";
    case LabelKind::integer: return "integer";
    case LabelKind::real: return "real";
  }
  return "none";
}

LabelKind parse_label_kind(const std::string& s) {
  if (s == "none") return LabelKind::none;
  if (s == "integer") return LabelKind::integer;
  if (s == "real") return LabelKind::real;
  throw IoError("unknown label_kind '" + s + "'");
}
}  // namespace

void SampleSet::validate() const {
  if (n < 0) throw ConfigError("sampleset: negative sample count");
  if (n > 0 && (channels < 1 || timepoints < 1))
    throw ConfigError("sampleset: channels and timepoints must be >= 1");
  if (sample_rate <= 0.0 && n > 0) throw ConfigError("sampleset: sample_rate must be > 0");
  if (static_cast<std::int64_t>(data.size()) != n * channels * timepoints)
    throw ConfigError("sampleset: data size does not match n*channels*timepoints");
  if (label_kind == LabelKind::none) {
    if (!labels.empty()) throw ConfigError("sampleset: labels present but label_kind is none");
  } else if (static_cast<std::int64_t>(labels.size()) != n) {
    throw ConfigError("sampleset: label count does not match n");
  }
}

void save_sampleset(const SampleSet& set, const std::filesystem::path& dir) {
  set.validate();
  std::filesystem::create_directories(dir);
  KvFile kv;
  kv.set_int("format_version", kFormatVersion);
  kv.set("kind", "sampleset");
  kv.set_int("n_samples", set.n);
  kv.set_int("channels", set.channels);
  kv.set_int("timepoints", set.timepoints);
  kv.set_double("sample_rate", set.sample_rate);
  kv.set("label_kind", label_kind_str(set.label_kind));
  kv.save(dir / "manifest.txt");
  write_f32(dir / "data.f32", set.data);
  if (set.label_kind != LabelKind::none) {
    std::ofstream out(dir / "labels.txt", std::ios::binary);
    if (!out) throw IoError("cannot write labels in '" + dir.string() + "'");
    for (double v : set.labels) {
      if (set.label_kind == LabelKind::integer)
        out << static_cast<std::int64_t>(std::llround(v)) << '\n';
      else
        out << format_double(v) << '\n';
    }
  }
}

SampleSet load_sampleset(const std::filesystem::path& dir) {
  const KvFile kv = KvFile::load(dir / "manifest.txt");
  if (kv.get_int("format_version") != kFormatVersion)
    throw IoError("sampleset '" + dir.string() + "': unsupported format_version " +
                  kv.get("format_version"));
  if (kv.get_or("kind", "sampleset") != "sampleset")
    throw IoError("sampleset '" + dir.string() + "': manifest kind is '" + kv.get("kind") + "'");
  SampleSet set;
  set.n = kv.get_int("n_samples");
  set.channels = kv.get_int("channels");
  set.timepoints = kv.get_int("timepoints");
  set.sample_rate = kv.get_double("sample_rate");
  set.label_kind = parse_label_kind(kv.get("label_kind"));
  set.data = read_f32(dir / "data.f32", set.n * set.channels * set.timepoints);
  if (set.label_kind != LabelKind::none) {
    std::ifstream in(dir / "labels.txt");
    if (!in) throw IoError("sampleset '" + dir.string() + "': labels.txt missing");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      set.labels.push_back(std::strtod(line.c_str(), nullptr));
    }
  }
  try {
    set.validate();
  } catch (const ConfigError& e) {
    throw IoError("sampleset '" + dir.string() + "': " + e.what());
  }
  return set;
}

void save_split(const std::vector<std::int64_t>& indices, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write split file '" + file.string() + "'");
  for (auto i : indices) out << i << '\n';
}

std::vector<std::int64_t> load_split(const std::filesystem::path& file, std::int64_t n_samples) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open split file '" + file.string() + "'");
  std::vector<std::int64_t> out;
  std::set<std::int64_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    char* end = nullptr;
    const std::int64_t idx = std::strtoll(line.c_str(), &end, 10);
    if (end != line.c_str() + line.size())
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": expected an index");
    if (idx < 0 || idx >= n_samples)
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": index " +
                    std::to_string(idx) + " out of range [0," + std::to_string(n_samples) + ")");
    if (!seen.insert(idx).second)
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": duplicate index " +
                    std::to_string(idx));
    out.push_back(idx);
  }
  if (out.empty()) throw IoError("split file '" + file.string() + "' selects no samples");
  return out;
}

SampleSet subset(const SampleSet& set, const std::vector<std::int64_t>& indices) {
  SampleSet out;
  out.n = static_cast<std::int64_t>(indices.size());
  out.channels = set.channels;
  out.timepoints = set.timepoints;
  out.sample_rate = set.sample_rate;
  out.label_kind = set.label_kind;
  const std::int64_t stride = set.channels * set.timepoints;
  out.data.resize(static_cast<std::size_t>(out.n * stride));
  for (std::int64_t i = 0; i < out.n; ++i) {
    const float* src = set.data.data() + indices[static_cast<std::size_t>(i)] * stride;
    std::copy(src, src + stride, out.data.data() + i * stride);
    if (set.label_kind != LabelKind::none)
      out.labels.push_back(set.labels[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]);
  }
  return out;
}

}  // namespace cceeg
