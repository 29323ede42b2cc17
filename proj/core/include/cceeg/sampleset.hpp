#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cceeg {

enum class LabelKind { none, integer, real };

// A set of fixed-length multichannel samples (the unit the models consume).
// `data` is [n, channels, timepoints] row-major float32. Integer labels are
// stored exactly in the double vector.
struct SampleSet {
  std::int64_t n = 0;
  std::int64_t channels = 0;
  std::int64_t timepoints = 0;
  double sample_rate = 0.0;
  LabelKind label_kind = LabelKind::none;
  std::vector<float> data;
  std::vector<double> labels;

  const float* sample(std::int64_t i) const {
    return data.data() + i * channels * timepoints;
  }
  float* sample(std::int64_t i) { return data.data() + i * channels * timepoints; }

  void validate() const;
};

// Directory layout: manifest.txt (format_version, kind, n_samples, channels,
// timepoints, sample_rate, label_kind) + data.f32 + labels.txt (one value per
// line; present only when labeled).
void save_sampleset(const SampleSet& set, const std::filesystem::path& dir);
SampleSet load_sampleset(const std::filesystem::path& dir);

// Split files: one zero-based sample index per line. Indices must be unique
// and in range for the set they address.
void save_split(const std::vector<std::int64_t>& indices, const std::filesystem::path& file);
std::vector<std::int64_t> load_split(const std::filesystem::path& file, std::int64_t n_samples);

// Copy the addressed subset (labels follow when present).
SampleSet subset(const SampleSet& set, const std::vector<std::int64_t>& indices);

}  // namespace cceeg
