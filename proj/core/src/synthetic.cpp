#include "cceeg/synthetic.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/rng.hpp"

#include <cmath>

namespace cceeg {

SampleSet generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_samples < 1) throw ConfigError("synthetic: n_samples must be >= 1");
  if (spec.n_channels < 1) throw ConfigError("synthetic: n_channels must be >= 1");
  if (spec.duration_s <= 0.0) throw ConfigError("synthetic: duration_s must be > 0");
  if (spec.sample_rate <= 0.0) throw ConfigError("synthetic: sample_rate must be > 0");
  if (spec.class_count < 1) throw ConfigError("synthetic: class_count must be >= 1");
  if (static_cast<std::int64_t>(spec.bands.size()) != spec.class_count)
    throw ConfigError("synthetic: need exactly one band assignment per class");
  if (spec.noise_std < 0.0) throw ConfigError("synthetic: noise_std must be >= 0");
  const double nyquist = spec.sample_rate / 2.0;
  for (const auto& b : spec.bands) {
    if (b.freq_lo <= 0.0 || b.freq_hi < b.freq_lo)
      throw ConfigError("synthetic: band must satisfy 0 < freq_lo <= freq_hi");
    if (b.freq_hi >= nyquist)
      throw ConfigError("synthetic: band exceeds the Nyquist frequency");
    if (b.channels.empty()) throw ConfigError("synthetic: band has no channels");
    for (auto c : b.channels)
      if (c < 0 || c >= spec.n_channels)
        throw ConfigError("synthetic: band channel index out of range");
  }

  SampleSet set;
  set.n = spec.n_samples;
  set.channels = spec.n_channels;
  set.timepoints = static_cast<std::int64_t>(std::llround(spec.duration_s * spec.sample_rate));
  if (set.timepoints < 1) throw ConfigError("synthetic: duration too short for sample rate");
  set.sample_rate = spec.sample_rate;
  set.label_kind = spec.class_count > 1 ? LabelKind::integer : LabelKind::none;
  set.data.assign(static_cast<std::size_t>(set.n * set.channels * set.timepoints), 0.0f);

  const std::int64_t T = set.timepoints;
  for (std::int64_t i = 0; i < set.n; ++i) {
    const std::int64_t cls = i % spec.class_count;
    const BandAssignment& band = spec.bands[static_cast<std::size_t>(cls)];
    Rng rng(derive_seed(spec.seed, "synth.sample", static_cast<std::uint64_t>(i)));
    const double f = band.freq_lo == band.freq_hi ? band.freq_lo
                                                  : rng.uniform(band.freq_lo, band.freq_hi);
    float* s = set.sample(i);
    for (auto c : band.channels)
      for (std::int64_t t = 0; t < T; ++t)
        s[c * T + t] = static_cast<float>(
            band.amplitude * std::sin(2.0 * M_PI * f * static_cast<double>(t) / spec.sample_rate));
    if (spec.noise_std > 0.0)
      for (std::int64_t c = 0; c < set.channels; ++c)
        for (std::int64_t t = 0; t < T; ++t)
          s[c * T + t] += static_cast<float>(rng.normal(0.0, spec.noise_std));
    if (set.label_kind == LabelKind::integer) set.labels.push_back(static_cast<double>(cls));
  }
  return set;
}

}  // namespace cceeg
