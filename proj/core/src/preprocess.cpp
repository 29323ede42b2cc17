#include "cceeg/preprocess.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/filters.hpp"

#include <cmath>

namespace cceeg {

void PreprocessConfig::validate(double fs) const {
  if (!(bandpass_lo_hz > 0.0) || !(bandpass_hi_hz > bandpass_lo_hz))
    throw ConfigError("preprocess: need 0 < bandpass_lo < bandpass_hi");
  if (bandpass_hi_hz >= fs / 2.0)
    throw ConfigError("preprocess: bandpass_hi must be below the Nyquist frequency");
  if (notch_hz > 0.0 && notch_hz >= fs / 2.0)
    throw ConfigError("preprocess: notch frequency must be below the Nyquist frequency");
  if (!(target_rate_hz > 0.0)) throw ConfigError("preprocess: target_rate must be > 0");
  if (target_rate_hz > fs)
    throw ConfigError("preprocess: upsampling above the native rate is not supported");
  if (!(segment_seconds > 0.0)) throw ConfigError("preprocess: segment_seconds must be > 0");
  if (!(reject_threshold_uv > 0.0)) throw ConfigError("preprocess: reject threshold must be > 0");
  if (!(unit_uv > 0.0)) throw ConfigError("preprocess: unit must be > 0");
  if (trim_start_s < 0.0 || trim_end_s < 0.0) throw ConfigError("preprocess: negative trim");
}

namespace {

void apply_sos_per_channel(EEGRecording& rec, const std::vector<Biquad>& sos) {
  const std::int64_t padlen = default_padlen(rec.sample_rate, rec.timepoints);
  std::vector<double> buf(static_cast<std::size_t>(rec.timepoints));
  for (std::int64_t c = 0; c < rec.channels; ++c) {
    for (std::int64_t t = 0; t < rec.timepoints; ++t)
      buf[static_cast<std::size_t>(t)] = rec.at(c, t);
    filtfilt(sos, buf, padlen);
    for (std::int64_t t = 0; t < rec.timepoints; ++t)
      rec.at(c, t) = static_cast<float>(buf[static_cast<std::size_t>(t)]);
  }
}

}  // namespace

void bandpass(EEGRecording& rec, double lo_hz, double hi_hz, int order) {
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz)) throw ConfigError("bandpass: need 0 < lo < hi");
  std::vector<Biquad> sos = butterworth_highpass(order, lo_hz, rec.sample_rate, true);
  const std::vector<Biquad> lp = butterworth_lowpass(order, hi_hz, rec.sample_rate, true);
  sos.insert(sos.end(), lp.begin(), lp.end());
  apply_sos_per_channel(rec, sos);
}

void notch(EEGRecording& rec, double f0_hz, double q) {
  apply_sos_per_channel(rec, {notch_biquad(f0_hz, rec.sample_rate, q)});
}

void resample(EEGRecording& rec, double target_rate_hz) {
  if (!(target_rate_hz > 0.0)) throw ConfigError("resample: target rate must be > 0");
  if (target_rate_hz == rec.sample_rate) return;
  std::vector<double> buf(static_cast<std::size_t>(rec.timepoints));
  std::vector<float> out;
  std::int64_t new_T = -1;
  for (std::int64_t c = 0; c < rec.channels; ++c) {
    for (std::int64_t t = 0; t < rec.timepoints; ++t)
      buf[static_cast<std::size_t>(t)] = rec.at(c, t);
    const std::vector<double> y = resample_signal(buf, rec.sample_rate, target_rate_hz);
    if (new_T < 0) {
      new_T = static_cast<std::int64_t>(y.size());
      out.resize(static_cast<std::size_t>(rec.channels * new_T));
    }
    for (std::int64_t t = 0; t < new_T; ++t)
      out[static_cast<std::size_t>(c * new_T + t)] = static_cast<float>(y[static_cast<std::size_t>(t)]);
  }
  rec.data = std::move(out);
  rec.timepoints = new_T;
  rec.sample_rate = target_rate_hz;
}

void trim(EEGRecording& rec, double trim_start_s, double trim_end_s) {
  if (trim_start_s <= 0.0 && trim_end_s <= 0.0) return;
  const auto cut_start = static_cast<std::int64_t>(std::llround(trim_start_s * rec.sample_rate));
  const auto cut_end = static_cast<std::int64_t>(std::llround(trim_end_s * rec.sample_rate));
  const std::int64_t new_T = rec.timepoints - cut_start - cut_end;
  if (new_T < 1) throw ConfigError("trim: nothing left of the recording");
  std::vector<float> out(static_cast<std::size_t>(rec.channels * new_T));
  for (std::int64_t c = 0; c < rec.channels; ++c)
    for (std::int64_t t = 0; t < new_T; ++t)
      out[static_cast<std::size_t>(c * new_T + t)] = rec.at(c, cut_start + t);
  rec.data = std::move(out);
  rec.timepoints = new_T;
}

SampleSet segment(const EEGRecording& rec, double seconds) {
  const auto len = static_cast<std::int64_t>(std::llround(seconds * rec.sample_rate));
  if (len < 1) throw ConfigError("segment: segment shorter than one sample");
  const std::int64_t count = rec.timepoints / len;
  if (count < 1)
    throw NumericError("segment: recording shorter than one segment (" +
                       std::to_string(rec.timepoints) + " < " + std::to_string(len) + ")");
  SampleSet set;
  set.n = count;
  set.channels = rec.channels;
  set.timepoints = len;
  set.sample_rate = rec.sample_rate;
  set.data.resize(static_cast<std::size_t>(count * rec.channels * len));
  for (std::int64_t s = 0; s < count; ++s)
    for (std::int64_t c = 0; c < rec.channels; ++c)
      for (std::int64_t t = 0; t < len; ++t)
        set.data[static_cast<std::size_t>((s * rec.channels + c) * len + t)] =
            rec.at(c, s * len + t);
  return set;
}

SampleSet reject_bad(const SampleSet& set, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("reject_bad: threshold must be > 0");
  std::vector<std::int64_t> keep;
  const std::int64_t stride = set.channels * set.timepoints;
  for (std::int64_t i = 0; i < set.n; ++i) {
    const float* s = set.sample(i);
    bool ok = true;
    for (std::int64_t j = 0; j < stride && ok; ++j)
      if (std::abs(static_cast<double>(s[j])) > threshold) ok = false;
    if (ok) keep.push_back(i);
  }
  return subset(set, keep);
}

void normalize(SampleSet& set, double unit) {
  if (!(unit > 0.0)) throw ConfigError("normalize: unit must be > 0");
  const auto inv = static_cast<float>(1.0 / unit);
  for (float& v : set.data) v *= inv;
}

SampleSet run_pipeline(const EEGRecording& rec_in, const PreprocessConfig& cfg,
                       PipelineStats* stats) {
  rec_in.validate();
  cfg.validate(rec_in.sample_rate);

  EEGRecording rec = rec_in;
  // Express everything in microvolts so the rejection threshold and the
  // output unit mean what they say.
  const double to_uv = rec.unit_scale * 1e6;
  if (to_uv != 1.0)
    for (float& v : rec.data) v = static_cast<float>(v * to_uv);
  rec.unit_scale = 1e-6;

  trim(rec, cfg.trim_start_s, cfg.trim_end_s);
  bandpass(rec, cfg.bandpass_lo_hz, cfg.bandpass_hi_hz, cfg.bandpass_order);
  if (cfg.notch_hz > 0.0) notch(rec, cfg.notch_hz, cfg.notch_q);
  resample(rec, cfg.target_rate_hz);

  SampleSet set = segment(rec, cfg.segment_seconds);
  const std::int64_t cut = set.n;
  set = reject_bad(set, cfg.reject_threshold_uv);
  if (stats) {
    stats->segments = cut;
    stats->rejected = cut - set.n;
  }
  if (set.n == 0) throw NumericError("preprocess: every segment exceeded the artifact threshold");
  normalize(set, cfg.unit_uv);
  return set;
}

}  // namespace cceeg
