#pragma once

#include "cceeg/recording.hpp"
#include "cceeg/sampleset.hpp"

namespace cceeg {

// Recording-level cleanup chain. Filters operate in place per channel and are
// unit-agnostic; thresholding and normalization interpret values as
// microvolts, which run_pipeline guarantees by converting first.
struct PreprocessConfig {
  double bandpass_lo_hz = 0.3;
  double bandpass_hi_hz = 75.0;
  int bandpass_order = 4;        // per side (highpass and lowpass cascades)
  double notch_hz = 60.0;        // <= 0 disables the notch
  double notch_q = 30.0;
  double target_rate_hz = 200.0;
  double segment_seconds = 30.0;
  double reject_threshold_uv = 100.0;
  double unit_uv = 100.0;        // amplitude unit the normalized output is expressed in
  double trim_start_s = 0.0;     // optional lead/tail trimming, off by default
  double trim_end_s = 0.0;

  void validate(double fs) const;
};

// Zero-phase band limiting: order-`order` Butterworth highpass at `lo_hz`
// cascaded with the matching lowpass at `hi_hz`, both compensated so the
// two-pass -3 dB points land on the nominal edges.
void bandpass(EEGRecording& rec, double lo_hz, double hi_hz, int order = 4);

// Zero-phase constrained notch at f0_hz.
void notch(EEGRecording& rec, double f0_hz, double q = 30.0);

// Rate conversion of every channel; updates sample_rate and timepoints.
void resample(EEGRecording& rec, double target_rate_hz);

// Drop the first trim_start_s and last trim_end_s seconds.
void trim(EEGRecording& rec, double trim_start_s, double trim_end_s);

// Cut into non-overlapping fixed-length segments (floor(T/len) of them,
// remainder discarded). Values are copied as stored.
SampleSet segment(const EEGRecording& rec, double seconds);

// Remove samples containing any |value| > threshold (same units as data).
SampleSet reject_bad(const SampleSet& set, double threshold);

// Divide every value by unit (e.g. 100 uV -> dimensionless model units).
void normalize(SampleSet& set, double unit);

// Segment/rejection counts for operator reporting.
struct PipelineStats {
  std::int64_t segments = 0;  // segments cut, before rejection
  std::int64_t rejected = 0;
};

// Full chain: convert to microvolts, trim, bandpass, notch, resample,
// segment, reject, normalize. Throws NumericError when rejection leaves no
// samples (stats, when given, are filled first).
SampleSet run_pipeline(const EEGRecording& rec, const PreprocessConfig& cfg,
                       PipelineStats* stats = nullptr);

}  // namespace cceeg
