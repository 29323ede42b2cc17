#include <doctest.h>

#include "cceeg/dft.hpp"
#include "cceeg/errors.hpp"
#include "cceeg/preprocess.hpp"
#include "cceeg/recording.hpp"
#include "cceeg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

using cceeg::bandpass;
using cceeg::EEGRecording;
using cceeg::notch;
using cceeg::NumericError;
using cceeg::PipelineStats;
using cceeg::PreprocessConfig;
using cceeg::RealDft;
using cceeg::resample;
using cceeg::Rng;
using cceeg::run_pipeline;
using cceeg::SampleSet;

namespace {

EEGRecording tone_recording(std::int64_t channels, double fs, double seconds, double freq_hz,
                            double amp) {
  EEGRecording rec;
  rec.channels = channels;
  rec.timepoints = static_cast<std::int64_t>(std::llround(fs * seconds));
  rec.sample_rate = fs;
  rec.unit_scale = 1e-6;  // stored values are microvolts
  rec.data.resize(static_cast<std::size_t>(rec.channels * rec.timepoints));
  for (std::int64_t c = 0; c < channels; ++c)
    for (std::int64_t t = 0; t < rec.timepoints; ++t)
      rec.at(c, t) = static_cast<float>(
          amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(t) / fs));
  return rec;
}

// RMS over the middle half of a channel, away from filter edge transients.
double mid_rms(const EEGRecording& rec, std::int64_t c) {
  const std::int64_t lo = rec.timepoints / 4, hi = 3 * rec.timepoints / 4;
  double acc = 0.0;
  for (std::int64_t t = lo; t < hi; ++t) {
    const double v = rec.at(c, t);
    acc += v * v;
  }
  return std::sqrt(acc / static_cast<double>(hi - lo));
}

}  // namespace

TEST_CASE("60 Hz notch attenuates a 60 Hz tone by at least 20 dB") {
  EEGRecording rec = tone_recording(1, 256.0, 20.0, 60.0, 10.0);
  const double before = mid_rms(rec, 0);
  notch(rec, 60.0, 30.0);
  const double after = mid_rms(rec, 0);
  const double attenuation_db = 20.0 * std::log10(before / after);
  CAPTURE(attenuation_db);
  CHECK(attenuation_db >= 20.0);
}

TEST_CASE("notch leaves neighboring frequencies essentially untouched") {
  EEGRecording rec = tone_recording(1, 256.0, 20.0, 20.0, 10.0);
  const double before = mid_rms(rec, 0);
  notch(rec, 60.0, 30.0);
  CHECK(mid_rms(rec, 0) == doctest::Approx(before).epsilon(0.02));
}

TEST_CASE("band limiting removes slow drift and passes mid-band tones") {
  SUBCASE("0.05 Hz drift is crushed by the 0.3 Hz highpass edge") {
    EEGRecording rec = tone_recording(1, 256.0, 60.0, 0.05, 50.0);
    const double before = mid_rms(rec, 0);
    bandpass(rec, 0.3, 75.0, 4);
    CHECK(mid_rms(rec, 0) < 0.05 * before);
  }
  SUBCASE("a 20 Hz tone inside the band keeps its amplitude") {
    EEGRecording rec = tone_recording(1, 256.0, 60.0, 20.0, 10.0);
    const double before = mid_rms(rec, 0);
    bandpass(rec, 0.3, 75.0, 4);
    CHECK(mid_rms(rec, 0) == doctest::Approx(before).epsilon(0.05));
  }
}

TEST_CASE("rate conversion from 256 to 200 Hz preserves a 20 Hz tone's spectral peak") {
  EEGRecording rec = tone_recording(1, 256.0, 10.0, 20.0, 10.0);
  resample(rec, 200.0);
  CHECK(rec.sample_rate == 200.0);
  CHECK(rec.timepoints == 2000);

  // At 200 Hz a 1 s window holds an integer number of 20 Hz cycles, so the
  // tone lands exactly in bin 20 wherever the window starts.
  const RealDft dft(200);
  std::vector<double> window(200);
  for (std::int64_t j = 0; j < 200; ++j)
    window[static_cast<std::size_t>(j)] = rec.at(0, 800 + j);
  const std::vector<double> e = dft.energy(window.data());
  const auto peak = std::max_element(e.begin(), e.end()) - e.begin();
  CHECK(peak == 20);
  double total = 0.0;
  for (const double v : e) total += v;
  CHECK(e[20] / total > 0.95);

  // Amplitude survives the polyphase path too.
  double acc = 0.0;
  for (std::int64_t t = 500; t < 1500; ++t) acc += rec.at(0, t) * rec.at(0, t);
  CHECK(std::sqrt(acc / 1000.0) == doctest::Approx(10.0 / std::sqrt(2.0)).epsilon(0.03));
}

TEST_CASE("pipeline rejects segments whose amplitude exceeds the artifact threshold") {
  // 95 s at 256 Hz -> resampled to 200 Hz -> three full 30 s segments.
  EEGRecording rec = tone_recording(2, 256.0, 95.0, 20.0, 30.0);
  // A 150 uV in-band burst placed inside what becomes the second segment.
  for (std::int64_t t = 40 * 256; t < 41 * 256; ++t)
    rec.at(1, t) = static_cast<float>(
        150.0 * std::sin(2.0 * M_PI * 20.0 * static_cast<double>(t) / 256.0));

  PreprocessConfig cfg;
  PipelineStats stats;
  const SampleSet set = run_pipeline(rec, cfg, &stats);
  CHECK(stats.segments == 3);
  CHECK(stats.rejected == 1);
  CHECK(set.n == 2);
  CHECK(set.sample_rate == 200.0);
  CHECK(set.timepoints == 6000);

  // Survivors are expressed in units of 100 uV, so they stay within +/-1.
  for (const float v : set.data) CHECK(std::abs(v) <= 1.0f);
}

TEST_CASE("pipeline errors out when every segment is an artifact") {
  EEGRecording rec = tone_recording(1, 256.0, 65.0, 20.0, 500.0);
  PreprocessConfig cfg;
  PipelineStats stats;
  CHECK_THROWS_AS(run_pipeline(rec, cfg, &stats), NumericError);
  CHECK(stats.segments == 2);
  CHECK(stats.rejected == 2);
}

TEST_CASE("trimming removes lead-in before segmentation") {
  EEGRecording rec = tone_recording(1, 256.0, 95.0, 20.0, 30.0);
  PreprocessConfig cfg;
  cfg.trim_start_s = 30.0;
  cfg.trim_end_s = 5.0;
  const SampleSet set = run_pipeline(rec, cfg, nullptr);
  CHECK(set.n == 2);  // 60 s remain
}

TEST_CASE("unit metadata makes volt- and microvolt-coded inputs equivalent") {
  EEGRecording in_uv = tone_recording(1, 256.0, 65.0, 20.0, 30.0);
  EEGRecording in_v = in_uv;
  in_v.unit_scale = 1.0;  // stored values are volts
  for (float& v : in_v.data) v *= 1e-6f;

  PreprocessConfig cfg;
  const SampleSet a = run_pipeline(in_uv, cfg, nullptr);
  const SampleSet b = run_pipeline(in_v, cfg, nullptr);
  REQUIRE(a.data.size() == b.data.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  CHECK(worst < 1e-5);
}

TEST_CASE("pipeline configuration is validated against the native rate") {
  EEGRecording rec = tone_recording(1, 256.0, 65.0, 20.0, 30.0);
  PreprocessConfig cfg;

  SUBCASE("band edge above Nyquist") {
    cfg.bandpass_hi_hz = 130.0;
    CHECK_THROWS_AS(run_pipeline(rec, cfg, nullptr), cceeg::ConfigError);
  }
  SUBCASE("upsampling refused") {
    cfg.target_rate_hz = 512.0;
    CHECK_THROWS_AS(run_pipeline(rec, cfg, nullptr), cceeg::ConfigError);
  }
  SUBCASE("inverted band") {
    cfg.bandpass_lo_hz = 80.0;
    cfg.bandpass_hi_hz = 10.0;
    CHECK_THROWS_AS(run_pipeline(rec, cfg, nullptr), cceeg::ConfigError);
  }
}
