#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cceeg {

// One continuous multichannel recording. `data` is [channels, timepoints]
// row-major float32; `unit_scale` converts stored values to physical volts
// (e.g. 1e-6 means values are microvolts).
struct EEGRecording {
  std::int64_t channels = 0;
  std::int64_t timepoints = 0;
  double sample_rate = 0.0;
  double unit_scale = 1e-6;
  std::vector<std::string> channel_names;
  std::vector<float> data;

  float& at(std::int64_t c, std::int64_t t) {
    return data[static_cast<std::size_t>(c * timepoints + t)];
  }
  float at(std::int64_t c, std::int64_t t) const {
    return data[static_cast<std::size_t>(c * timepoints + t)];
  }

  // Throws ConfigError if fields are inconsistent.
  void validate() const;
};

// On-disk layout: a directory holding `manifest.txt` (key=value lines:
// format_version, kind, channels, timepoints, sample_rate, unit_scale,
// channel_names) and `data.f32` (raw little-endian float32, [C,T] row-major).
void save_recording(const EEGRecording& rec, const std::filesystem::path& dir);
EEGRecording load_recording(const std::filesystem::path& dir);

}  // namespace cceeg
