#include "cceeg/recording.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <sstream>

namespace cceeg {

namespace {
constexpr int kFormatVersion = 1;

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}
}  // namespace

void EEGRecording::validate() const {
  if (channels < 1) throw ConfigError("recording: channels must be >= 1");
  if (timepoints < 1) throw ConfigError("recording: timepoints must be >= 1");
  if (sample_rate <= 0.0) throw ConfigError("recording: sample_rate must be > 0");
  if (unit_scale <= 0.0) throw ConfigError("recording: unit_scale must be > 0");
  if (!channel_names.empty() && static_cast<std::int64_t>(channel_names.size()) != channels)
    throw ConfigError("recording: channel_names count does not match channels");
  if (static_cast<std::int64_t>(data.size()) != channels * timepoints)
    throw ConfigError("recording: data size does not match channels*timepoints");
}

void save_recording(const EEGRecording& rec, const std::filesystem::path& dir) {
  rec.validate();
  std::filesystem::create_directories(dir);
  KvFile kv;
  kv.set_int("format_version", kFormatVersion);
  kv.set("kind", "recording");
  kv.set_int("channels", rec.channels);
  kv.set_int("timepoints", rec.timepoints);
  kv.set_double("sample_rate", rec.sample_rate);
  kv.set_double("unit_scale", rec.unit_scale);
  kv.set("channel_names", join_names(rec.channel_names));
  kv.save(dir / "manifest.txt");
  write_f32(dir / "data.f32", rec.data);
}

EEGRecording load_recording(const std::filesystem::path& dir) {
  const KvFile kv = KvFile::load(dir / "manifest.txt");
  if (kv.get_int("format_version") != kFormatVersion)
    throw IoError("recording '" + dir.string() + "': unsupported format_version " +
                  kv.get("format_version"));
  if (kv.get_or("kind", "recording") != "recording")
    throw IoError("recording '" + dir.string() + "': manifest kind is '" + kv.get("kind") + "'");
  EEGRecording rec;
  rec.channels = kv.get_int("channels");
  rec.timepoints = kv.get_int("timepoints");
  rec.sample_rate = kv.get_double("sample_rate");
  rec.unit_scale = kv.get_double("unit_scale");
  if (kv.has("channel_names") && !kv.get("channel_names").empty())
    rec.channel_names = split_names(kv.get("channel_names"));
  rec.data = read_f32(dir / "data.f32", rec.channels * rec.timepoints);
  try {
    rec.validate();
  } catch (const ConfigError& e) {
    throw IoError("recording '" + dir.string() + "': " + e.what());
  }
  return rec;
}

}  // namespace cceeg
