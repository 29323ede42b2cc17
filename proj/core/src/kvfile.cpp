#include "cceeg/kvfile.hpp"

#include "cceeg/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace cceeg {

static_assert(std::endian::native == std::endian::little,
              "raw float32 container files are little-endian; big-endian hosts are unsupported");

void KvFile::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, value);
}

void KvFile::set_int(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_double(const std::string& key, double value) { set(key, format_double(value)); }

bool KvFile::has(const std::string& key) const { return index_.count(key) > 0; }

const std::string& KvFile::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw IoError("missing key '" + key + "'");
  return entries_[it->second].second;
}

std::int64_t KvFile::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw IoError("key '" + key + "': expected integer, got '" + v + "'");
  return out;
}

double KvFile::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty())
    throw IoError("key '" + key + "': expected number, got '" + v + "'");
  return out;
}

std::string KvFile::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

void KvFile::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  if (!out) throw IoError("write failed: '" + file.string() + "'");
}

KvFile KvFile::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  KvFile kv;
  std::string line;
  std::size_t lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": expected key=value");
    kv.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return kv;
}

void write_f32(const std::filesystem::path& file, const std::vector<float>& data) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("write failed: '" + file.string() + "'");
}

std::vector<float> read_f32(const std::filesystem::path& file, std::int64_t expected) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  const auto bytes = static_cast<std::int64_t>(in.tellg());
  if (bytes % static_cast<std::int64_t>(sizeof(float)) != 0)
    throw IoError("'" + file.string() + "': size is not a multiple of 4 bytes");
  const std::int64_t n = bytes / static_cast<std::int64_t>(sizeof(float));
  if (expected >= 0 && n != expected)
    throw IoError("'" + file.string() + "': expected " + std::to_string(expected) +
                  " float32 values, file holds " + std::to_string(n));
  std::vector<float> data(static_cast<std::size_t>(n));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  if (!in) throw IoError("read failed: '" + file.string() + "'");
  return data;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

}  // namespace cceeg
