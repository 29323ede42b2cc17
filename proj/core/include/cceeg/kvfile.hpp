#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cceeg {

// Ordered key=value text file: one pair per line, UTF-8, '#' comments and
// blank lines ignored on read. Insertion order is preserved on write so
// emitted files are byte-reproducible.
class KvFile {
 public:
  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, std::int64_t value);
  void set_double(const std::string& key, double value);

  bool has(const std::string& key) const;
  // get_* throw IoError when the key is missing or fails to parse.
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void save(const std::filesystem::path& file) const;
  static KvFile load(const std::filesystem::path& file);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Raw little-endian float32 array files (the payload format next to every
// manifest). Loading checks the element count against `expected` when >= 0.
void write_f32(const std::filesystem::path& file, const std::vector<float>& data);
std::vector<float> read_f32(const std::filesystem::path& file, std::int64_t expected = -1);

// Render a double so it round-trips exactly through text.
std::string format_double(double v);

}  // namespace cceeg
