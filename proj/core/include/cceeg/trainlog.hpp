#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace cceeg {

struct TrainLogRow {
  std::int64_t step = 0;   // global step, 1-based
  std::int64_t epoch = 0;  // 0-based epoch index
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

// Line-delimited training log: a header row followed by one CSV row per
// optimizer step. Values are written with shortest-round-trip formatting so
// a resumed run can be compared line-by-line against the original.
class TrainLog {
 public:
  TrainLog() = default;
  // append=true re-opens an existing log (used on resume).
  void open(const std::string& path, bool append);
  void write(const TrainLogRow& row);
  void close();

  static std::vector<TrainLogRow> read(const std::string& path);

 private:
  std::ofstream out_;
};

}  // namespace cceeg
