#include "cceeg/trainlog.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <sstream>

namespace cceeg {

void TrainLog::open(const std::string& path, bool append) {
  out_.open(path, append ? (std::ios::out | std::ios::app) : std::ios::out);
  if (!out_) throw IoError("cannot open training log for writing: " + path);
  if (!append) out_ << "step,epoch,loss,lr,grad_norm\n";
}

void TrainLog::write(const TrainLogRow& row) {
  out_ << row.step << ',' << row.epoch << ',' << format_double(row.loss) << ','
       << format_double(row.lr) << ',' << format_double(row.grad_norm) << '\n';
  out_.flush();
  if (!out_) throw IoError("write to training log failed");
}

void TrainLog::close() {
  if (out_.is_open()) out_.close();
}

std::vector<TrainLogRow> TrainLog::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training log: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("training log is empty: " + path);
  std::vector<TrainLogRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    TrainLogRow r;
    try {
      std::getline(ss, field, ',');
      r.step = std::stoll(field);
      std::getline(ss, field, ',');
      r.epoch = std::stoll(field);
      std::getline(ss, field, ',');
      r.loss = std::stod(field);
      std::getline(ss, field, ',');
      r.lr = std::stod(field);
      std::getline(ss, field, ',');
      r.grad_norm = std::stod(field);
    } catch (const std::exception&) {
      throw IoError("malformed training log line: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace cceeg
