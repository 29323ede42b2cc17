#include "cceeg/metrics.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/kvfile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cceeg {

namespace {

// Row-major confusion matrix; rows = truth, cols = prediction.
std::vector<std::int64_t> confusion(const std::vector<std::int64_t>& pred,
                                    const std::vector<std::int64_t>& truth,
                                    std::int64_t& k_out) {
  if (pred.size() != truth.size() || pred.empty())
    throw NumericError("metrics: prediction/label size mismatch or empty input");
  std::int64_t k = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) throw NumericError("metrics: negative class label");
    k = std::max({k, pred[i] + 1, truth[i] + 1});
  }
  std::vector<std::int64_t> m(static_cast<std::size_t>(k * k), 0);
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++m[static_cast<std::size_t>(truth[i] * k + pred[i])];
  k_out = k;
  return m;
}

void check_binary(const std::vector<double>& score, const std::vector<std::int64_t>& truth) {
  if (score.size() != truth.size() || score.empty())
    throw NumericError("metrics: score/label size mismatch or empty input");
  bool pos = false, neg = false;
  for (auto y : truth) {
    if (y == 0) neg = true;
    else if (y == 1) pos = true;
    else throw NumericError("metrics: binary labels must be 0 or 1");
  }
  if (!pos || !neg) throw NumericError("metrics: need both classes for a ranking metric");
}

}  // namespace

double balanced_accuracy(const std::vector<std::int64_t>& pred,
                         const std::vector<std::int64_t>& truth) {
  std::int64_t k = 0;
  const auto m = confusion(pred, truth, k);
  double sum = 0.0;
  std::int64_t present = 0;
  for (std::int64_t c = 0; c < k; ++c) {
    std::int64_t support = 0, hit = m[static_cast<std::size_t>(c * k + c)];
    for (std::int64_t j = 0; j < k; ++j) support += m[static_cast<std::size_t>(c * k + j)];
    if (support == 0) continue;
    sum += static_cast<double>(hit) / static_cast<double>(support);
    ++present;
  }
  if (present == 0) throw NumericError("metrics: no labeled classes");
  return sum / static_cast<double>(present);
}

double cohen_kappa(const std::vector<std::int64_t>& pred,
                   const std::vector<std::int64_t>& truth) {
  std::int64_t k = 0;
  const auto m = confusion(pred, truth, k);
  const double n = static_cast<double>(pred.size());
  double po = 0.0, pe = 0.0;
  for (std::int64_t c = 0; c < k; ++c) {
    po += static_cast<double>(m[static_cast<std::size_t>(c * k + c)]) / n;
    std::int64_t row = 0, col = 0;
    for (std::int64_t j = 0; j < k; ++j) {
      row += m[static_cast<std::size_t>(c * k + j)];
      col += m[static_cast<std::size_t>(j * k + c)];
    }
    pe += (static_cast<double>(row) / n) * (static_cast<double>(col) / n);
  }
  if (std::abs(1.0 - pe) < 1e-300)
    throw NumericError("metrics: kappa undefined (expected agreement is 1)");
  return (po - pe) / (1.0 - pe);
}

double weighted_f1(const std::vector<std::int64_t>& pred,
                   const std::vector<std::int64_t>& truth) {
  std::int64_t k = 0;
  const auto m = confusion(pred, truth, k);
  const double n = static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::int64_t c = 0; c < k; ++c) {
    std::int64_t tp = m[static_cast<std::size_t>(c * k + c)], support = 0, predicted = 0;
    for (std::int64_t j = 0; j < k; ++j) {
      support += m[static_cast<std::size_t>(c * k + j)];
      predicted += m[static_cast<std::size_t>(j * k + c)];
    }
    if (support == 0) continue;
    const double denom = static_cast<double>(support + predicted);
    const double f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    sum += f1 * static_cast<double>(support) / n;
  }
  return sum;
}

double auroc(const std::vector<double>& score, const std::vector<std::int64_t>& truth) {
  check_binary(score, truth);
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  // Average ranks across ties, then the Mann-Whitney statistic.
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t q = i; q <= j; ++q) rank[order[q]] = avg;
    i = j + 1;
  }
  double rank_pos = 0.0;
  std::int64_t n_pos = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if (truth[q] == 1) {
      rank_pos += rank[q];
      ++n_pos;
    }
  }
  const double p = static_cast<double>(n_pos);
  const double m = static_cast<double>(n) - p;
  return (rank_pos - p * (p + 1.0) / 2.0) / (p * m);
}

double auc_pr(const std::vector<double>& score, const std::vector<std::int64_t>& truth) {
  check_binary(score, truth);
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  double n_pos = 0.0;
  for (auto y : truth) n_pos += (y == 1) ? 1.0 : 0.0;
  double tp = 0.0, fp = 0.0, ap = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;  // consume a group of tied scores as one threshold
    while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
    for (std::size_t q = i; q <= j; ++q) {
      if (truth[order[q]] == 1) tp += 1.0;
      else fp += 1.0;
    }
    const double precision = tp / (tp + fp);
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return ap;
}

double pearson_r(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw NumericError("metrics: pearson needs two same-length vectors of size >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw NumericError("metrics: pearson undefined for a constant vector");
  return sab / std::sqrt(saa * sbb);
}

double r2_score(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw NumericError("metrics: prediction/label size mismatch or empty input");
  double mean = 0.0;
  for (auto v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot <= 0.0) throw NumericError("metrics: R^2 undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw NumericError("metrics: prediction/label size mismatch or empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    ss += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

void EvalReport::set(const std::string& name, double v) {
  for (auto& [k, val] : metrics) {
    if (k == name) {
      val = v;
      return;
    }
  }
  metrics.emplace_back(name, v);
}

bool EvalReport::has(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return true;
  return false;
}

double EvalReport::get(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  throw IoError("eval report: no metric named '" + name + "'");
}

void EvalReport::save(const std::filesystem::path& file) const {
  KvFile kv;
  kv.set("eval.task", task);
  kv.set_int("eval.n", n);
  for (const auto& [k, v] : metrics) kv.set_double("metric." + k, v);
  kv.save(file);
}

EvalReport EvalReport::load(const std::filesystem::path& file) {
  const KvFile kv = KvFile::load(file);
  EvalReport r;
  r.task = kv.get("eval.task");
  r.n = kv.get_int("eval.n");
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("metric.", 0) == 0) r.set(k.substr(7), kv.get_double(k));
  }
  return r;
}

}  // namespace cceeg
