#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cceeg {

// Classification metrics over integer label vectors (classes 0..k-1; k is
// inferred as 1 + max label seen). Scores for threshold metrics are "higher
// means more positive".

// Mean per-class recall over the classes present in the reference labels.
double balanced_accuracy(const std::vector<std::int64_t>& pred,
                         const std::vector<std::int64_t>& truth);

// Chance-corrected agreement (po - pe) / (1 - pe); errors when pe == 1.
double cohen_kappa(const std::vector<std::int64_t>& pred,
                   const std::vector<std::int64_t>& truth);

// Per-class F1 averaged with weights proportional to reference support.
double weighted_f1(const std::vector<std::int64_t>& pred,
                   const std::vector<std::int64_t>& truth);

// Area under the ROC curve by the rank statistic (ties get averaged ranks).
// Errors unless both classes are present.
double auroc(const std::vector<double>& score, const std::vector<std::int64_t>& truth);

// Area under the precision-recall curve as average precision:
// sum over distinct thresholds of (delta recall) * precision.
double auc_pr(const std::vector<double>& score, const std::vector<std::int64_t>& truth);

// Regression metrics.
double pearson_r(const std::vector<double>& a, const std::vector<double>& b);
double r2_score(const std::vector<double>& pred, const std::vector<double>& truth);
double rmse(const std::vector<double>& pred, const std::vector<double>& truth);

// A flat, ordered metric report. Serialized as key=value lines
// (eval.task, eval.n, metric.<name>).
struct EvalReport {
  std::string task;  // "binary" | "multiclass" | "regression"
  std::int64_t n = 0;
  std::vector<std::pair<std::string, double>> metrics;

  void set(const std::string& name, double v);
  bool has(const std::string& name) const;
  double get(const std::string& name) const;
  void save(const std::filesystem::path& file) const;
  static EvalReport load(const std::filesystem::path& file);
};

}  // namespace cceeg
