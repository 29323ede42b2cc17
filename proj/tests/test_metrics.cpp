#include <doctest.h>

#include "cceeg/errors.hpp"
#include "cceeg/metrics.hpp"
#include "cceeg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

using cceeg::auc_pr;
using cceeg::auroc;
using cceeg::balanced_accuracy;
using cceeg::cohen_kappa;
using cceeg::EvalReport;
using cceeg::NumericError;
using cceeg::pearson_r;
using cceeg::r2_score;
using cceeg::rmse;
using cceeg::Rng;
using cceeg::weighted_f1;

namespace {

// Expand a confusion matrix (rows = truth, columns = prediction) into label
// vectors.
void expand(const std::vector<std::vector<int>>& confusion, std::vector<std::int64_t>& pred,
            std::vector<std::int64_t>& truth) {
  for (std::size_t t = 0; t < confusion.size(); ++t)
    for (std::size_t p = 0; p < confusion[t].size(); ++p)
      for (int i = 0; i < confusion[t][p]; ++i) {
        truth.push_back(static_cast<std::int64_t>(t));
        pred.push_back(static_cast<std::int64_t>(p));
      }
}

}  // namespace

TEST_CASE("classification metrics match hand-computed values on [[50,10],[5,35]]") {
  std::vector<std::int64_t> pred, truth;
  expand({{50, 10}, {5, 35}}, pred, truth);

  // po = 85/100; pe = 0.6*0.55 + 0.4*0.45 = 0.51; kappa = 0.34/0.49.
  CHECK(cohen_kappa(pred, truth) == doctest::Approx(0.69387755102040816).epsilon(1e-12));
  // Recalls 50/60 and 35/40.
  CHECK(balanced_accuracy(pred, truth) ==
        doctest::Approx(0.5 * (50.0 / 60.0 + 35.0 / 40.0)).epsilon(1e-12));
  // F1 per class: 100/115 and 70/85, support-weighted 60:40.
  CHECK(weighted_f1(pred, truth) ==
        doctest::Approx(0.6 * (100.0 / 115.0) + 0.4 * (70.0 / 85.0)).epsilon(1e-12));
}

TEST_CASE("ranking metrics handle ties, perfect order, and inversions") {
  // Tied scores across both classes: every pair is half-won.
  CHECK(auroc({1.0, 1.0, 0.0, 0.0}, {1, 0, 1, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(auroc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(auroc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
  // One discordant pair among 2x2: 3/4 wins.
  CHECK(auroc({0.9, 0.3, 0.4, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(auc_pr({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("AUROC of random scores on balanced labels sits at one half") {
  Rng rng(123);
  std::vector<double> score(10000);
  std::vector<std::int64_t> truth(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) {
    score[i] = rng.uniform();
    truth[i] = static_cast<std::int64_t>(i % 2);
  }
  CHECK(std::abs(auroc(score, truth) - 0.5) < 0.02);
}

TEST_CASE("degenerate inputs raise numeric errors instead of silent nonsense") {
  CHECK_THROWS_AS(auroc({0.5, 0.6}, {1, 1}), NumericError);        // one class only
  CHECK_THROWS_AS(auroc({0.5}, {1, 0}), NumericError);             // size mismatch
  CHECK_THROWS_AS(cohen_kappa({0, 0}, {0, 0}), NumericError);      // pe == 1
  CHECK_THROWS_AS(balanced_accuracy({}, {}), NumericError);        // empty
  CHECK_THROWS_AS(pearson_r({1.0, 1.0}, {1.0, 2.0}), NumericError);  // constant vector
  CHECK_THROWS_AS(auroc({0.5, 0.6}, {0, 2}), NumericError);        // non-binary label
}

TEST_CASE("regression metrics match hand-computed values") {
  const std::vector<double> pred = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> truth = {1.5, 2.0, 2.5, 5.0};

  double se = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    se += d * d;
  }
  CHECK(rmse(pred, truth) == doctest::Approx(std::sqrt(se / 4.0)).epsilon(1e-12));

  const double mean_t = (1.5 + 2.0 + 2.5 + 5.0) / 4.0;
  double ss_tot = 0.0;
  for (const double v : truth) ss_tot += (v - mean_t) * (v - mean_t);
  CHECK(r2_score(pred, truth) == doctest::Approx(1.0 - se / ss_tot).epsilon(1e-12));

  CHECK(pearson_r({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson_r({1.0, 2.0, 3.0}, {6.0, 4.0, 2.0}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("library metrics agree with brute-force references on small random sets") {
  Rng rng(555);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 10 + static_cast<std::int64_t>(rng.below(41));  // 10..50
    const int k = 2 + static_cast<int>(rng.below(3));

    std::vector<std::int64_t> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] =
          static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k)));
      truth[static_cast<std::size_t>(i)] =
          i < k ? i : static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k)));
    }

    // Balanced accuracy: mean recall.
    double ref_ba = 0.0;
    for (int c = 0; c < k; ++c) {
      double tp = 0, total = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        if (truth[static_cast<std::size_t>(i)] != c) continue;
        ++total;
        if (pred[static_cast<std::size_t>(i)] == c) ++tp;
      }
      ref_ba += tp / total;
    }
    ref_ba /= k;
    worst = std::max(worst, std::abs(balanced_accuracy(pred, truth) - ref_ba));

    // Kappa from raw po/pe sums.
    double po = 0.0, pe = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      if (pred[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(i)]) po += 1.0;
    po /= static_cast<double>(n);
    for (int c = 0; c < k; ++c) {
      double row = 0, col = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        if (truth[static_cast<std::size_t>(i)] == c) ++row;
        if (pred[static_cast<std::size_t>(i)] == c) ++col;
      }
      pe += (row / static_cast<double>(n)) * (col / static_cast<double>(n));
    }
    worst = std::max(worst, std::abs(cohen_kappa(pred, truth) - (po - pe) / (1.0 - pe)));

    // AUROC as the pairwise win rate with half-credit ties; coarse scores
    // force plenty of ties.
    std::vector<double> score(static_cast<std::size_t>(n));
    std::vector<std::int64_t> bt(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      score[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(6)) / 6.0;
      bt[static_cast<std::size_t>(i)] = i < 2 ? i % 2 : static_cast<std::int64_t>(rng.below(2));
    }
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (bt[static_cast<std::size_t>(i)] != 1) continue;
      for (std::int64_t j = 0; j < n; ++j) {
        if (bt[static_cast<std::size_t>(j)] != 0) continue;
        ++pairs;
        const double a = score[static_cast<std::size_t>(i)], b = score[static_cast<std::size_t>(j)];
        wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
      }
    }
    worst = std::max(worst, std::abs(auroc(score, bt) - wins / static_cast<double>(pairs)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("evaluation reports round-trip through their text form") {
  EvalReport rep;
  rep.task = "binary";
  rep.n = 42;
  rep.set("auroc", 0.875);
  rep.set("cohen_kappa", -0.125);

  const auto file = std::filesystem::temp_directory_path() / "cceeg_test_eval_report.txt";
  rep.save(file);
  const EvalReport back = EvalReport::load(file);
  std::filesystem::remove(file);

  CHECK(back.task == "binary");
  CHECK(back.n == 42);
  REQUIRE(back.has("auroc"));
  REQUIRE(back.has("cohen_kappa"));
  CHECK(back.get("auroc") == 0.875);
  CHECK(back.get("cohen_kappa") == -0.125);
}
