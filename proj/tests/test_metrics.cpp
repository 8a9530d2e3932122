#include <doctest.h>

#include <algorithm>

#include "test_util.hpp"
#include "tinymyo/metrics.hpp"

using namespace tinymyo;
using namespace tinymyo::metrics;

namespace {

// one-hot style scores so argmax equals the prediction list
PredictionSet from_preds(const std::vector<int>& labels, const std::vector<int>& preds, int k) {
  PredictionSet p;
  p.labels = labels;
  for (int pred : preds) {
    std::vector<double> row(k, 0.0);
    row[pred] = 1.0;
    p.scores.push_back(row);
  }
  return p;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("accuracy micro and macro") {
  PredictionSet perfect = from_preds({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
  CHECK(accuracy(perfect, AccuracyMode::micro) == 1.0);
  CHECK(accuracy(perfect, AccuracyMode::macro) == 1.0);

  // the spec's hand-built confusion matrix
  PredictionSet p = from_preds({0, 0, 0, 1}, {0, 0, 0, 0}, 2);
  CHECK(accuracy(p, AccuracyMode::micro) == doctest::Approx(0.75));
  CHECK(accuracy(p, AccuracyMode::macro) == doctest::Approx(0.75));

  PredictionSet wrong = from_preds({0, 1}, {1, 0}, 2);
  CHECK(accuracy(wrong, AccuracyMode::micro) == 0.0);
  CHECK(accuracy(wrong, AccuracyMode::macro) == 0.0);
}

TEST_CASE("f1 macro") {
  CHECK(f1_macro(from_preds({0, 1, 1}, {0, 1, 1}, 2)) == 1.0);
  CHECK(f1_macro(from_preds({0, 1}, {1, 0}, 2)) == 0.0);
  CHECK(f1_macro(from_preds({0, 0, 1}, {0, 1, 1}, 2)) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("auroc examples") {
  // perfectly separated
  PredictionSet p;
  p.labels = {1, 1, 0, 0};
  p.scores = {{0.1, 0.9}, {0.2, 0.8}, {0.9, 0.1}, {0.7, 0.3}};
  CHECK(auroc_macro(p) == doctest::Approx(1.0));

  // identical scores: ties midrank to 0.5
  PredictionSet tied;
  tied.labels = {0, 1, 0, 1};
  tied.scores = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  CHECK(auroc_macro(tied) == doctest::Approx(0.5));

  // binary hand case: positives {0.9, 0.4}, negatives {0.6, 0.1} -> 3/4
  PredictionSet hand;
  hand.labels = {1, 1, 0, 0};
  hand.scores = {{0.1, 0.9}, {0.6, 0.4}, {0.4, 0.6}, {0.9, 0.1}};
  // class 1 uses column 1: pos scores 0.9, 0.4; neg scores 0.6, 0.1
  double val = auroc_macro(hand);
  CHECK(val == doctest::Approx((0.75 + 0.75) / 2.0));

  // single-class labels leave nothing defined
  PredictionSet degenerate;
  degenerate.labels = {1, 1};
  degenerate.scores = {{0.0, 1.0}, {0.2, 0.8}};
  CHECK_THROWS_AS(auroc_macro(degenerate), UndefinedMetricError);
}

TEST_CASE("cler examples") {
  CHECK(cler(from_preds({0, 1, 0, 1}, {0, 1, 0, 1}, 2)) == 0.0);

  // g0: 3 correct of 4; g1: 1 correct of 2 -> (0.25 + 0.5) / 2
  PredictionSet p = from_preds({0, 0, 0, 0, 1, 1}, {0, 0, 0, 1, 1, 0}, 2);
  CHECK(cler(p) == doctest::Approx(0.375));

  // a gesture missing from the ground truth is an error naming it
  PredictionSet missing = from_preds({0, 0}, {0, 1}, 2);
  CHECK_THROWS_WITH_AS(cler(missing), doctest::Contains("gesture 1"), UndefinedMetricError);

  // uniform random predictions approach 1 - 1/G
  std::mt19937_64 rng(8);
  const int g = 5, n = 50000;
  std::vector<int> labels(n), preds(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng() % g);
    preds[i] = static_cast<int>(rng() % g);
  }
  CHECK(cler(from_preds(labels, preds, g)) == doctest::Approx(1.0 - 1.0 / g).epsilon(0.02));
}

TEST_CASE("regression metrics") {
  PredictionSet exact;
  exact.values = {{1.0, 2.0}, {3.0, 4.0}};
  exact.targets = exact.values;
  RegressionReport rep = regression_metrics(exact);
  CHECK(rep.mae == 0.0);
  CHECK(rep.rmse == 0.0);
  CHECK(rep.r2 == doctest::Approx(1.0));

  // constant predictor at the target mean scores R^2 = 0
  PredictionSet mean_pred;
  mean_pred.targets = {{0.0}, {2.0}, {4.0}};
  mean_pred.values = {{2.0}, {2.0}, {2.0}};
  rep = regression_metrics(mean_pred);
  CHECK(rep.r2 == doctest::Approx(0.0));

  // hand case: y = [0,2], yhat = [1,1]
  PredictionSet hand;
  hand.targets = {{0.0}, {2.0}};
  hand.values = {{1.0}, {1.0}};
  rep = regression_metrics(hand);
  CHECK(rep.mae == doctest::Approx(1.0));
  CHECK(rep.rmse == doctest::Approx(1.0));
  CHECK(rep.r2 == doctest::Approx(0.0));

  // zero-variance targets: R^2 undefined, MAE/RMSE still there
  PredictionSet flat;
  flat.targets = {{1.0}, {1.0}};
  flat.values = {{0.5}, {1.5}};
  rep = regression_metrics(flat);
  CHECK_FALSE(rep.r2_defined);
  CHECK(rep.mae == doctest::Approx(0.5));
}

TEST_CASE("metric properties over random data") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 40);
    const int k = 2 + static_cast<int>(rng() % 5);
    PredictionSet p;
    p.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      p.labels[i] = static_cast<int>(rng() % k);
      std::vector<double> row(k);
      for (double& v : row) v = testutil::gauss(rng);
      p.scores.push_back(row);
    }
    // ensure both outcomes exist for class 0
    p.labels[0] = 0;
    p.labels[1] = 1;

    // micro accuracy and AUROC ignore monotone transforms of scores
    PredictionSet warped = p;
    for (auto& row : warped.scores)
      for (double& v : row) v = std::exp(0.7 * v) + 2.0;
    CHECK(accuracy(p, AccuracyMode::micro) ==
          doctest::Approx(accuracy(warped, AccuracyMode::micro)));
    CHECK(auroc_macro(p) == doctest::Approx(auroc_macro(warped)).epsilon(1e-9));

    // permuting samples changes nothing
    PredictionSet shuffled = p;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % (i + 1));
      std::swap(shuffled.labels[i], shuffled.labels[j]);
      std::swap(shuffled.scores[i], shuffled.scores[j]);
    }
    CHECK(accuracy(p, AccuracyMode::macro) ==
          doctest::Approx(accuracy(shuffled, AccuracyMode::macro)));
    CHECK(f1_macro(p) == doctest::Approx(f1_macro(shuffled)));
    CHECK(auroc_macro(p) == doctest::Approx(auroc_macro(shuffled)).epsilon(1e-9));

    // RMSE dominates MAE
    PredictionSet reg;
    const int d = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      std::vector<double> t(d), v(d);
      for (int e = 0; e < d; ++e) {
        t[e] = testutil::gauss(rng);
        v[e] = testutil::gauss(rng);
      }
      reg.targets.push_back(t);
      reg.values.push_back(v);
    }
    const RegressionReport rep = regression_metrics(reg);
    CHECK(rep.rmse >= rep.mae - 1e-12);
  }
}

}  // TEST_SUITE
