#pragma once

#include <vector>

#include "tinymyo/common.hpp"

namespace tinymyo::metrics {

// Classification predictions: scores [n x K] (argmax decides the class) and
// integer labels. Regression: values/targets [n x D].
struct PredictionSet {
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> targets;

  int class_count() const;
  void validate_classification() const;
  void validate_regression() const;
};

enum class AccuracyMode { micro, macro };

double accuracy(const PredictionSet& p, AccuracyMode mode);

// Per-class 2*TP / (2*TP + FP + FN); a class with no TP, FP or FN counts 0.
double f1_macro(const PredictionSet& p);

// One-vs-rest rank statistic with midranks for ties; classes lacking
// positives or negatives are excluded from the mean.
double auroc_macro(const PredictionSet& p);

// Mean per-gesture error rate; every gesture must appear in the ground truth.
double cler(const PredictionSet& p);

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
  std::vector<double> mae_per_dof;
  std::vector<double> rmse_per_dof;
};

RegressionReport regression_metrics(const PredictionSet& p);

struct UndefinedMetricError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace tinymyo::metrics
