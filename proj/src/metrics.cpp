#include "tinymyo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tinymyo::metrics {

int PredictionSet::class_count() const {
  int k = static_cast<int>(scores.empty() ? 0 : scores.front().size());
  for (int l : labels) k = std::max(k, l + 1);
  return k;
}

void PredictionSet::validate_classification() const {
  if (labels.empty()) throw ValidationError("metrics: empty label set");
  if (!scores.empty() && scores.size() != labels.size())
    throw ShapeError("metrics: scores and labels disagree in length");
  const std::size_t k = scores.empty() ? 0 : scores.front().size();
  for (const auto& row : scores)
    if (row.size() != k) throw ShapeError("metrics: ragged score rows");
  for (int l : labels)
    if (l < 0 || (k > 0 && l >= static_cast<int>(k)))
      throw ValidationError("metrics: label outside [0, K)");
}

void PredictionSet::validate_regression() const {
  if (values.empty() || values.size() != targets.size())
    throw ShapeError("metrics: values and targets disagree in length");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i].size() != targets[i].size() || values[i].empty())
      throw ShapeError("metrics: ragged regression rows");
}

namespace {

int argmax(const std::vector<double>& row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<int> predicted_classes(const PredictionSet& p) {
  std::vector<int> preds;
  preds.reserve(p.scores.size());
  for (const auto& row : p.scores) preds.push_back(argmax(row));
  return preds;
}

}  // namespace

double accuracy(const PredictionSet& p, AccuracyMode mode) {
  p.validate_classification();
  const std::vector<int> preds = predicted_classes(p);
  const int n = static_cast<int>(p.labels.size());
  if (mode == AccuracyMode::micro) {
    int correct = 0;
    for (int i = 0; i < n; ++i) correct += preds[i] == p.labels[i];
    return static_cast<double>(correct) / n;
  }
  const int k = p.class_count();
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, tn = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      const bool is_c = p.labels[i] == c;
      const bool said_c = preds[i] == c;
      tp += is_c && said_c;
      tn += !is_c && !said_c;
      fp += !is_c && said_c;
      fn += is_c && !said_c;
    }
    sum += static_cast<double>(tp + tn) / (tp + tn + fp + fn);
  }
  return sum / k;
}

double f1_macro(const PredictionSet& p) {
  p.validate_classification();
  const std::vector<int> preds = predicted_classes(p);
  const int n = static_cast<int>(p.labels.size());
  const int k = p.class_count();
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      tp += p.labels[i] == c && preds[i] == c;
      fp += p.labels[i] != c && preds[i] == c;
      fn += p.labels[i] == c && preds[i] != c;
    }
    if (2 * tp + fp + fn > 0) sum += 2.0 * tp / (2 * tp + fp + fn);
  }
  return sum / k;
}

double auroc_macro(const PredictionSet& p) {
  p.validate_classification();
  if (p.scores.empty()) throw ValidationError("metrics: AUROC needs scores");
  const int n = static_cast<int>(p.labels.size());
  const int k = static_cast<int>(p.scores.front().size());
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < k; ++c) {
    int pos = 0;
    for (int i = 0; i < n; ++i) pos += p.labels[i] == c;
    const int neg = n - pos;
    if (pos == 0 || neg == 0) continue;

    // midrank Mann-Whitney over the class-c scores
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return p.scores[a][c] < p.scores[b][c]; });
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
      int j = i;
      while (j + 1 < n && p.scores[order[j + 1]][c] == p.scores[order[i]][c]) ++j;
      const double mid = (i + j) / 2.0 + 1.0;
      for (int t = i; t <= j; ++t) rank[order[t]] = mid;
      i = j + 1;
    }
    double rank_pos = 0.0;
    for (int t = 0; t < n; ++t)
      if (p.labels[t] == c) rank_pos += rank[t];
    sum += (rank_pos - pos * (pos + 1.0) / 2.0) / (static_cast<double>(pos) * neg);
    ++counted;
  }
  if (counted == 0)
    throw UndefinedMetricError("metrics: AUROC undefined, no class has both outcomes");
  return sum / counted;
}

double cler(const PredictionSet& p) {
  p.validate_classification();
  const std::vector<int> preds = predicted_classes(p);
  const int n = static_cast<int>(p.labels.size());
  const int k = p.class_count();
  double err_sum = 0.0;
  for (int g = 0; g < k; ++g) {
    int total = 0, correct = 0;
    for (int i = 0; i < n; ++i) {
      if (p.labels[i] != g) continue;
      ++total;
      correct += preds[i] == g;
    }
    if (total == 0)
      throw UndefinedMetricError("metrics: gesture " + std::to_string(g) +
                                 " absent from ground truth");
    err_sum += 1.0 - static_cast<double>(correct) / total;
  }
  return err_sum / k;
}

RegressionReport regression_metrics(const PredictionSet& p) {
  p.validate_regression();
  const std::size_t dofs = p.values.front().size();
  RegressionReport rep;
  rep.mae_per_dof.assign(dofs, 0.0);
  rep.rmse_per_dof.assign(dofs, 0.0);
  double abs_sum = 0.0, sq_sum = 0.0, target_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.values.size(); ++i)
    for (std::size_t d = 0; d < dofs; ++d) {
      const double e = p.targets[i][d] - p.values[i][d];
      abs_sum += std::abs(e);
      sq_sum += e * e;
      rep.mae_per_dof[d] += std::abs(e);
      rep.rmse_per_dof[d] += e * e;
      target_sum += p.targets[i][d];
      ++count;
    }
  rep.mae = abs_sum / count;
  rep.rmse = std::sqrt(sq_sum / count);
  for (std::size_t d = 0; d < dofs; ++d) {
    rep.mae_per_dof[d] /= p.values.size();
    rep.rmse_per_dof[d] = std::sqrt(rep.rmse_per_dof[d] / p.values.size());
  }
  const double mean = target_sum / count;
  double var_sum = 0.0;
  for (const auto& row : p.targets)
    for (double t : row) var_sum += (t - mean) * (t - mean);
  if (var_sum == 0.0) {
    rep.r2_defined = false;
    rep.r2 = 0.0;
  } else {
    rep.r2 = 1.0 - sq_sum / var_sum;
  }
  return rep;
}

}  // namespace tinymyo::metrics
