#pragma once

#include "fairtrain/types.hpp"

#include <vector>

namespace fairtrain {

/// Scores in [0, 1] with labels and group ids. A prediction is positive when
/// its score is strictly above the threshold.
struct PredictionSet {
  Vector scores;
  std::vector<int> labels;
  std::vector<int> groups;
  double threshold = 0.5;

  void validate() const;
  /// 1 + largest group id.
  std::size_t group_count() const;
  bool positive(std::size_t i) const { return scores(static_cast<Index>(i)) > threshold; }
};

struct FairnessReport {
  double ind = 0.0;
  double sp = 0.0;
  double sf = 0.0;
  double ina = 0.0;
  double wd = 0.0;
};

// With more than two groups every gap is the largest one over group pairs.

/// |P(pred + | A) - P(pred + | B)|.
double independence_gap(const PredictionSet& p);
/// Sum over true labels of |P(pred + | A, y) - P(pred + | B, y)|.
double separation_gap(const PredictionSet& p);
/// Sum over predicted classes of |P(y + | A, pred) - P(y + | B, pred)|.
double sufficiency_gap(const PredictionSet& p);
/// Share of misclassified rows.
double inaccuracy(const PredictionSet& p);
/// Wasserstein-1 distance between the score samples of two groups.
double group_wasserstein(const PredictionSet& p);

/// W1 between two empirical distributions via the quantile functions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

FairnessReport fairness_report(const PredictionSet& p);

}  // namespace fairtrain
