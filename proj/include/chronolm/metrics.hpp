#pragma once

#include <vector>

#include "chronolm/common.hpp"

namespace chronolm {

// Rank statistic with tie-averaged ranks. Throws on single-class labels.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);
// Trapezoidal integration of the ROC curve, tie groups stepped together.
// Agrees with auc_roc to floating-point error; kept as the cross-check route.
double auc_roc_trapezoid(const std::vector<double>& scores,
                         const std::vector<int>& labels);

struct BinaryMetrics {
  double auc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Threshold 0.5 on scores (strictly greater -> positive).
BinaryMetrics binary_metrics(const std::vector<double>& scores,
                             const std::vector<int>& labels);

// Macro-average over classes observed in y_true or y_pred.
double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);
// F1 of the positive class (label 1).
double binary_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);

}  // namespace chronolm
