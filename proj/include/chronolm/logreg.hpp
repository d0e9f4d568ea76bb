#pragma once

#include <vector>

#include "chronolm/common.hpp"

namespace chronolm {

struct LogRegOptions {
  double lr = 0.05;
  int max_epochs = 500;
  double tol = 1e-6;  // relative loss-change stopping criterion
  bool standardize = true;
};

// Multinomial logistic regression, full-batch Adam, deterministic (zero init,
// no sampling). Features are standardized on the training set by default.
class LogisticRegression {
 public:
  using Options = LogRegOptions;

  void fit(const MatD& x, const std::vector<int>& y, int n_classes,
           const Options& options = Options());

  std::vector<int> predict(const MatD& x) const;
  MatD predict_proba(const MatD& x) const;  // n x k
  int n_classes() const { return int(w_.cols()); }
  int epochs_run() const { return epochs_run_; }

 private:
  MatD standardized(const MatD& x) const;
  MatD w_;           // d x k
  RowVec<double> b_;  // 1 x k
  RowVec<double> mean_, inv_std_;
  int epochs_run_ = 0;
};

}  // namespace chronolm
