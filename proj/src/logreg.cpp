#include "chronolm/logreg.hpp"

#include <cmath>
#include <set>

namespace chronolm {

void LogisticRegression::fit(const MatD& x, const std::vector<int>& y,
                             int n_classes, const Options& options) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (Index(y.size()) != n || n == 0)
    throw ConfigError("logistic regression: labels/features mismatch or empty");
  std::set<int> observed(y.begin(), y.end());
  if (int(observed.size()) < 2)
    throw RuntimeError("degenerate task: training labels contain a single class");
  if (n_classes < 2 || *observed.rbegin() >= n_classes || *observed.begin() < 0)
    throw ConfigError("logistic regression: labels out of range");

  if (options.standardize) {
    mean_ = x.colwise().mean();
    RowVec<double> var =
        ((x.rowwise() - mean_).array().square().colwise().sum() / double(n))
            .matrix();
    inv_std_ = var.unaryExpr(
        [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
  } else {
    mean_ = RowVec<double>::Zero(d);
    inv_std_ = RowVec<double>::Ones(d);
  }
  const MatD xs = standardized(x);

  w_ = MatD::Zero(d, n_classes);
  b_ = RowVec<double>::Zero(n_classes);

  MatD onehot = MatD::Zero(n, n_classes);
  for (Index i = 0; i < n; ++i) onehot(i, y[std::size_t(i)]) = 1.0;

  MatD mw = MatD::Zero(d, n_classes), vw = MatD::Zero(d, n_classes);
  RowVec<double> mb = RowVec<double>::Zero(n_classes),
                 vb = RowVec<double>::Zero(n_classes);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  double prev_loss = 0.0;
  epochs_run_ = 0;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    MatD logits = xs * w_;
    logits.rowwise() += b_;
    VecD row_max = logits.rowwise().maxCoeff();
    MatD p = (logits.colwise() - row_max).array().exp();
    VecD denom = p.rowwise().sum();
    p.array().colwise() /= denom.array();

    double loss = 0.0;
    for (Index i = 0; i < n; ++i)
      loss -= std::log(std::max(p(i, y[std::size_t(i)]), 1e-300));
    loss /= double(n);

    MatD gl = (p - onehot) / double(n);
    MatD gw = xs.transpose() * gl;
    RowVec<double> gb = gl.colwise().sum();

    const double bc1 = 1.0 - std::pow(b1, epoch);
    const double bc2 = 1.0 - std::pow(b2, epoch);
    mw = b1 * mw + (1.0 - b1) * gw;
    vw = b2 * vw.array().matrix() + (1.0 - b2) * gw.array().square().matrix();
    mb = b1 * mb + (1.0 - b1) * gb;
    vb = b2 * vb.array().matrix() + (1.0 - b2) * gb.array().square().matrix();
    w_.array() -=
        options.lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps);
    b_.array() -=
        options.lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);

    epochs_run_ = epoch;
    if (epoch > 1 &&
        std::abs(prev_loss - loss) <= options.tol * std::max(1.0, prev_loss))
      break;
    prev_loss = loss;
  }
}

MatD LogisticRegression::standardized(const MatD& x) const {
  return ((x.rowwise() - mean_).array().rowwise() * inv_std_.array()).matrix();
}

MatD LogisticRegression::predict_proba(const MatD& x) const {
  MatD logits = standardized(x) * w_;
  logits.rowwise() += b_;
  VecD row_max = logits.rowwise().maxCoeff();
  MatD p = (logits.colwise() - row_max).array().exp();
  VecD denom = p.rowwise().sum();
  p.array().colwise() /= denom.array();
  return p;
}

std::vector<int> LogisticRegression::predict(const MatD& x) const {
  MatD p = predict_proba(x);
  std::vector<int> out(std::size_t(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) {
    Index best;
    p.row(i).maxCoeff(&best);
    out[std::size_t(i)] = int(best);
  }
  return out;
}

}  // namespace chronolm
