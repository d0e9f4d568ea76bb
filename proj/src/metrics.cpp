#include "chronolm/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace chronolm {

namespace {

void check_two_classes(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ConfigError("auc: scores/labels size mismatch or empty");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg)
    throw RuntimeError("auc undefined: labels contain a single class");
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_two_classes(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * double(i + 1 + j);  // 1-based average rank
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  return (rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1)) /
         (double(n_pos) * double(n_neg));
}

double auc_roc_trapezoid(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  check_two_classes(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double n_pos = 0, n_neg = 0;
  for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;

  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double dtp = 0.0, dfp = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? dtp : dfp) += 1;
      ++j;
    }
    // trapezoid over the tie group
    area += (dfp / n_neg) * ((tp + 0.5 * dtp) / n_pos);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area;
}

BinaryMetrics binary_metrics(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  BinaryMetrics m;
  m.auc = auc_roc(scores, labels);
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > 0.5;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  const double total = tp + fp + tn + fn;
  m.accuracy = (tp + tn) / total;
  m.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw ConfigError("macro_f1: size mismatch or empty");
  std::set<int> classes(y_true.begin(), y_true.end());
  classes.insert(y_pred.begin(), y_pred.end());
  double sum = 0.0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c;
      const bool p = y_pred[i] == c;
      if (t && p) ++tp;
      else if (p) ++fp;
      else if (t) ++fn;
    }
    const double prec = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    const double rec = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    sum += (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / double(classes.size());
}

double binary_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1;
    const bool p = y_pred[i] == 1;
    if (t && p) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
  }
  const double prec = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  const double rec = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  return (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
}

}  // namespace chronolm
