#include "chronolm/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "chronolm/metrics.hpp"
#include "chronolm/parallel.hpp"
#include "chronolm/rng.hpp"
#include "chronolm/unicode.hpp"

namespace chronolm {

ProbeTask probe_task_from_name(const std::string& name) {
  if (name == "major") return ProbeTask::kMajor;
  if (name == "sub") return ProbeTask::kSub;
  if (name == "crossfield") return ProbeTask::kCrossfield;
  throw ConfigError("unknown probe task: " + name);
}

const char* probe_task_name(ProbeTask task) {
  switch (task) {
    case ProbeTask::kMajor: return "major";
    case ProbeTask::kSub: return "sub";
    case ProbeTask::kCrossfield: return "crossfield";
  }
  return "?";
}

namespace {

std::string major_of(const std::string& category) {
  const std::size_t dot = category.find('.');
  return dot == std::string::npos ? category : category.substr(0, dot);
}

}  // namespace

ProbeLabels derive_labels(const std::vector<RawDocument>& docs, ProbeTask task) {
  ProbeLabels out;
  out.labels.reserve(docs.size());

  if (task == ProbeTask::kCrossfield) {
    out.class_names = {"0", "1"};
    for (const auto& d : docs) {
      if (d.categories.empty())
        throw FormatError("document " + d.id +
                          " has no categories; cannot derive labels");
      std::set<std::string> majors;
      for (const auto& c : d.categories) majors.insert(major_of(c));
      out.labels.push_back(majors.size() > 1 ? 1 : 0);
    }
    return out;
  }

  std::map<std::string, int> index;
  std::vector<std::string> names;
  for (const auto& d : docs) {
    if (d.categories.empty())
      throw FormatError("document " + d.id +
                        " has no categories; cannot derive labels");
    const std::string name = task == ProbeTask::kMajor
                                 ? major_of(d.categories.front())
                                 : d.categories.front();
    auto [it, inserted] = index.emplace(name, int(names.size()));
    if (inserted) names.push_back(name);
    out.labels.push_back(it->second);
  }
  out.class_names = std::move(names);
  return out;
}

SampleSplit sample_split(std::size_t n, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed) {
  SampleSplit split;
  if (n == 0) throw RuntimeError("sample_split: no documents to sample");
  std::size_t want_train = n_train, want_test = n_test;
  if (n < n_train + n_test) {
    split.scaled_down = true;
    want_train = std::max<std::size_t>(
        1, n * n_train / std::max<std::size_t>(1, n_train + n_test));
    want_test = std::max<std::size_t>(1, n - want_train);
    if (want_train + want_test > n) want_train = n - want_test;
    if (want_train == 0)
      throw RuntimeError("sample_split: too few documents for a train/test split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng rng(derive_seed(seed, tag_seed("sample-split")));
  rng.shuffle(order);
  split.train.assign(order.begin(), order.begin() + std::ptrdiff_t(want_train));
  split.test.assign(order.begin() + std::ptrdiff_t(want_train),
                    order.begin() + std::ptrdiff_t(want_train + want_test));
  return split;
}

MatD summarize_perf(const std::vector<MatD>& raw,
                    const std::vector<int>& model_years,
                    const std::vector<int>& data_years,
                    std::vector<int>* flagged_columns) {
  if (raw.empty()) throw ConfigError("summarize_perf: no runs");
  const Index rows = raw[0].rows(), cols = raw[0].cols();
  if (rows != Index(model_years.size()) || cols != Index(data_years.size()))
    throw ConfigError("summarize_perf: year axes do not match matrix shape");

  MatD mean = MatD::Zero(rows, cols);
  for (const auto& m : raw) {
    if (m.rows() != rows || m.cols() != cols)
      throw ConfigError("summarize_perf: ragged run matrices");
    mean += m;
  }
  mean /= double(raw.size());

  MatD tilde(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    const double mn = mean.col(c).minCoeff();
    const double mx = mean.col(c).maxCoeff();
    if (mx - mn < 1e-12) {
      tilde.col(c).setConstant(0.5);
      if (flagged_columns) flagged_columns->push_back(data_years[std::size_t(c)]);
    } else {
      tilde.col(c) = (mean.col(c).array() - mn) / (mx - mn);
    }
  }

  MatD hat(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    const auto it = std::find(model_years.begin(), model_years.end(),
                              data_years[std::size_t(c)]);
    if (it == model_years.end())
      throw ConfigError("summarize_perf: no diagonal entry for data year " +
                        std::to_string(data_years[std::size_t(c)]));
    const Index diag_row = Index(it - model_years.begin());
    hat.col(c) = tilde.col(c).array() - tilde(diag_row, c);
    hat(diag_row, c) = 0.0;  // exact zero on the diagonal
  }
  return hat;
}

PerformanceMatrix build_perf_matrix(const std::vector<const Checkpoint*>& series,
                                    const Vocabulary& vocab,
                                    const std::vector<RawDocument>& docs,
                                    ProbeTask task,
                                    const PerfMatrixOptions& options) {
  if (series.empty()) throw ConfigError("perf matrix: empty checkpoint series");
  if (options.runs < 1) throw ConfigError("perf matrix: runs must be >= 1");

  PerformanceMatrix pm;
  for (const Checkpoint* c : series) {
    if (!c) throw RuntimeError("perf matrix: missing checkpoint");
    pm.model_years.push_back(c->trained_through_year());
  }
  pm.data_years = pm.model_years;

  // group docs by year; only data years are needed
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < docs.size(); ++i)
    by_year[docs[i].year].push_back(i);
  for (int year : pm.data_years) {
    if (!by_year.count(year) || by_year[year].size() < 4)
      throw RuntimeError("perf matrix: data year " + std::to_string(year) +
                         " has too few documents");
  }

  ProbeLabels all_labels = derive_labels(docs, task);
  const int n_classes = int(all_labels.class_names.size());

  // prepared probing text per document (filters are not applied here)
  std::vector<std::string> prepared(docs.size());
  parallel_for(docs.size(), options.threads, [&](std::size_t i) {
    std::string text = normalize_markup(docs[i].abstract, options.markup);
    if (options.ablate_second_half) text = ablate_abstract(text);
    prepared[i] = lowercase_keep_specials(text);
  });

  // CLS features of every data-year document under every model
  const Index d = Index(series[0]->config.d_model);
  std::vector<std::size_t> doc_ids;  // docs belonging to any data year
  std::map<int, std::vector<std::size_t>> year_rows;  // year -> rows in features
  for (int year : pm.data_years) {
    if (year_rows.count(year)) continue;
    for (std::size_t i : by_year[year]) {
      year_rows[year].push_back(doc_ids.size());
      doc_ids.push_back(i);
    }
  }
  std::vector<MatD> features(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    features[t].resize(Index(doc_ids.size()), d);
    const auto& params = series[t]->params;
    parallel_for(doc_ids.size(), options.threads, [&](std::size_t r) {
      VecF cls = encode_cls(params, vocab, prepared[doc_ids[r]]);
      features[t].row(Index(r)) = cls.cast<double>().transpose();
    });
  }

  const std::size_t n_t = series.size();
  const std::size_t n_tau = pm.data_years.size();
  const std::size_t n_runs = std::size_t(options.runs);
  pm.raw.assign(n_runs, MatD::Zero(Index(n_t), Index(n_tau)));

  parallel_for(n_t * n_tau * n_runs, options.threads, [&](std::size_t cell) {
    const std::size_t t = cell / (n_tau * n_runs);
    const std::size_t tau = (cell / n_runs) % n_tau;
    const std::size_t r = cell % n_runs;
    const int tau_year = pm.data_years[tau];
    const auto& rows = year_rows.at(tau_year);

    const std::uint64_t cell_seed =
        derive_seed(options.master_seed, std::uint64_t(pm.model_years[t]),
                    std::uint64_t(tau_year), r);
    SampleSplit split = sample_split(rows.size(), std::size_t(options.n_train),
                                     std::size_t(options.n_test), cell_seed);

    auto gather = [&](const std::vector<std::size_t>& idx, MatD& x,
                      std::vector<int>& y) {
      x.resize(Index(idx.size()), d);
      y.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t row = rows[idx[i]];
        x.row(Index(i)) = features[t].row(Index(row));
        y[i] = all_labels.labels[doc_ids[row]];
      }
    };
    MatD xtr, xte;
    std::vector<int> ytr, yte;
    gather(split.train, xtr, ytr);
    gather(split.test, xte, yte);

    LogisticRegression clf;
    clf.fit(xtr, ytr, n_classes);
    std::vector<int> pred = clf.predict(xte);
    const double f1 = task == ProbeTask::kCrossfield ? binary_f1(yte, pred)
                                                     : macro_f1(yte, pred);
    pm.raw[r](Index(t), Index(tau)) = f1;
  });

  pm.summary = summarize_perf(pm.raw, pm.model_years, pm.data_years,
                              &pm.flagged_columns);
  return pm;
}

std::map<int, double> track_token_probability(
    const std::vector<const Checkpoint*>& series, const Vocabulary& vocab,
    const std::string& carrier_sentence, const std::string& token) {
  auto id = vocab.id_of(token);
  if (!id || *id < kNumSpecials)
    throw RuntimeError(
        "token '" + token +
        "' is not a vocabulary entry; tracking requires whole-word tokens "
        "(subword fragments cannot be tracked)");
  std::map<int, double> out;
  for (const Checkpoint* c : series) {
    FillMaskResult r = fill_mask(c->params, vocab, carrier_sentence, 1);
    out[c->trained_through_year()] = r.probabilities(*id);
  }
  return out;
}

namespace {

bool glob_match(std::string_view pattern, std::string_view text) {
  // iterative *-backtracking glob; '?' matches one character
  std::size_t p = 0, t = 0, star = std::string_view::npos, match = 0;
  while (t < text.size()) {
    if (p < pattern.size() &&
        (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      match = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++match;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

PcaResult pca_weights(const std::vector<const Checkpoint*>& checkpoints,
                      const std::string& name_glob) {
  const std::size_t n = checkpoints.size();
  if (n < 3) throw ConfigError("pca_weights requires at least 3 checkpoints");
  for (const Checkpoint* c : checkpoints) {
    if (!(c->config == checkpoints[0]->config))
      throw ConfigError("pca_weights: checkpoint configs differ");
  }

  auto refs0 = checkpoints[0]->params.tensor_refs();
  std::vector<std::string> selected;
  std::size_t dim = 0;
  for (const auto& r : refs0) {
    if (glob_match(name_glob, r.name)) {
      selected.push_back(r.name);
      dim += std::size_t(r.size());
    }
  }
  if (selected.empty())
    throw ConfigError("pca_weights: no tensor matches '" + name_glob + "'");
  std::sort(selected.begin(), selected.end());

  MatD x = MatD::Zero(Index(n), Index(dim));
  for (std::size_t i = 0; i < n; ++i) {
    auto refs = checkpoints[i]->params.tensor_refs();
    Index col = 0;
    for (const auto& name : selected) {
      const auto it = std::find_if(refs.begin(), refs.end(),
                                   [&](const auto& r) { return r.name == name; });
      for (Index k = 0; k < it->size(); ++k) x(Index(i), col + k) = it->data[k];
      col += it->size();
    }
  }
  x.rowwise() -= x.colwise().mean();  // column-center

  // Gram trick: eigenvectors of X X^T give scores without forming the
  // dim x dim covariance.
  MatD gram = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<MatD> solver(gram);
  if (solver.info() != Eigen::Success)
    throw RuntimeError("pca_weights: eigendecomposition failed");

  const VecD evals = solver.eigenvalues();  // ascending
  double total = 0.0;
  for (Index i = 0; i < evals.size(); ++i) total += std::max(0.0, evals(i));

  PcaResult result;
  result.tensor_names = selected;
  result.coords.resize(Index(n), 2);
  result.components.resize(Index(dim), 2);
  for (int comp = 0; comp < 2; ++comp) {
    const Index idx = evals.size() - 1 - comp;
    const double lambda = std::max(0.0, evals(idx));
    const double sigma = std::sqrt(lambda);
    VecD u = solver.eigenvectors().col(idx);
    VecD loading = x.transpose() * u;  // dim, norm sigma
    if (sigma > 0.0) loading /= sigma;

    Index max_idx = 0;
    loading.cwiseAbs().maxCoeff(&max_idx);
    if (loading(max_idx) < 0.0) {
      u = -u;
      loading = -loading;
    }
    result.coords.col(comp) = u * sigma;
    result.components.col(comp) = loading;
    result.explained[comp] = total > 0.0 ? lambda / total : 0.0;
  }
  return result;
}

namespace {

double u_statistic(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0.0;
  for (double xv : x) {
    for (double yv : y) {
      if (xv > yv) u += 1.0;
      else if (xv == yv) u += 0.5;
    }
  }
  return u;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

MwuResult mann_whitney_u(const std::vector<double>& x,
                         const std::vector<double>& y, MwuMethod method) {
  if (x.empty() || y.empty())
    throw ConfigError("mann_whitney_u: empty sample");
  const std::size_t n = x.size(), m = y.size();
  MwuResult res;
  res.u = u_statistic(x, y);
  const double nm = double(n) * double(m);
  const double mu = nm / 2.0;

  const bool exact = method == MwuMethod::kExact ||
                     (method == MwuMethod::kAuto && std::min(n, m) <= 8);
  if (exact) {
    res.exact = true;
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t total = pooled.size();

    // enumerate all C(total, n) assignments of pooled values to the x role
    std::vector<std::size_t> comb(n);
    std::iota(comb.begin(), comb.end(), std::size_t(0));
    auto next_combination = [&]() {
      std::size_t k = n;
      while (k-- > 0) {
        if (comb[k] != k + total - n) {
          ++comb[k];
          for (std::size_t j = k + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
          return true;
        }
      }
      return false;
    };

    std::size_t count = 0, count_tail = 0, count_le = 0;
    const double dev_obs = std::abs(res.u - mu);
    std::vector<double> cx(n), cy(m);
    std::vector<bool> in_x(total);
    do {
      std::fill(in_x.begin(), in_x.end(), false);
      for (std::size_t i : comb) in_x[i] = true;
      std::size_t xi = 0, yi = 0;
      for (std::size_t i = 0; i < total; ++i)
        (in_x[i] ? cx[xi++] : cy[yi++]) = pooled[i];
      const double u = u_statistic(cx, cy);
      ++count;
      if (std::abs(u - mu) >= dev_obs - 1e-12) ++count_tail;
      if (u <= res.u + 1e-12) ++count_le;
    } while (next_combination());

    res.p_two_sided = double(count_tail) / double(count);
    res.p_one_sided_less = double(count_le) / double(count);
    return res;
  }

  // normal approximation with tie correction
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  const double big_n = double(pooled.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = double(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double var =
      nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (var <= 0.0) {
    res.p_two_sided = 1.0;
    res.p_one_sided_less = 1.0;
    return res;
  }
  const double sigma = std::sqrt(var);
  const double dev = std::abs(res.u - mu);
  const double z_two = (dev - 0.5) / sigma;
  res.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::max(0.0, z_two))));
  res.p_one_sided_less = normal_cdf((res.u - mu + 0.5) / sigma);
  return res;
}

}  // namespace chronolm
