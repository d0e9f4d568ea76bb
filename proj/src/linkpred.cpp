#include "chronolm/linkpred.hpp"

#include <algorithm>
#include <set>

namespace chronolm {

FoldMetrics eval_gnn_static(const CitationGraph& g, const FeatureMatrix& features,
                            const LinkDataset& dataset, const GnnHp& hp) {
  if (Index(g.num_nodes()) != features.matrix.rows())
    throw ConfigError("feature matrix rows do not match the node count");
  const SpMat<double> snorm = normalized_adjacency<double>(g);

  FoldMetrics out;
  for (int fold = 0; fold < dataset.n_folds; ++fold) {
    std::vector<PairExample> train, test;
    for (const auto& e : dataset.examples) {
      (e.fold == fold ? test : train).push_back({e.u, e.v, e.label});
    }
    if (train.empty() || test.empty())
      throw ConfigError("gnn eval: empty train or test fold");

    GnnHp fold_hp = hp;
    fold_hp.seed = derive_seed(hp.seed, tag_seed("gnn-fold"), std::uint64_t(fold));
    GnnTrainResult<double> tr =
        train_gnn(snorm, features.matrix, train, fold_hp);
    Mat<double> h2 = sage_forward(snorm, features.matrix, tr.weights);

    std::vector<double> scores = score_pairs(h2, test, tr.weights);
    std::vector<int> labels;
    labels.reserve(test.size());
    for (const auto& e : test) labels.push_back(e.label);
    out.per_fold.push_back(binary_metrics(scores, labels));
  }
  out.mean = metrics_mean(out.per_fold);
  out.stddev = metrics_std(out.per_fold);
  return out;
}

std::vector<TemporalCell> temporal_protocol(const CitationGraph& g,
                                            const FeatureMatrix& features,
                                            const TemporalOptions& options) {
  if (Index(g.num_nodes()) != features.matrix.rows())
    throw ConfigError("feature matrix rows do not match the node count");

  const CitationGraph g0 = g.time_filtered(options.t0);
  if (g0.num_undirected_edges() == 0)
    throw ConfigError("temporal protocol: no edges at or before t0");

  const std::size_t sample = options.train_sample == 0
                                 ? g0.num_undirected_edges()
                                 : std::min(options.train_sample,
                                            g0.num_undirected_edges());
  LinkDataset train_ds = make_static_dataset(
      g0, sample, derive_seed(options.seed, tag_seed("temporal-train")), 1);
  std::vector<PairExample> train_pairs;
  train_pairs.reserve(train_ds.examples.size());
  for (const auto& e : train_ds.examples)
    train_pairs.push_back({e.u, e.v, e.label});

  const SpMat<double> snorm = normalized_adjacency<double>(g0);
  GnnTrainResult<double> tr =
      train_gnn(snorm, features.matrix, train_pairs, options.hp);
  const Mat<double> h2 = sage_forward(snorm, features.matrix, tr.weights);

  // candidate endpoints for negatives: papers published until t0 (strict,
  // matching the B- definition)
  std::vector<NodeId> candidates;
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    if (g.node(i).year < options.t0) candidates.push_back(i);

  std::vector<TemporalCell> cells;
  for (int dt = options.dt_min; dt <= options.dt_max; ++dt) {
    TemporalCell cell;
    cell.dt = dt;
    const int test_year = options.t0 + dt;

    std::vector<PairExample> positives;
    std::set<std::pair<NodeId, NodeId>> pos_set;
    for (const auto& [citing, cited] : g.directed_edges()) {
      if (g.node(citing).year == test_year && g.node(cited).year < test_year) {
        positives.push_back({citing, cited, 1});
        pos_set.insert({citing, cited});
      }
    }
    if (positives.empty()) {
      cell.skipped = true;
      cell.note = "no citations from year " + std::to_string(test_year);
      cells.push_back(cell);
      continue;
    }
    if (candidates.empty())
      throw RuntimeError("temporal protocol: no candidate endpoints before t0");

    Rng rng(derive_seed(options.seed, tag_seed("temporal-neg"),
                        std::uint64_t(dt)));
    std::vector<PairExample> examples = positives;
    for (const auto& p : positives) {
      for (int attempt = 0;; ++attempt) {
        if (attempt > 1000)
          throw RuntimeError("temporal negative sampling failed for node " +
                             g.node(p.u).id);
        const NodeId vp = candidates[rng.uniform_int(candidates.size())];
        if (vp == p.v || pos_set.count({p.u, vp})) continue;
        examples.push_back({p.u, vp, 0});
        break;
      }
    }

    std::vector<double> scores = score_pairs(h2, examples, tr.weights);
    std::vector<int> labels;
    labels.reserve(examples.size());
    for (const auto& e : examples) labels.push_back(e.label);
    cell.n_pos = positives.size();
    cell.metrics = binary_metrics(scores, labels);
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace chronolm
