#pragma once

#include <string>
#include <vector>

#include "chronolm/gnn.hpp"
#include "chronolm/graph.hpp"

namespace chronolm {

// GraphSAGE under the same 5-fold protocol as the topological harness:
// one model per fold, trained on the other folds, full static adjacency.
FoldMetrics eval_gnn_static(const CitationGraph& g, const FeatureMatrix& features,
                            const LinkDataset& dataset, const GnnHp& hp);

struct TemporalCell {
  int dt = 0;
  std::size_t n_pos = 0;
  BinaryMetrics metrics;
  bool skipped = false;
  std::string note;
};

struct TemporalOptions {
  int t0 = 0;
  int dt_min = 1;
  int dt_max = 1;
  std::size_t train_sample = 0;  // 0: use every edge of G_t0
  std::uint64_t seed = 99;
  GnnHp hp;
};

// Prospective protocol: train on G_t0, then for each dt score
// B+ = {(u,v) | t_u = t0+dt, t_v < t0+dt} against negatives (u,v') with
// t_v' < t0 and (u,v') not in B+ (the paper's asymmetric constraint, kept
// verbatim). Embeddings use the adjacency frozen at t0 over the full node
// set, so future papers enter with features and a self-loop only.
std::vector<TemporalCell> temporal_protocol(const CitationGraph& g,
                                            const FeatureMatrix& features,
                                            const TemporalOptions& options);

}  // namespace chronolm
