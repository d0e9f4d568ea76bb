#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronolm/common.hpp"
#include "chronolm/metrics.hpp"

namespace chronolm {

using NodeId = std::uint32_t;

struct NodeInfo {
  std::string id;
  int year = 0;
  std::string major;
  std::string sub;
};

// Citation network: directed (citing -> cited) edge list plus an undirected
// deduplicated CSR view used by the predictors and the GCN.
class CitationGraph {
 public:
  static CitationGraph from_edges(std::vector<NodeInfo> nodes,
                                  const std::vector<std::pair<NodeId, NodeId>>& directed_edges);

  NodeId num_nodes() const { return NodeId(nodes_.size()); }
  std::size_t num_undirected_edges() const { return undirected_edges_.size(); }
  const NodeInfo& node(NodeId u) const { return nodes_[u]; }
  const std::vector<NodeInfo>& nodes() const { return nodes_; }
  NodeId index_of(const std::string& id) const;

  // sorted neighbor list in the undirected view
  std::pair<const NodeId*, const NodeId*> neighbors(NodeId u) const {
    return {adjacency_.data() + offsets_[u], adjacency_.data() + offsets_[u + 1]};
  }
  Index degree(NodeId u) const { return Index(offsets_[u + 1] - offsets_[u]); }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<std::pair<NodeId, NodeId>>& undirected_edges() const {
    return undirected_edges_;  // u < v
  }
  const std::vector<std::pair<NodeId, NodeId>>& directed_edges() const {
    return directed_edges_;
  }

  std::size_t dropped_self_loops() const { return dropped_self_loops_; }
  std::size_t duplicate_edges() const { return duplicate_edges_; }
  // fraction of directed edges with year(citing) >= year(cited); reported,
  // not enforced
  double chronological_fraction() const;

  // undirected subgraph over edges whose citing year is <= cutoff (node set
  // unchanged, so feature matrices stay aligned)
  CitationGraph time_filtered(int cutoff_year) const;

 private:
  std::vector<NodeInfo> nodes_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<std::pair<NodeId, NodeId>> undirected_edges_;
  std::vector<std::pair<NodeId, NodeId>> directed_edges_;
  std::size_t dropped_self_loops_ = 0;
  std::size_t duplicate_edges_ = 0;
};

// nodes.tsv: id<TAB>year<TAB>major<TAB>sub ; edges.tsv: citing<TAB>cited
CitationGraph load_graph(const std::string& edges_tsv, const std::string& nodes_tsv);
void write_graph(const CitationGraph& graph, const std::string& edges_tsv,
                 const std::string& nodes_tsv);

// ---------------------------------------------------------------------------
// Topological predictors (undirected view)
// ---------------------------------------------------------------------------

double score_cn(NodeId u, NodeId v, const CitationGraph& g);
double score_jc(NodeId u, NodeId v, const CitationGraph& g);
double score_pa(NodeId u, NodeId v, const CitationGraph& g);
// Adamic/Adar: common neighbors with degree 1 are excluded (ln 1 singularity).
double score_aa(NodeId u, NodeId v, const CitationGraph& g);
double score_ra(NodeId u, NodeId v, const CitationGraph& g);

struct PprOptions {
  double restart = 0.15;
  double tol = 1e-8;  // L1 change between iterations
  int max_iter = 10000;
};
// Full personalized-PageRank vector from source u (dangling mass teleports
// back to u). Throws when max_iter is exceeded, carrying the residual.
VecD ppr_vector(NodeId u, const CitationGraph& g, const PprOptions& opt = PprOptions());
double score_ppr(NodeId u, NodeId v, const CitationGraph& g,
                 const PprOptions& opt = PprOptions());

enum class Predictor { kCn, kJc, kPa, kAa, kRa, kPpr };
Predictor predictor_from_name(const std::string& name);
const char* predictor_name(Predictor p);
double predictor_score(Predictor p, NodeId u, NodeId v, const CitationGraph& g,
                       const PprOptions& ppr_opt = PprOptions());

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct LinkExample {
  NodeId u, v;
  int label;  // 1 = edge
  int fold;   // 0..4 for the static protocol, -1 otherwise
};

struct LinkDataset {
  std::vector<LinkExample> examples;
  int n_folds = 5;
};

// Seeded uniform positive sample of undirected edges plus the same number of
// rejection-sampled non-edges; folds assigned round-robin after a shuffle.
LinkDataset make_static_dataset(const CitationGraph& g, std::size_t sample_size,
                                std::uint64_t seed, int n_folds = 5);

struct FoldMetrics {
  std::vector<BinaryMetrics> per_fold;
  BinaryMetrics mean;
  BinaryMetrics stddev;
  bool constant_feature_flagged = false;
};

// Single-feature logistic regression per fold (score standardized on the
// train fold); reports AUC-ROC / accuracy / precision / recall / F1 as
// mean (std) across folds. Constant train features fall back to thresholding
// the raw score at 0.5 and are flagged.
FoldMetrics eval_topological(const CitationGraph& g, const LinkDataset& dataset,
                             Predictor predictor, const PprOptions& ppr_opt = PprOptions(),
                             int threads = 1);

BinaryMetrics metrics_mean(const std::vector<BinaryMetrics>& folds);
BinaryMetrics metrics_std(const std::vector<BinaryMetrics>& folds);

}  // namespace chronolm
