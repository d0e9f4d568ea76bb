#include "chronolm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "chronolm/logreg.hpp"
#include "chronolm/parallel.hpp"
#include "chronolm/rng.hpp"

namespace chronolm {

CitationGraph CitationGraph::from_edges(
    std::vector<NodeInfo> nodes,
    const std::vector<std::pair<NodeId, NodeId>>& directed_edges) {
  CitationGraph g;
  g.nodes_ = std::move(nodes);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (!g.index_.emplace(g.nodes_[i].id, i).second)
      throw FormatError("duplicate node id: " + g.nodes_[i].id);
  }

  std::set<std::pair<NodeId, NodeId>> undirected;
  for (const auto& [a, b] : directed_edges) {
    if (a >= g.num_nodes() || b >= g.num_nodes())
      throw FormatError("edge endpoint out of range");
    if (a == b) {
      ++g.dropped_self_loops_;
      continue;
    }
    g.directed_edges_.emplace_back(a, b);
    const auto key = std::minmax(a, b);
    if (!undirected.insert({key.first, key.second}).second)
      ++g.duplicate_edges_;
  }
  g.undirected_edges_.assign(undirected.begin(), undirected.end());

  std::vector<std::size_t> degree(g.num_nodes() + 1, 0);
  for (const auto& [u, v] : g.undirected_edges_) {
    ++degree[u + 1];
    ++degree[v + 1];
  }
  g.offsets_.assign(g.num_nodes() + 1, 0);
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    g.offsets_[i + 1] = g.offsets_[i] + degree[i + 1];
  g.adjacency_.resize(g.offsets_.back());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : g.undirected_edges_) {
    g.adjacency_[cursor[u]++] = v;
    g.adjacency_[cursor[v]++] = u;
  }
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    std::sort(g.adjacency_.begin() + std::ptrdiff_t(g.offsets_[i]),
              g.adjacency_.begin() + std::ptrdiff_t(g.offsets_[i + 1]));
  return g;
}

NodeId CitationGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw RuntimeError("unknown node id: " + id);
  return it->second;
}

bool CitationGraph::has_edge(NodeId u, NodeId v) const {
  auto [begin, end] = neighbors(u);
  return std::binary_search(begin, end, v);
}

double CitationGraph::chronological_fraction() const {
  if (directed_edges_.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& [citing, cited] : directed_edges_)
    if (nodes_[citing].year >= nodes_[cited].year) ++ok;
  return double(ok) / double(directed_edges_.size());
}

CitationGraph CitationGraph::time_filtered(int cutoff_year) const {
  std::vector<std::pair<NodeId, NodeId>> kept;
  for (const auto& [citing, cited] : directed_edges_) {
    if (nodes_[citing].year <= cutoff_year && nodes_[cited].year <= cutoff_year)
      kept.push_back({citing, cited});
  }
  return from_edges(nodes_, kept);
}

CitationGraph load_graph(const std::string& edges_tsv,
                         const std::string& nodes_tsv) {
  std::ifstream nodes_in(nodes_tsv);
  if (!nodes_in) throw IoError("cannot open nodes file: " + nodes_tsv);
  std::vector<NodeInfo> nodes;
  std::unordered_map<std::string, NodeId> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(nodes_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    NodeInfo n;
    std::string year_str;
    if (!std::getline(ss, n.id, '\t') || !std::getline(ss, year_str, '\t'))
      throw FormatError(nodes_tsv + ":" + std::to_string(line_no) +
                        ": expected id<TAB>year<TAB>major<TAB>sub");
    std::getline(ss, n.major, '\t');
    std::getline(ss, n.sub, '\t');
    try {
      n.year = std::stoi(year_str);
    } catch (...) {
      throw FormatError(nodes_tsv + ":" + std::to_string(line_no) +
                        ": bad year '" + year_str + "'");
    }
    index.emplace(n.id, NodeId(nodes.size()));
    nodes.push_back(std::move(n));
  }

  std::ifstream edges_in(edges_tsv);
  if (!edges_in) throw IoError("cannot open edges file: " + edges_tsv);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::string> dangling;
  line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(edges_tsv + ":" + std::to_string(line_no) +
                        ": expected citing<TAB>cited");
    const std::string a = line.substr(0, tab);
    const std::string b = line.substr(tab + 1);
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      dangling.push_back(edges_tsv + ":" + std::to_string(line_no) + ": " + line);
      continue;
    }
    edges.emplace_back(ia->second, ib->second);
  }
  if (!dangling.empty()) {
    std::string msg = "edges reference unknown nodes:";
    for (std::size_t i = 0; i < std::min<std::size_t>(dangling.size(), 10); ++i)
      msg += "\n  " + dangling[i];
    if (dangling.size() > 10)
      msg += "\n  ... (" + std::to_string(dangling.size() - 10) + " more)";
    throw FormatError(msg);
  }
  return CitationGraph::from_edges(std::move(nodes), edges);
}

void write_graph(const CitationGraph& graph, const std::string& edges_tsv,
                 const std::string& nodes_tsv) {
  std::ofstream nodes_out(nodes_tsv, std::ios::binary);
  if (!nodes_out) throw IoError("cannot write nodes file: " + nodes_tsv);
  for (const auto& n : graph.nodes())
    nodes_out << n.id << "\t" << n.year << "\t" << n.major << "\t" << n.sub
              << "\n";
  std::ofstream edges_out(edges_tsv, std::ios::binary);
  if (!edges_out) throw IoError("cannot write edges file: " + edges_tsv);
  for (const auto& [a, b] : graph.directed_edges())
    edges_out << graph.node(a).id << "\t" << graph.node(b).id << "\n";
}

// ---------------------------------------------------------------------------
// Predictors
// ---------------------------------------------------------------------------

namespace {

template <class Fn>
void for_common_neighbors(NodeId u, NodeId v, const CitationGraph& g, Fn&& fn) {
  auto [ub, ue] = g.neighbors(u);
  auto [vb, ve] = g.neighbors(v);
  while (ub != ue && vb != ve) {
    if (*ub < *vb) ++ub;
    else if (*vb < *ub) ++vb;
    else {
      fn(*ub);
      ++ub;
      ++vb;
    }
  }
}

}  // namespace

double score_cn(NodeId u, NodeId v, const CitationGraph& g) {
  double s = 0.0;
  for_common_neighbors(u, v, g, [&](NodeId) { s += 1.0; });
  return s;
}

double score_jc(NodeId u, NodeId v, const CitationGraph& g) {
  const double inter = score_cn(u, v, g);
  const double uni = double(g.degree(u)) + double(g.degree(v)) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double score_pa(NodeId u, NodeId v, const CitationGraph& g) {
  return double(g.degree(u)) * double(g.degree(v));
}

double score_aa(NodeId u, NodeId v, const CitationGraph& g) {
  double s = 0.0;
  for_common_neighbors(u, v, g, [&](NodeId z) {
    const double dz = double(g.degree(z));
    if (dz > 1.0) s += 1.0 / std::log(dz);
  });
  return s;
}

double score_ra(NodeId u, NodeId v, const CitationGraph& g) {
  double s = 0.0;
  for_common_neighbors(u, v, g, [&](NodeId z) { s += 1.0 / double(g.degree(z)); });
  return s;
}

VecD ppr_vector(NodeId u, const CitationGraph& g, const PprOptions& opt) {
  const NodeId n = g.num_nodes();
  const double alpha = opt.restart;
  VecD pi = VecD::Zero(n);
  pi(u) = 1.0;
  VecD next(n);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    next.setZero();
    double dangling = 0.0;
    for (NodeId i = 0; i < n; ++i) {
      const double mass = pi(i);
      if (mass == 0.0) continue;
      const Index deg = g.degree(i);
      if (deg == 0) {
        dangling += mass;
        continue;
      }
      const double share = mass / double(deg);
      auto [b, e] = g.neighbors(i);
      for (auto it = b; it != e; ++it) next(*it) += share;
    }
    next *= (1.0 - alpha);
    next(u) += alpha + (1.0 - alpha) * dangling;  // restart + dangling teleport
    const double delta = (next - pi).cwiseAbs().sum();
    pi.swap(next);
    if (delta < opt.tol) return pi;
  }
  throw RuntimeError("ppr failed to converge after " +
                     std::to_string(opt.max_iter) + " iterations (residual " +
                     std::to_string((pi - next).cwiseAbs().sum()) + ")");
}

double score_ppr(NodeId u, NodeId v, const CitationGraph& g,
                 const PprOptions& opt) {
  return ppr_vector(u, g, opt)(v);
}

Predictor predictor_from_name(const std::string& name) {
  if (name == "cn") return Predictor::kCn;
  if (name == "jc") return Predictor::kJc;
  if (name == "pa") return Predictor::kPa;
  if (name == "aa") return Predictor::kAa;
  if (name == "ra") return Predictor::kRa;
  if (name == "ppr") return Predictor::kPpr;
  throw ConfigError("unknown predictor: " + name);
}

const char* predictor_name(Predictor p) {
  switch (p) {
    case Predictor::kCn: return "cn";
    case Predictor::kJc: return "jc";
    case Predictor::kPa: return "pa";
    case Predictor::kAa: return "aa";
    case Predictor::kRa: return "ra";
    case Predictor::kPpr: return "ppr";
  }
  return "?";
}

double predictor_score(Predictor p, NodeId u, NodeId v, const CitationGraph& g,
                       const PprOptions& ppr_opt) {
  switch (p) {
    case Predictor::kCn: return score_cn(u, v, g);
    case Predictor::kJc: return score_jc(u, v, g);
    case Predictor::kPa: return score_pa(u, v, g);
    case Predictor::kAa: return score_aa(u, v, g);
    case Predictor::kRa: return score_ra(u, v, g);
    case Predictor::kPpr: return score_ppr(u, v, g, ppr_opt);
  }
  throw ConfigError("unknown predictor");
}

// ---------------------------------------------------------------------------
// Datasets + harness
// ---------------------------------------------------------------------------

LinkDataset make_static_dataset(const CitationGraph& g, std::size_t sample_size,
                                std::uint64_t seed, int n_folds) {
  const auto& edges = g.undirected_edges();
  if (edges.size() < sample_size)
    throw ConfigError("graph has " + std::to_string(edges.size()) +
                      " edges, fewer than the requested sample of " +
                      std::to_string(sample_size));
  if (g.num_nodes() < 2) throw ConfigError("graph too small");

  Rng rng(derive_seed(seed, tag_seed("static-dataset")));

  // seeded uniform positive sample (partial Fisher-Yates)
  std::vector<std::size_t> edge_idx(edges.size());
  std::iota(edge_idx.begin(), edge_idx.end(), std::size_t(0));
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + std::size_t(rng.uniform_int(edge_idx.size() - i));
    std::swap(edge_idx[i], edge_idx[j]);
  }

  LinkDataset ds;
  ds.n_folds = n_folds;
  ds.examples.reserve(2 * sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) {
    const auto& [u, v] = edges[edge_idx[i]];
    ds.examples.push_back({u, v, 1, -1});
  }

  // rejection-sampled negatives, deduplicated
  std::set<std::pair<NodeId, NodeId>> negatives;
  const std::size_t max_attempts = 100 * sample_size;
  std::size_t attempts = 0;
  while (negatives.size() < sample_size) {
    if (++attempts > max_attempts)
      throw RuntimeError("negative sampling failed after " +
                         std::to_string(max_attempts) +
                         " attempts (graph too dense?)");
    NodeId a = NodeId(rng.uniform_int(g.num_nodes()));
    NodeId b = NodeId(rng.uniform_int(g.num_nodes()));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (g.has_edge(a, b)) continue;
    negatives.insert({a, b});
  }
  for (const auto& [u, v] : negatives) ds.examples.push_back({u, v, 0, -1});

  // fold assignment: shuffle, then round-robin
  rng.shuffle(ds.examples);
  for (std::size_t i = 0; i < ds.examples.size(); ++i)
    ds.examples[i].fold = int(i % std::size_t(n_folds));
  return ds;
}

BinaryMetrics metrics_mean(const std::vector<BinaryMetrics>& folds) {
  BinaryMetrics m;
  for (const auto& f : folds) {
    m.auc += f.auc;
    m.accuracy += f.accuracy;
    m.precision += f.precision;
    m.recall += f.recall;
    m.f1 += f.f1;
  }
  const double n = double(folds.size());
  m.auc /= n;
  m.accuracy /= n;
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

BinaryMetrics metrics_std(const std::vector<BinaryMetrics>& folds) {
  const BinaryMetrics mean = metrics_mean(folds);
  BinaryMetrics s;
  for (const auto& f : folds) {
    s.auc += (f.auc - mean.auc) * (f.auc - mean.auc);
    s.accuracy += (f.accuracy - mean.accuracy) * (f.accuracy - mean.accuracy);
    s.precision += (f.precision - mean.precision) * (f.precision - mean.precision);
    s.recall += (f.recall - mean.recall) * (f.recall - mean.recall);
    s.f1 += (f.f1 - mean.f1) * (f.f1 - mean.f1);
  }
  const double n = double(folds.size());
  s.auc = std::sqrt(s.auc / n);
  s.accuracy = std::sqrt(s.accuracy / n);
  s.precision = std::sqrt(s.precision / n);
  s.recall = std::sqrt(s.recall / n);
  s.f1 = std::sqrt(s.f1 / n);
  return s;
}

FoldMetrics eval_topological(const CitationGraph& g, const LinkDataset& dataset,
                             Predictor predictor, const PprOptions& ppr_opt,
                             int threads) {
  const std::size_t n = dataset.examples.size();
  if (n == 0) throw ConfigError("empty link dataset");

  std::vector<double> scores(n);
  if (predictor == Predictor::kPpr) {
    // group by source node so each PPR vector is solved once
    std::map<NodeId, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < n; ++i)
      by_source[dataset.examples[i].u].push_back(i);
    std::vector<std::pair<NodeId, std::vector<std::size_t>>> groups(
        by_source.begin(), by_source.end());
    parallel_for(groups.size(), threads, [&](std::size_t gi) {
      const VecD pi = ppr_vector(groups[gi].first, g, ppr_opt);
      for (std::size_t i : groups[gi].second)
        scores[i] = pi(dataset.examples[i].v);
    });
  } else {
    parallel_for(n, threads, [&](std::size_t i) {
      const auto& e = dataset.examples[i];
      scores[i] = predictor_score(predictor, e.u, e.v, g, ppr_opt);
    });
  }

  FoldMetrics out;
  for (int fold = 0; fold < dataset.n_folds; ++fold) {
    std::vector<double> train_x, test_x;
    std::vector<int> train_y, test_y;
    for (std::size_t i = 0; i < n; ++i) {
      if (dataset.examples[i].fold == fold) {
        test_x.push_back(scores[i]);
        test_y.push_back(dataset.examples[i].label);
      } else {
        train_x.push_back(scores[i]);
        train_y.push_back(dataset.examples[i].label);
      }
    }
    const double mn = *std::min_element(train_x.begin(), train_x.end());
    const double mx = *std::max_element(train_x.begin(), train_x.end());
    std::vector<double> probs(test_x.size());
    if (mx - mn < 1e-300) {
      // constant feature: fall back to thresholding the raw score
      out.constant_feature_flagged = true;
      for (std::size_t i = 0; i < test_x.size(); ++i) probs[i] = test_x[i];
    } else {
      MatD xtr(Index(train_x.size()), 1), xte(Index(test_x.size()), 1);
      for (std::size_t i = 0; i < train_x.size(); ++i) xtr(Index(i), 0) = train_x[i];
      for (std::size_t i = 0; i < test_x.size(); ++i) xte(Index(i), 0) = test_x[i];
      LogisticRegression lr;
      lr.fit(xtr, train_y, 2, {0.1, 1000, 1e-9, true});
      MatD p = lr.predict_proba(xte);
      for (std::size_t i = 0; i < test_x.size(); ++i) probs[i] = p(Index(i), 1);
    }
    out.per_fold.push_back(binary_metrics(probs, test_y));
  }
  out.mean = metrics_mean(out.per_fold);
  out.stddev = metrics_std(out.per_fold);
  return out;
}

}  // namespace chronolm
