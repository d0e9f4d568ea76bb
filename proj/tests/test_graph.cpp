#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chronolm/graph.hpp"
#include "chronolm/rng.hpp"
#include "oracles.hpp"

using namespace chronolm;

namespace {

// fixture graph: edges a-b, b-c, c-d, a-c
CitationGraph fixture_graph() {
  std::vector<NodeInfo> nodes = {{"a", 2001, "m0", "m0.s0"},
                                 {"b", 2002, "m0", "m0.s0"},
                                 {"c", 2003, "m1", "m1.s0"},
                                 {"d", 2004, "m1", "m1.s1"}};
  std::vector<std::pair<NodeId, NodeId>> edges = {{1, 0}, {2, 1}, {3, 2}, {2, 0}};
  return CitationGraph::from_edges(std::move(nodes), edges);
}

CitationGraph random_graph(Rng& rng, int n, double p) {
  std::vector<NodeInfo> nodes;
  for (int i = 0; i < n; ++i)
    nodes.push_back({"n" + std::to_string(i), 2000 + i % 5, "m0", "m0.s0"});
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (rng.uniform() < p) edges.emplace_back(NodeId(i), NodeId(j));
  return CitationGraph::from_edges(std::move(nodes), edges);
}

}  // namespace

TEST_CASE("fixture predictor values") {
  CitationGraph g = fixture_graph();
  const NodeId a = g.index_of("a"), b = g.index_of("b");
  CHECK(score_cn(a, b, g) == 1.0);
  CHECK(score_jc(a, b, g) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(score_pa(a, b, g) == 4.0);
  CHECK(score_ra(a, b, g) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(score_aa(a, b, g) == doctest::Approx(1.0 / std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("predictors on isolated nodes") {
  std::vector<NodeInfo> nodes = {{"x", 2000, "m", "m.s"}, {"y", 2000, "m", "m.s"}};
  CitationGraph g = CitationGraph::from_edges(std::move(nodes), {});
  CHECK(score_cn(0, 1, g) == 0.0);
  CHECK(score_jc(0, 1, g) == 0.0);
  CHECK(score_pa(0, 1, g) == 0.0);
}

TEST_CASE("predictors match brute-force enumeration on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + int(rng.uniform_int(46));
    CitationGraph g = random_graph(rng, n, 0.15);
    for (int probe = 0; probe < 10; ++probe) {
      const NodeId u = NodeId(rng.uniform_int(std::uint64_t(n)));
      const NodeId v = NodeId(rng.uniform_int(std::uint64_t(n)));
      if (u == v) continue;
      oracle::BruteScores want = oracle::brute_scores(g, u, v);
      CHECK(std::abs(score_cn(u, v, g) - want.cn) < 1e-12);
      CHECK(std::abs(score_jc(u, v, g) - want.jc) < 1e-12);
      CHECK(std::abs(score_pa(u, v, g) - want.pa) < 1e-12);
      CHECK(std::abs(score_aa(u, v, g) - want.aa) < 1e-12);
      CHECK(std::abs(score_ra(u, v, g) - want.ra) < 1e-12);
      // symmetry
      CHECK(score_cn(u, v, g) == score_cn(v, u, g));
      CHECK(score_aa(u, v, g) == score_aa(v, u, g));
    }
  }
}

TEST_CASE("aa term exceeds ra term for common neighbors of degree >= 3") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CitationGraph g = random_graph(rng, 30, 0.2);
    for (NodeId z = 0; z < g.num_nodes(); ++z) {
      const double deg = double(g.degree(z));
      if (deg >= 3.0) CHECK(1.0 / std::log(deg) > 1.0 / deg);
    }
  }
}

TEST_CASE("ppr: stochasticity and degenerate component") {
  Rng rng(7);
  CitationGraph g = random_graph(rng, 40, 0.1);
  VecD pi = ppr_vector(3, g, {});
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(pi.minCoeff() >= 0.0);

  std::vector<NodeInfo> single = {{"solo", 2000, "m", "m.s"}};
  CitationGraph g1 = CitationGraph::from_edges(std::move(single), {});
  VecD pi1 = ppr_vector(0, g1, {});
  CHECK(pi1(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ppr matches the dense linear-solve oracle") {
  Rng rng(13);
  // 3-node path plus random graphs
  std::vector<NodeInfo> path_nodes = {{"p0", 2000, "m", "s"},
                                      {"p1", 2000, "m", "s"},
                                      {"p2", 2000, "m", "s"}};
  CitationGraph path = CitationGraph::from_edges(
      std::move(path_nodes), {{0, 1}, {1, 2}});
  VecD got = ppr_vector(0, path, {});
  VecD want = oracle::ppr_dense_solve(path, 0, 0.15);
  CHECK((got - want).cwiseAbs().sum() < 1e-6);

  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + int(rng.uniform_int(30));
    CitationGraph g = random_graph(rng, n, 0.15);
    const NodeId u = NodeId(rng.uniform_int(std::uint64_t(n)));
    VecD a = ppr_vector(u, g, {});
    VecD b = oracle::ppr_dense_solve(g, u, 0.15);
    CHECK((a - b).cwiseAbs().sum() < 1e-6);
  }
}

TEST_CASE("graph loading: degrees, duplicates, self-loops, dangling") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chronolm_graph_test";
  fs::create_directories(dir);
  {
    std::ofstream nodes(dir / "nodes.tsv");
    nodes << "a\t2001\tm0\tm0.s0\n"
          << "b\t2002\tm0\tm0.s0\n"
          << "c\t2003\tm1\tm1.s0\n"
          << "d\t2004\tm1\tm1.s1\n";
    std::ofstream edges(dir / "edges.tsv");
    edges << "b\ta\n"
          << "c\tb\n"
          << "d\tc\n"
          << "c\ta\n"
          << "a\tc\n"   // duplicate undirected edge
          << "a\ta\n";  // self-loop
  }
  CitationGraph g = load_graph((dir / "edges.tsv").string(),
                               (dir / "nodes.tsv").string());
  CHECK(g.num_nodes() == 4);
  CHECK(g.num_undirected_edges() == 4);
  CHECK(g.dropped_self_loops() == 1);
  CHECK(g.duplicate_edges() == 1);
  CHECK(g.degree(g.index_of("a")) == 2);
  CHECK(g.degree(g.index_of("b")) == 2);
  CHECK(g.degree(g.index_of("c")) == 3);
  CHECK(g.degree(g.index_of("d")) == 1);
  // the duplicate a->c line stays in the directed view and violates
  // chronology: 4 of 5 directed edges are forward in time
  CHECK(g.chronological_fraction() == doctest::Approx(0.8));

  {
    std::ofstream edges(dir / "edges.tsv", std::ios::app);
    edges << "zz\ta\n";
  }
  CHECK_THROWS_AS(load_graph((dir / "edges.tsv").string(),
                             (dir / "nodes.tsv").string()),
                  FormatError);
  fs::remove_all(dir);
}

TEST_CASE("static dataset invariants") {
  Rng rng(21);
  CitationGraph g = random_graph(rng, 60, 0.12);
  const std::size_t sample = 80;
  REQUIRE(g.num_undirected_edges() >= sample);
  LinkDataset ds = make_static_dataset(g, sample, 4);

  std::size_t pos = 0, neg = 0;
  std::vector<int> fold_sizes(5, 0);
  for (const auto& e : ds.examples) {
    if (e.label == 1) {
      ++pos;
      CHECK(g.has_edge(e.u, e.v));
    } else {
      ++neg;
      CHECK_FALSE(g.has_edge(e.u, e.v));
      CHECK(e.u != e.v);
    }
    ++fold_sizes[std::size_t(e.fold)];
  }
  CHECK(pos == sample);
  CHECK(neg == sample);
  for (int f = 0; f < 5; ++f)
    CHECK(std::abs(fold_sizes[std::size_t(f)] - int(2 * sample / 5)) <= 1);

  LinkDataset again = make_static_dataset(g, sample, 4);
  CHECK(again.examples.size() == ds.examples.size());
  bool same = true;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    if (ds.examples[i].u != again.examples[i].u ||
        ds.examples[i].v != again.examples[i].v)
      same = false;
  }
  CHECK(same);
}

TEST_CASE("auc: tie case and metric agreement") {
  // pos {0.9, 0.4}, neg {0.7, 0.4}: 2.5 of 4 pairs -> 0.625
  std::vector<double> scores = {0.9, 0.4, 0.7, 0.4};
  std::vector<int> labels = {1, 1, 0, 0};
  CHECK(auc_roc(scores, labels) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(auc_roc_trapezoid(scores, labels) ==
        doctest::Approx(0.625).epsilon(1e-12));

  CHECK_THROWS_AS(auc_roc({0.5, 0.6}, {1, 1}), RuntimeError);
}

TEST_CASE("auc: rank and trapezoid routes agree on random fixtures") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 5 + int(rng.uniform_int(40));
    std::vector<double> scores;
    std::vector<int> labels;
    bool has0 = false, has1 = false;
    for (int i = 0; i < n; ++i) {
      // coarse grid scores force plenty of ties
      scores.push_back(double(rng.uniform_int(8)) / 8.0);
      labels.push_back(int(rng.uniform_int(2)));
      (labels.back() ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    const double a = auc_roc(scores, labels);
    const double b = auc_roc_trapezoid(scores, labels);
    CHECK(std::abs(a - b) < 1e-9);
  }
}

TEST_CASE("auc is invariant under positive scaling of scores") {
  Rng rng(5);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(rng.normal());
    labels.push_back(int(rng.uniform_int(2)));
  }
  const double base = auc_roc(scores, labels);
  std::vector<double> scaled = scores;
  for (auto& s : scaled) s *= 37.5;
  CHECK(auc_roc(scaled, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("metric suite: perfect separation") {
  std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  std::vector<int> labels = {1, 1, 0, 0};
  BinaryMetrics m = binary_metrics(scores, labels);
  CHECK(m.auc == 1.0);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
}

TEST_CASE("eval_topological: separating predictor reaches AUC 1") {
  // two cliques joined by sampled edges: common-neighbor counts separate
  // positives (within-clique pairs) from random negatives
  std::vector<NodeInfo> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;
  const int half = 14;
  for (int i = 0; i < 2 * half; ++i)
    nodes.push_back({"n" + std::to_string(i), 2000, "m", "s"});
  for (int a = 0; a < half; ++a)
    for (int b = 0; b < a; ++b) {
      edges.emplace_back(NodeId(a), NodeId(b));
      edges.emplace_back(NodeId(half + a), NodeId(half + b));
    }
  CitationGraph g = CitationGraph::from_edges(std::move(nodes), edges);
  LinkDataset ds = make_static_dataset(g, 60, 11);
  FoldMetrics fm = eval_topological(g, ds, Predictor::kCn);
  CHECK(fm.mean.auc > 0.95);
  CHECK(fm.per_fold.size() == 5);

  // label-independent scores hover near chance
  Rng rng(3);
  CitationGraph gr = random_graph(rng, 80, 0.12);
  LinkDataset randomds = make_static_dataset(gr, 150, 8);
  FoldMetrics base = eval_topological(gr, randomds, Predictor::kPa);
  CHECK(base.mean.auc > 0.3);
  CHECK(base.mean.auc < 0.9);
}

TEST_CASE("time_filtered keeps the node set and trims edges") {
  CitationGraph g = fixture_graph();
  CitationGraph g2 = g.time_filtered(2002);
  CHECK(g2.num_nodes() == g.num_nodes());
  CHECK(g2.num_undirected_edges() == 1);  // only b(2002)->a(2001)
  CHECK(g2.has_edge(g2.index_of("a"), g2.index_of("b")));
}
