#include "chronolm/synth.hpp"

#include <array>
#include <cctype>

#include "chronolm/rng.hpp"

namespace chronolm {

namespace {

// content-word pool; none of these are stopwords
constexpr std::array<const char*, 48> kFillers = {
    "lattice",   "spectral",   "gradient",  "tensor",    "quantum",
    "manifold",  "stochastic", "operator",  "entropy",   "kernel",
    "adaptive",  "bayesian",   "photon",    "polymer",   "plasma",
    "neural",    "symbolic",   "convex",    "sparse",    "robust",
    "dynamic",   "thermal",    "magnetic",  "chaotic",   "discrete",
    "optimal",   "scalable",   "numerical", "empirical", "topological",
    "harmonic",  "recursive",  "invariant", "coherent",  "nonlinear",
    "parallel",  "analytic",   "composite", "unified",   "variational",
    "canonical", "modular",    "iterative", "geometric", "asymptotic",
    "residual",  "spectrum",   "gauge"};

constexpr std::array<const char*, 6> kVerbs = {
    "improves", "predicts", "characterizes", "stabilizes", "accelerates",
    "quantifies"};

const char* pick(Rng& rng, const auto& pool) {
  return pool[rng.uniform_int(pool.size())];
}

std::string capitalized(std::string word) {
  word[0] = char(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

}  // namespace

std::vector<RawDocument> synth_corpus(const SynthCorpusOptions& options) {
  const std::vector<std::string> subs = {"cs.lg", "cs.cv", "phys.opt",
                                         "phys.ast"};
  const std::vector<std::string> other_major_sub = {"phys.opt", "phys.ast",
                                                    "cs.lg", "cs.cv"};
  Rng rng(derive_seed(options.seed, tag_seed("synth-corpus")));

  // Shared marker words whose subcategory association drifts from year to
  // year: the semantic-shift mechanism the probe suites measure. Markers are
  // present in every year's corpus, so their representations keep training.
  std::vector<std::string> pool;
  for (int m = 0; m < options.marker_pool; ++m)
    pool.push_back("topic" + std::to_string(m) + "x");
  std::vector<int> assignment(pool.size());
  for (std::size_t m = 0; m < pool.size(); ++m)
    assignment[m] = int(m % subs.size());
  rng.shuffle(assignment);

  std::vector<RawDocument> docs;
  for (int year = options.year_min; year <= options.year_max; ++year) {
    if (year > options.year_min) {
      for (std::size_t m = 0; m < pool.size(); ++m) {
        if (rng.uniform() < options.drift) {
          int next = int(rng.uniform_int(subs.size() - 1));
          if (next >= assignment[m]) ++next;
          assignment[m] = next;
        }
      }
    }
    std::vector<std::vector<std::size_t>> by_sub(subs.size());
    for (std::size_t m = 0; m < pool.size(); ++m)
      by_sub[std::size_t(assignment[m])].push_back(m);

    auto draw_marker = [&](std::size_t sub_idx) -> const std::string& {
      const auto& members = by_sub[sub_idx];
      if (members.empty()) return pool[rng.uniform_int(pool.size())];
      return pool[members[rng.uniform_int(members.size())]];
    };

    for (int d = 0; d < options.docs_per_year; ++d) {
      RawDocument doc;
      const std::size_t sub_idx = rng.uniform_int(subs.size());
      char serial[16];
      std::snprintf(serial, sizeof(serial), "%04d", d);
      doc.id = std::to_string(year) + "-" + serial;
      doc.year = year;
      doc.categories.push_back(subs[sub_idx]);
      if (rng.uniform() < options.crossfield_rate)
        doc.categories.push_back(other_major_sub[sub_idx]);

      std::string abstract;
      for (int s = 0; s < options.sentences_per_doc; ++s) {
        if (!abstract.empty()) abstract += " ";
        const bool era_sentence = s == 1;  // one carrier pattern per document
        if (era_sentence) {
          const bool late_era = year >= options.era_switch_year;
          const bool minor = rng.uniform() < options.era_minor_rate;
          const char* era_token =
              (late_era != minor) ? kEraLateToken : kEraEarlyToken;
          abstract += "The " + std::string(era_token) +
                      " architecture improves image recognition benchmarks.";
          continue;
        }
        std::string sentence = capitalized(draw_marker(sub_idx));
        sentence += " ";
        sentence += draw_marker(sub_idx);
        sentence += " ";
        sentence += pick(rng, kVerbs);
        sentence += " ";
        sentence += pick(rng, kFillers);
        sentence += " ";
        sentence += pick(rng, kFillers);
        sentence += " analysis.";
        abstract += sentence;
      }
      doc.abstract = std::move(abstract);
      docs.push_back(std::move(doc));
    }
  }
  return docs;
}

CitationGraph synth_graph(const SynthGraphOptions& options) {
  if (options.majors < 1 || options.subs_per_major < 1 || options.nodes < 2)
    throw ConfigError("synth_graph: invalid options");
  Rng rng(derive_seed(options.seed, tag_seed("synth-graph")));

  const int n_years = options.year_max - options.year_min + 1;
  std::vector<NodeInfo> nodes(std::size_t(options.nodes));
  std::vector<int> major_of(std::size_t(options.nodes));
  std::vector<int> sub_of(std::size_t(options.nodes));
  for (int i = 0; i < options.nodes; ++i) {
    auto& node = nodes[std::size_t(i)];
    node.id = "p" + std::to_string(i);
    node.year = options.year_min + (i * n_years) / options.nodes;
    major_of[std::size_t(i)] = int(rng.uniform_int(std::uint64_t(options.majors)));
    sub_of[std::size_t(i)] =
        int(rng.uniform_int(std::uint64_t(options.subs_per_major)));
    node.major = "m" + std::to_string(major_of[std::size_t(i)]);
    node.sub = node.major + ".s" + std::to_string(sub_of[std::size_t(i)]);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<int> in_degree(std::size_t(options.nodes), 0);
  for (int i = 0; i < options.nodes; ++i) {
    // earlier papers only (strictly earlier years); optionally only recent
    // ones and only those below the in-degree cap (flat-degree fixtures)
    std::vector<NodeId> same_sub, same_major, cross;
    for (int j = 0; j < i; ++j) {
      if (nodes[std::size_t(j)].year >= nodes[std::size_t(i)].year) continue;
      if (options.recent_window > 0 &&
          nodes[std::size_t(j)].year < nodes[std::size_t(i)].year - options.recent_window)
        continue;
      if (options.max_in_degree > 0 &&
          in_degree[std::size_t(j)] >= options.max_in_degree)
        continue;
      if (major_of[std::size_t(j)] == major_of[std::size_t(i)]) {
        if (sub_of[std::size_t(j)] == sub_of[std::size_t(i)])
          same_sub.push_back(NodeId(j));
        else
          same_major.push_back(NodeId(j));
      } else {
        cross.push_back(NodeId(j));
      }
    }
    if (same_sub.empty() && same_major.empty() && cross.empty()) continue;

    const int k = options.cites_min +
                  int(rng.uniform_int(
                      std::uint64_t(options.cites_max - options.cites_min + 1)));
    for (int c = 0; c < k; ++c) {
      const double u = rng.uniform();
      const std::vector<NodeId>* pool;
      if (u < options.p_same_sub) pool = &same_sub;
      else if (u < options.p_same_sub + options.p_same_major) pool = &same_major;
      else pool = &cross;
      if (pool->empty()) pool = !same_sub.empty()   ? &same_sub
                                : !same_major.empty() ? &same_major
                                                      : &cross;
      const NodeId target = (*pool)[rng.uniform_int(pool->size())];
      ++in_degree[std::size_t(target)];
      edges.emplace_back(NodeId(i), target);
    }
  }
  return CitationGraph::from_edges(std::move(nodes), edges);
}

std::vector<RawDocument> synth_graph_docs(const CitationGraph& graph,
                                          std::uint64_t seed) {
  Rng rng(derive_seed(seed, tag_seed("synth-graph-docs")));
  std::vector<RawDocument> docs;
  docs.reserve(graph.num_nodes());
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    const NodeInfo& n = graph.node(i);
    RawDocument doc;
    doc.id = n.id;
    doc.year = n.year;
    doc.categories.push_back(n.sub);
    std::string sub_token;
    for (char c : n.sub)
      if (c != '.') sub_token += c;
    std::string abstract;
    for (int s = 0; s < 3; ++s) {
      if (!abstract.empty()) abstract += " ";
      abstract += capitalized(sub_token + "w" + std::to_string(rng.uniform_int(6)));
      abstract += " ";
      abstract += sub_token + "w" + std::to_string(rng.uniform_int(6));
      abstract += " ";
      abstract += pick(rng, kVerbs);
      abstract += " ";
      abstract += pick(rng, kFillers);
      abstract += " ";
      abstract += pick(rng, kFillers);
      abstract += " analysis.";
    }
    doc.abstract = std::move(abstract);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace chronolm
