#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronolm/corpus.hpp"
#include "chronolm/graph.hpp"

namespace chronolm {

// Topic-drift corpus: two major fields, a shared pool of marker words whose
// subcategory association drifts from year to year (semantic shift), and a
// two-era carrier pattern whose dominant token flips at era_switch_year
// (alexnetx -> resnetx).
struct SynthCorpusOptions {
  int year_min = 2009;
  int year_max = 2012;
  int docs_per_year = 120;
  int sentences_per_doc = 4;
  int marker_pool = 32;         // shared marker words
  double drift = 0.4;           // per-year chance a marker changes subcategory
  double crossfield_rate = 0.2; // docs labeled with a second major
  int era_switch_year = 2011;
  double era_minor_rate = 0.1;  // off-era token frequency
  std::uint64_t seed = 2024;
};

inline constexpr const char* kEraEarlyToken = "alexnetx";
inline constexpr const char* kEraLateToken = "resnetx";
// Carrier sentence for fill-mask probing of the era tokens.
inline constexpr const char* kEraCarrier =
    "the [MASK] architecture improves image recognition benchmarks .";

std::vector<RawDocument> synth_corpus(const SynthCorpusOptions& options);

// Stochastic-block citation graph with year stamps: majors are blocks,
// subcategories nest inside majors, and new papers cite earlier ones with
// strong same-subcategory preference.
struct SynthGraphOptions {
  int nodes = 400;
  int year_min = 2009;
  int year_max = 2016;
  int majors = 2;
  int subs_per_major = 10;
  double p_same_sub = 0.90;
  double p_same_major = 0.08;  // remainder crosses majors
  int cites_min = 2;
  int cites_max = 6;
  int recent_window = 0;   // cite only the last N years (0 = unrestricted)
  int max_in_degree = 0;   // skip targets at this in-degree (0 = uncapped)
  std::uint64_t seed = 5;
};

CitationGraph synth_graph(const SynthGraphOptions& options);

// Abstracts aligned with synth_graph nodes (marker words per subcategory),
// for model-encoded feature experiments.
std::vector<RawDocument> synth_graph_docs(const CitationGraph& graph,
                                          std::uint64_t seed);

}  // namespace chronolm
