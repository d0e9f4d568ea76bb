#include "chronolm/gnn.hpp"

#include <map>

namespace chronolm {

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "random") return FeatureKind::kRandom;
  if (name == "major") return FeatureKind::kOnehotMajor;
  if (name == "sub") return FeatureKind::kOnehotSub;
  if (name == "model") return FeatureKind::kModelEncoded;
  throw ConfigError("unknown feature kind: " + name);
}

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kRandom: return "random";
    case FeatureKind::kOnehotMajor: return "major";
    case FeatureKind::kOnehotSub: return "sub";
    case FeatureKind::kModelEncoded: return "model";
  }
  return "?";
}

FeatureMatrix build_random_features(const CitationGraph& g, Index dims,
                                    std::uint64_t seed) {
  FeatureMatrix f;
  f.kind = FeatureKind::kRandom;
  f.matrix.resize(Index(g.num_nodes()), dims);
  Rng rng(derive_seed(seed, tag_seed("random-features")));
  for (Index r = 0; r < f.matrix.rows(); ++r)
    for (Index c = 0; c < dims; ++c) f.matrix(r, c) = rng.normal();
  return f;
}

FeatureMatrix build_onehot_features(const CitationGraph& g, bool use_sub) {
  FeatureMatrix f;
  f.kind = use_sub ? FeatureKind::kOnehotSub : FeatureKind::kOnehotMajor;

  std::map<std::string, Index> index;
  for (const auto& n : g.nodes()) {
    const std::string& label = use_sub ? n.sub : n.major;
    if (label.empty())
      throw FormatError("node " + n.id + " is missing the " +
                        std::string(use_sub ? "sub" : "major") +
                        " category required for one-hot features");
    index.emplace(label, Index(index.size()));
  }
  f.class_names.resize(index.size());
  for (const auto& [name, idx] : index) f.class_names[std::size_t(idx)] = name;

  f.matrix = MatD::Zero(Index(g.num_nodes()), Index(index.size()));
  for (Index r = 0; r < f.matrix.rows(); ++r) {
    const auto& n = g.node(NodeId(r));
    f.matrix(r, index.at(use_sub ? n.sub : n.major)) = 1.0;
  }
  return f;
}

}  // namespace chronolm
