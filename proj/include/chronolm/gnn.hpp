#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronolm/common.hpp"
#include "chronolm/graph.hpp"
#include "chronolm/metrics.hpp"
#include "chronolm/rng.hpp"

namespace chronolm {

template <class S>
using SpMat = Eigen::SparseMatrix<S>;

// D~^{-1/2} (A + I) D~^{-1/2} over the full node set.
template <class S>
SpMat<S> normalized_adjacency(const CitationGraph& g) {
  const Index n = Index(g.num_nodes());
  std::vector<Eigen::Triplet<S>> triplets;
  triplets.reserve(2 * g.num_undirected_edges() + std::size_t(n));
  VecD deg = VecD::Ones(n);  // self-loops
  for (const auto& [u, v] : g.undirected_edges()) {
    deg(Index(u)) += 1.0;
    deg(Index(v)) += 1.0;
  }
  VecD inv_sqrt = deg.array().rsqrt();
  for (Index i = 0; i < n; ++i)
    triplets.emplace_back(i, i, S(inv_sqrt(i) * inv_sqrt(i)));
  for (const auto& [u, v] : g.undirected_edges()) {
    const S w = S(inv_sqrt(Index(u)) * inv_sqrt(Index(v)));
    triplets.emplace_back(Index(u), Index(v), w);
    triplets.emplace_back(Index(v), Index(u), w);
  }
  SpMat<S> snorm(n, n);
  snorm.setFromTriplets(triplets.begin(), triplets.end());
  return snorm;
}

template <class S>
struct GnnWeights {
  Mat<S> w0;      // in_dim x hidden
  Mat<S> w1;      // hidden x out_dim
  Mat<S> mlp_w1;  // 2*out_dim x mlp_hidden
  Vec<S> mlp_b1;
  Vec<S> mlp_w2;  // mlp_hidden
  S mlp_b2 = S(0);

  static GnnWeights init(Index in_dim, Index hidden, Index out_dim,
                         Index mlp_hidden, std::uint64_t seed) {
    GnnWeights w;
    Rng rng(seed);
    auto glorot = [&](Mat<S>& m, Index rows, Index cols) {
      m.resize(rows, cols);
      const double sd = std::sqrt(2.0 / double(rows + cols));
      for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) m(r, c) = S(rng.normal(0.0, sd));
    };
    glorot(w.w0, in_dim, hidden);
    glorot(w.w1, hidden, out_dim);
    glorot(w.mlp_w1, 2 * out_dim, mlp_hidden);
    w.mlp_b1 = Vec<S>::Zero(mlp_hidden);
    w.mlp_w2.resize(mlp_hidden);
    const double sd = std::sqrt(2.0 / double(mlp_hidden + 1));
    for (Index r = 0; r < mlp_hidden; ++r) w.mlp_w2(r) = S(rng.normal(0.0, sd));
    w.mlp_b2 = S(0);
    return w;
  }

  std::vector<std::pair<S*, Index>> flat() {
    return {{w0.data(), w0.size()},         {w1.data(), w1.size()},
            {mlp_w1.data(), mlp_w1.size()}, {mlp_b1.data(), mlp_b1.size()},
            {mlp_w2.data(), mlp_w2.size()}, {&mlp_b2, 1}};
  }
};

// Two GCN layers: H1 = relu(S H0 W0), H2 = S H1 W1 (identity on the output
// layer), full-batch.
template <class S>
Mat<S> sage_forward(const SpMat<S>& snorm, const Mat<S>& h0,
                    const GnnWeights<S>& w) {
  Mat<S> a0 = (snorm * h0) * w.w0;
  Mat<S> h1 = a0.cwiseMax(S(0));
  return (snorm * h1) * w.w1;
}

// sigmoid(w2 . relu(W1 [h_u; h_v] + b1) + b2); concatenation order (u, v)
template <class S>
S mlp_score(const RowVec<S>& h_u, const RowVec<S>& h_v, const GnnWeights<S>& w) {
  RowVec<S> x(h_u.size() + h_v.size());
  x << h_u, h_v;
  RowVec<S> a = (x * w.mlp_w1 + w.mlp_b1.transpose()).cwiseMax(S(0));
  const S z = a * w.mlp_w2 + w.mlp_b2;
  return S(1) / (S(1) + std::exp(-z));
}

struct GnnHp {
  double lr = 1e-2;
  int epochs = 200;
  Index hidden = 64;
  Index out_dim = 64;
  Index mlp_hidden = 64;
  std::uint64_t seed = 123;
};

struct PairExample {
  NodeId u, v;
  int label;
};

// Mean binary cross-entropy and analytic gradients over the pair set.
// Gradients flow to W0, W1 and the MLP parameters; H0 is frozen input.
template <class S>
double gnn_loss_and_grads(const SpMat<S>& snorm, const Mat<S>& h0,
                          const GnnWeights<S>& w,
                          const std::vector<PairExample>& pairs,
                          GnnWeights<S>* grads = nullptr) {
  const Index n_pairs = Index(pairs.size());
  if (n_pairs == 0) throw ConfigError("gnn: empty pair set");
  const Index h = w.w1.cols();

  Mat<S> b0 = snorm * h0;
  Mat<S> a0 = b0 * w.w0;
  Mat<S> h1 = a0.cwiseMax(S(0));
  Mat<S> b1 = snorm * h1;
  Mat<S> h2 = b1 * w.w1;

  Mat<S> x(n_pairs, 2 * h);
  for (Index i = 0; i < n_pairs; ++i) {
    x.block(i, 0, 1, h) = h2.row(Index(pairs[std::size_t(i)].u));
    x.block(i, h, 1, h) = h2.row(Index(pairs[std::size_t(i)].v));
  }
  Mat<S> pre = x * w.mlp_w1;
  pre.rowwise() += w.mlp_b1.transpose();
  Mat<S> act = pre.cwiseMax(S(0));
  Vec<S> z = act * w.mlp_w2;
  z.array() += w.mlp_b2;

  double loss = 0.0;
  Vec<S> dz(n_pairs);
  for (Index i = 0; i < n_pairs; ++i) {
    const double zi = double(z(i));
    const double y = pairs[std::size_t(i)].label;
    // softplus(z) - y z, computed stably
    loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) -
            y * zi;
    const double s = 1.0 / (1.0 + std::exp(-zi));
    dz(i) = S((s - y) / double(n_pairs));
  }
  loss /= double(n_pairs);
  if (!grads) return loss;

  grads->mlp_w2.noalias() = act.transpose() * dz;
  grads->mlp_b2 = dz.sum();
  Mat<S> dact = dz * w.mlp_w2.transpose();
  Mat<S> dpre =
      (dact.array() * (pre.array() > S(0)).template cast<S>()).matrix();
  grads->mlp_w1.noalias() = x.transpose() * dpre;
  grads->mlp_b1.noalias() = dpre.colwise().sum().transpose();
  Mat<S> dx = dpre * w.mlp_w1.transpose();

  Mat<S> dh2 = Mat<S>::Zero(h2.rows(), h2.cols());
  for (Index i = 0; i < n_pairs; ++i) {
    dh2.row(Index(pairs[std::size_t(i)].u)) += dx.block(i, 0, 1, h);
    dh2.row(Index(pairs[std::size_t(i)].v)) += dx.block(i, h, 1, h);
  }

  grads->w1.noalias() = b1.transpose() * dh2;
  Mat<S> db1 = dh2 * w.w1.transpose();
  Mat<S> dh1 = snorm.transpose() * db1;
  Mat<S> da0 = (dh1.array() * (a0.array() > S(0)).template cast<S>()).matrix();
  grads->w0.noalias() = b0.transpose() * da0;
  return loss;
}

template <class S>
struct GnnTrainResult {
  GnnWeights<S> weights;
  std::vector<double> loss_curve;
};

template <class S>
GnnTrainResult<S> train_gnn(const SpMat<S>& snorm, const Mat<S>& h0,
                            const std::vector<PairExample>& train_pairs,
                            const GnnHp& hp) {
  GnnTrainResult<S> result;
  result.weights = GnnWeights<S>::init(h0.cols(), hp.hidden, hp.out_dim,
                                       hp.mlp_hidden, hp.seed);
  GnnWeights<S> grads = result.weights;  // shapes only

  // flat Adam state across all parameter blocks
  auto params = result.weights.flat();
  Index total = 0;
  for (auto& [p, sz] : params) total += sz;
  Vec<S> m = Vec<S>::Zero(total), v = Vec<S>::Zero(total);
  const S b1 = S(0.9), b2 = S(0.999), eps = S(1e-8), lr = S(hp.lr);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    const double loss =
        gnn_loss_and_grads(snorm, h0, result.weights, train_pairs, &grads);
    if (!std::isfinite(loss))
      throw RuntimeError("gnn training diverged at epoch " +
                         std::to_string(epoch));
    result.loss_curve.push_back(loss);

    auto gflat = grads.flat();
    const S bc1 = S(1) - S(std::pow(double(b1), epoch));
    const S bc2 = S(1) - S(std::pow(double(b2), epoch));
    Index off = 0;
    for (std::size_t blk = 0; blk < params.size(); ++blk) {
      S* p = params[blk].first;
      const S* gp = gflat[blk].first;
      for (Index k = 0; k < params[blk].second; ++k) {
        S& mk = m(off + k);
        S& vk = v(off + k);
        mk = b1 * mk + (S(1) - b1) * gp[k];
        vk = b2 * vk + (S(1) - b2) * gp[k] * gp[k];
        p[k] -= lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps);
      }
      off += params[blk].second;
    }
  }
  return result;
}

// Scores for a pair list given fixed embeddings.
template <class S>
std::vector<double> score_pairs(const Mat<S>& h2,
                                const std::vector<PairExample>& pairs,
                                const GnnWeights<S>& w) {
  std::vector<double> scores(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const RowVec<S> hu = h2.row(Index(pairs[i].u));
    const RowVec<S> hv = h2.row(Index(pairs[i].v));
    scores[i] = double(mlp_score(hu, hv, w));
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Feature matrices (spec's nine H0 variants reduce to these four kinds)
// ---------------------------------------------------------------------------

enum class FeatureKind { kRandom, kOnehotMajor, kOnehotSub, kModelEncoded };
FeatureKind feature_kind_from_name(const std::string& name);
const char* feature_kind_name(FeatureKind kind);

struct FeatureMatrix {
  FeatureKind kind;
  MatD matrix;                           // N x d
  std::vector<std::string> class_names;  // one-hot kinds
};

FeatureMatrix build_random_features(const CitationGraph& g, Index dims,
                                    std::uint64_t seed);
FeatureMatrix build_onehot_features(const CitationGraph& g, bool use_sub);

}  // namespace chronolm
