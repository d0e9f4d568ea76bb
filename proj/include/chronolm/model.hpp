#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronolm/common.hpp"
#include "chronolm/rng.hpp"
#include "chronolm/vocab.hpp"

namespace chronolm {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr int kIgnoreLabel = -1;

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 256;
  int max_len = 128;
  int vocab_size = 0;
  double dropout = 0.0;
  std::uint64_t seed = 42;
  bool tie_embeddings = false;
  bool head_transform = true;  // dense+gelu+layernorm before the vocab projection

  void validate() const {
    if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
      throw ConfigError("d_model must be a positive multiple of n_heads");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must lie in [0, 1)");
    if (vocab_size <= kNumSpecials)
      throw ConfigError("vocab_size must exceed the number of special tokens");
    if (n_layers <= 0 || d_ff <= 0 || max_len < 2)
      throw ConfigError("invalid model dimensions");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n_layers"] = n_layers;
    j["n_heads"] = n_heads;
    j["d_model"] = d_model;
    j["d_ff"] = d_ff;
    j["max_len"] = max_len;
    j["vocab_size"] = vocab_size;
    j["dropout"] = dropout;
    j["seed"] = seed;
    j["tie_embeddings"] = tie_embeddings;
    j["head_transform"] = head_transform;
    return j;
  }
  static ModelConfig from_json(const nlohmann::ordered_json& j) {
    ModelConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.tie_embeddings = j.at("tie_embeddings").get<bool>();
    c.head_transform = j.at("head_transform").get<bool>();
    return c;
  }
  bool operator==(const ModelConfig&) const = default;
};

// "paper" preset mirrors the BERT-base shape; "desk" is the CPU default.
inline ModelConfig desk_config(int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}
inline ModelConfig paper_config(int vocab_size) {
  ModelConfig c;
  c.n_layers = 12;
  c.n_heads = 12;
  c.d_model = 768;
  c.d_ff = 3072;
  c.max_len = 512;
  c.vocab_size = vocab_size;
  return c;
}

template <class S>
struct TensorRef {
  std::string name;
  S* data;
  Index rows;
  Index cols;
  bool is_vector;  // serialized shape [rows] instead of [rows, cols]
  Index size() const { return rows * cols; }
};

template <class S>
struct ModelParams {
  ModelConfig config;

  Mat<S> word_emb;  // V x d
  Mat<S> pos_emb;   // max_len x d
  struct Layer {
    Vec<S> ln1_g, ln1_b;
    Mat<S> wq, wk, wv, wo;  // d x d
    Vec<S> bq, bk, bv, bo;
    Vec<S> ln2_g, ln2_b;
    Mat<S> w1;  // d x d_ff
    Vec<S> b1;
    Mat<S> w2;  // d_ff x d
    Vec<S> b2;
  };
  std::vector<Layer> layers;
  Vec<S> lnf_g, lnf_b;
  Mat<S> head_w;  // d x d (head_transform only)
  Vec<S> head_b;
  Vec<S> head_ln_g, head_ln_b;
  Mat<S> out_w;  // d x V (untied only)
  Vec<S> out_b;  // V

  ModelParams() = default;

  explicit ModelParams(const ModelConfig& c) : config(c) {
    config.validate();
    const int d = c.d_model;
    word_emb = Mat<S>::Zero(c.vocab_size, d);
    pos_emb = Mat<S>::Zero(c.max_len, d);
    layers.resize(std::size_t(c.n_layers));
    for (auto& l : layers) {
      l.ln1_g = Vec<S>::Ones(d);
      l.ln1_b = Vec<S>::Zero(d);
      l.wq = Mat<S>::Zero(d, d);
      l.wk = Mat<S>::Zero(d, d);
      l.wv = Mat<S>::Zero(d, d);
      l.wo = Mat<S>::Zero(d, d);
      l.bq = Vec<S>::Zero(d);
      l.bk = Vec<S>::Zero(d);
      l.bv = Vec<S>::Zero(d);
      l.bo = Vec<S>::Zero(d);
      l.ln2_g = Vec<S>::Ones(d);
      l.ln2_b = Vec<S>::Zero(d);
      l.w1 = Mat<S>::Zero(d, c.d_ff);
      l.b1 = Vec<S>::Zero(c.d_ff);
      l.w2 = Mat<S>::Zero(c.d_ff, d);
      l.b2 = Vec<S>::Zero(d);
    }
    lnf_g = Vec<S>::Ones(d);
    lnf_b = Vec<S>::Zero(d);
    if (c.head_transform) {
      head_w = Mat<S>::Zero(d, d);
      head_b = Vec<S>::Zero(d);
      head_ln_g = Vec<S>::Ones(d);
      head_ln_b = Vec<S>::Zero(d);
    }
    if (!c.tie_embeddings) out_w = Mat<S>::Zero(d, c.vocab_size);
    out_b = Vec<S>::Zero(c.vocab_size);
  }

  // BERT-style init: weights ~ N(0, 0.02), biases 0, layer-norm gain 1
  static ModelParams init_random(const ModelConfig& c) {
    ModelParams p(c);
    Rng rng(c.seed);
    auto fill = [&](Mat<S>& m) {
      for (Index col = 0; col < m.cols(); ++col)
        for (Index row = 0; row < m.rows(); ++row)
          m(row, col) = static_cast<S>(rng.normal(0.0, 0.02));
    };
    fill(p.word_emb);
    fill(p.pos_emb);
    for (auto& l : p.layers) {
      fill(l.wq);
      fill(l.wk);
      fill(l.wv);
      fill(l.wo);
      fill(l.w1);
      fill(l.w2);
    }
    if (c.head_transform) fill(p.head_w);
    if (!c.tie_embeddings) fill(p.out_w);
    return p;
  }

  template <class T>
  ModelParams<T> cast() const {
    ModelParams<T> out(config);
    auto src = tensor_refs();
    auto dst = out.tensor_refs();
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (Index k = 0; k < src[i].size(); ++k)
        dst[i].data[k] = static_cast<T>(src[i].data[k]);
    }
    return out;
  }

  std::vector<TensorRef<S>> tensor_refs() {
    std::vector<TensorRef<S>> refs;
    auto mat = [&](const std::string& name, Mat<S>& m) {
      refs.push_back({name, m.data(), m.rows(), m.cols(), false});
    };
    auto vec = [&](const std::string& name, Vec<S>& v) {
      refs.push_back({name, v.data(), v.rows(), 1, true});
    };
    mat("embedding.word", word_emb);
    mat("embedding.position", pos_emb);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string prefix = "layer." + std::to_string(i) + ".";
      auto& l = layers[i];
      vec(prefix + "ln1.gain", l.ln1_g);
      vec(prefix + "ln1.bias", l.ln1_b);
      mat(prefix + "attention.wq", l.wq);
      vec(prefix + "attention.bq", l.bq);
      mat(prefix + "attention.wk", l.wk);
      vec(prefix + "attention.bk", l.bk);
      mat(prefix + "attention.wv", l.wv);
      vec(prefix + "attention.bv", l.bv);
      mat(prefix + "attention.wo", l.wo);
      vec(prefix + "attention.bo", l.bo);
      vec(prefix + "ln2.gain", l.ln2_g);
      vec(prefix + "ln2.bias", l.ln2_b);
      mat(prefix + "ffn.w1", l.w1);
      vec(prefix + "ffn.b1", l.b1);
      mat(prefix + "ffn.w2", l.w2);
      vec(prefix + "ffn.b2", l.b2);
    }
    vec("final_ln.gain", lnf_g);
    vec("final_ln.bias", lnf_b);
    if (config.head_transform) {
      mat("head.dense.w", head_w);
      vec("head.dense.b", head_b);
      vec("head.ln.gain", head_ln_g);
      vec("head.ln.bias", head_ln_b);
    }
    if (!config.tie_embeddings) mat("head.output.w", out_w);
    vec("head.output.b", out_b);
    return refs;
  }
  std::vector<TensorRef<const S>> tensor_refs() const {
    auto refs = const_cast<ModelParams*>(this)->tensor_refs();
    std::vector<TensorRef<const S>> out;
    out.reserve(refs.size());
    for (auto& r : refs) out.push_back({r.name, r.data, r.rows, r.cols, r.is_vector});
    return out;
  }
};

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

struct MaskedBatch {
  Eigen::MatrixXi input_ids;                                   // B x L
  Eigen::MatrixXi labels;                                      // kIgnoreLabel = unmasked
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> attention_mask;

  Index batch() const { return input_ids.rows(); }
  Index seq_len() const { return input_ids.cols(); }
  int masked_count() const { return int((labels.array() != kIgnoreLabel).count()); }
};

struct MaskingPolicy {
  double select_prob = 0.15;
  double mask_frac = 0.80;
  double random_frac = 0.10;  // remainder left unchanged
};

// Dynamic masking: callers derive a fresh rng_seed per (epoch, batch).
// random_pool, when given, restricts replacement draws to ids present in the
// training corpus so unseen embedding rows stay untouched; the default draws
// uniformly over non-special vocabulary ids.
inline MaskedBatch apply_masking(const std::vector<EncodedSequence>& batch,
                                 int vocab_size, std::uint64_t rng_seed,
                                 const std::vector<int>* random_pool = nullptr,
                                 const MaskingPolicy& policy = MaskingPolicy()) {
  if (batch.empty()) return {};
  const Index bsz = Index(batch.size());
  const Index len = Index(batch[0].ids.size());
  MaskedBatch out;
  out.input_ids.resize(bsz, len);
  out.labels.setConstant(bsz, len, kIgnoreLabel);
  out.attention_mask.resize(bsz, len);

  Rng rng(rng_seed);
  for (Index b = 0; b < bsz; ++b) {
    const auto& seq = batch[std::size_t(b)];
    if (Index(seq.ids.size()) != len)
      throw ConfigError("apply_masking: ragged batch");
    for (Index p = 0; p < len; ++p) {
      const int id = seq.ids[std::size_t(p)];
      out.input_ids(b, p) = id;
      out.attention_mask(b, p) = seq.attention_mask[std::size_t(p)];
      const bool eligible = seq.attention_mask[std::size_t(p)] == 1 &&
                            id != kClsId && id != kSepId && id != kPadId;
      if (!eligible) continue;
      if (rng.uniform() >= policy.select_prob) continue;
      out.labels(b, p) = id;
      const double u = rng.uniform();
      if (u < policy.mask_frac) {
        out.input_ids(b, p) = kMaskId;
      } else if (u < policy.mask_frac + policy.random_frac) {
        if (random_pool && !random_pool->empty()) {
          out.input_ids(b, p) =
              (*random_pool)[rng.uniform_int(random_pool->size())];
        } else {
          out.input_ids(b, p) =
              kNumSpecials + int(rng.uniform_int(std::uint64_t(vocab_size - kNumSpecials)));
        }
      }  // else: keep the original token
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <class S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(0.7071067811865475)));
}
template <class S>
S gelu_grad(S x) {
  const S phi = std::exp(S(-0.5) * x * x) * S(0.3989422804014327);
  const S Phi = S(0.5) * (S(1) + std::erf(x * S(0.7071067811865475)));
  return Phi + x * phi;
}

namespace detail {

template <class S>
void layer_norm_forward(const Mat<S>& x, const Vec<S>& g, const Vec<S>& b,
                        Mat<S>& xhat, Vec<S>& inv, Mat<S>& y) {
  const Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  inv.resize(n);
  y.resize(n, d);
  for (Index r = 0; r < n; ++r) {
    const S mu = x.row(r).mean();
    auto centered = (x.row(r).array() - mu).eval();
    const S var = centered.square().mean();
    const S iv = S(1) / std::sqrt(var + S(kLayerNormEps));
    inv(r) = iv;
    xhat.row(r) = centered * iv;
    y.row(r) = xhat.row(r).array() * g.transpose().array() + b.transpose().array();
  }
}

// dy -> dx given cached xhat/inv; accumulates dg/db
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat,
                           const Vec<S>& inv, const Vec<S>& g, Vec<S>& dg,
                           Vec<S>& db) {
  const Index n = dy.rows(), d = dy.cols();
  Mat<S> dx(n, d);
  for (Index r = 0; r < n; ++r) {
    auto dxhat = (dy.row(r).array() * g.transpose().array()).eval();
    const S m1 = dxhat.mean();
    const S m2 = (dxhat * xhat.row(r).array()).mean();
    dx.row(r) = ((dxhat - m1) - xhat.row(r).array() * m2) * inv(r);
  }
  dg.noalias() += (dy.array() * xhat.array()).colwise().sum().matrix().transpose();
  db.noalias() += dy.colwise().sum().transpose();
  return dx;
}

template <class S>
struct LayerCache {
  Mat<S> xhat1, n1;
  Vec<S> inv1;
  Mat<S> q, k, v;
  std::vector<Mat<S>> probs;  // per head, Le x Le
  Mat<S> ctx;
  Mat<S> drop_attn;  // dropout masks (empty when p == 0)
  Mat<S> xhat2;
  Vec<S> inv2;
  Mat<S> n2, u, gact;
  Mat<S> drop_ffn;
};

template <class S>
struct SeqCache {
  Index le = 0;                 // processed prefix length
  std::vector<int> ids;         // input ids, first le entries used
  RowVec<S> mask_bias;          // 0 / -inf per key
  Mat<S> h0;
  Mat<S> drop_emb;
  std::vector<LayerCache<S>> layers;
  std::vector<Mat<S>> h_in;     // residual-stream input per layer
  std::vector<Mat<S>> h_mid;    // after attention residual
  Mat<S> h_out;                 // before final LN
  Mat<S> xhat_f, hfin;
  Vec<S> inv_f;
};

template <class S>
Mat<S> dropout_mask(Index rows, Index cols, double p, Rng* rng) {
  Mat<S> m(rows, cols);
  const S scale = S(1.0 / (1.0 - p));
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r)
      m(r, c) = rng->uniform() < p ? S(0) : scale;
  return m;
}

// Transformer encoder over the first `le` positions of one sequence.
// Attention is restricted by the attention mask: masked keys get -inf scores.
template <class S>
void encoder_forward(const ModelParams<S>& params, const int* ids,
                     const std::uint8_t* attn_mask, Index full_len,
                     SeqCache<S>& c, Rng* dropout_rng = nullptr,
                     bool trim_to_mask = false) {
  const auto& cfg = params.config;
  const int d = cfg.d_model;
  const int heads = cfg.n_heads;
  const int dh = d / heads;
  const S scale = S(1) / std::sqrt(S(dh));
  const double p = cfg.dropout;
  const bool use_dropout = dropout_rng != nullptr && p > 0.0;

  Index le = full_len;
  if (trim_to_mask) {
    le = 0;
    for (Index i = 0; i < full_len; ++i)
      if (attn_mask[i]) le = i + 1;
  }
  c.le = le;
  c.ids.assign(ids, ids + le);
  c.mask_bias.resize(le);
  for (Index i = 0; i < le; ++i)
    c.mask_bias(i) = attn_mask[i] ? S(0) : -std::numeric_limits<S>::infinity();

  c.h0.resize(le, d);
  for (Index i = 0; i < le; ++i)
    c.h0.row(i) = params.word_emb.row(ids[i]) + params.pos_emb.row(i);
  if (use_dropout) {
    c.drop_emb = dropout_mask<S>(le, d, p, dropout_rng);
    c.h0.array() *= c.drop_emb.array();
  }

  c.layers.assign(std::size_t(cfg.n_layers), {});
  c.h_in.assign(std::size_t(cfg.n_layers), {});
  c.h_mid.assign(std::size_t(cfg.n_layers), {});

  Mat<S> h = c.h0;
  for (int li = 0; li < cfg.n_layers; ++li) {
    auto& lc = c.layers[std::size_t(li)];
    const auto& lp = params.layers[std::size_t(li)];
    c.h_in[std::size_t(li)] = h;

    layer_norm_forward(h, lp.ln1_g, lp.ln1_b, lc.xhat1, lc.inv1, lc.n1);
    lc.q.noalias() = lc.n1 * lp.wq;
    lc.q.rowwise() += lp.bq.transpose();
    lc.k.noalias() = lc.n1 * lp.wk;
    lc.k.rowwise() += lp.bk.transpose();
    lc.v.noalias() = lc.n1 * lp.wv;
    lc.v.rowwise() += lp.bv.transpose();

    lc.ctx.resize(le, d);
    lc.probs.assign(std::size_t(heads), {});
    for (int hh = 0; hh < heads; ++hh) {
      auto qh = lc.q.middleCols(hh * dh, dh);
      auto kh = lc.k.middleCols(hh * dh, dh);
      auto vh = lc.v.middleCols(hh * dh, dh);
      Mat<S> scores = qh * kh.transpose() * scale;
      scores.rowwise() += c.mask_bias;
      Mat<S>& pr = lc.probs[std::size_t(hh)];
      pr.resize(le, le);
      for (Index r = 0; r < le; ++r) {
        const S mx = scores.row(r).maxCoeff();
        if (!(mx > -std::numeric_limits<S>::infinity())) {
          pr.row(r).setZero();  // fully masked row: no attention output
          continue;
        }
        auto e = (scores.row(r).array() - mx).exp().eval();
        pr.row(r) = e / e.sum();
      }
      lc.ctx.middleCols(hh * dh, dh).noalias() = pr * vh;
    }
    Mat<S> attn = lc.ctx * lp.wo;
    attn.rowwise() += lp.bo.transpose();
    if (use_dropout) {
      lc.drop_attn = dropout_mask<S>(le, d, p, dropout_rng);
      attn.array() *= lc.drop_attn.array();
    }

    Mat<S> hm = h + attn;
    c.h_mid[std::size_t(li)] = hm;

    layer_norm_forward(hm, lp.ln2_g, lp.ln2_b, lc.xhat2, lc.inv2, lc.n2);
    lc.u.noalias() = lc.n2 * lp.w1;
    lc.u.rowwise() += lp.b1.transpose();
    lc.gact = lc.u.unaryExpr([](S x) { return gelu(x); });
    Mat<S> ffn = lc.gact * lp.w2;
    ffn.rowwise() += lp.b2.transpose();
    if (use_dropout) {
      lc.drop_ffn = dropout_mask<S>(le, d, p, dropout_rng);
      ffn.array() *= lc.drop_ffn.array();
    }
    h = hm + ffn;
  }
  c.h_out = h;
  layer_norm_forward(h, params.lnf_g, params.lnf_b, c.xhat_f, c.inv_f, c.hfin);
}

// MLM head for selected rows of hfin; returns logits (#rows x V) and caches
// the transform intermediates needed by the backward pass.
template <class S>
struct HeadCache {
  Mat<S> in;  // selected hfin rows
  Mat<S> u, g, xhat, z;
  Vec<S> inv;
  Mat<S> logits;
};

template <class S>
void head_forward(const ModelParams<S>& params, const Mat<S>& rows,
                  HeadCache<S>& hc) {
  const auto& cfg = params.config;
  hc.in = rows;
  const Mat<S>* proj_in = &hc.in;
  if (cfg.head_transform) {
    hc.u.noalias() = rows * params.head_w;
    hc.u.rowwise() += params.head_b.transpose();
    hc.g = hc.u.unaryExpr([](S x) { return gelu(x); });
    layer_norm_forward(hc.g, params.head_ln_g, params.head_ln_b, hc.xhat,
                       hc.inv, hc.z);
    proj_in = &hc.z;
  }
  if (cfg.tie_embeddings) {
    hc.logits.noalias() = (*proj_in) * params.word_emb.transpose();
  } else {
    hc.logits.noalias() = (*proj_in) * params.out_w;
  }
  hc.logits.rowwise() += params.out_b.transpose();
}

}  // namespace detail

// Full logits for one encoded sequence (layout: max_len x vocab_size).
template <class S>
Mat<S> forward_logits(const ModelParams<S>& params, const std::vector<int>& ids,
                      const std::vector<std::uint8_t>& attention_mask) {
  if (Index(ids.size()) > params.config.max_len)
    throw ConfigError("sequence exceeds max_len");
  detail::SeqCache<S> cache;
  detail::encoder_forward(params, ids.data(), attention_mask.data(),
                          Index(ids.size()), cache);
  detail::HeadCache<S> hc;
  detail::head_forward(params, cache.hfin, hc);
  return hc.logits;
}

// Mean cross-entropy over non-ignored labels. Zero masked positions -> 0
// (reported via *masked_count so the caller can warn).
template <class S>
double mlm_loss(const Mat<S>& logits, const std::vector<int>& labels,
                int* masked_count = nullptr) {
  if (Index(labels.size()) != logits.rows())
    throw ConfigError("mlm_loss: labels/logits mismatch");
  double total = 0.0;
  int n = 0;
  for (Index r = 0; r < logits.rows(); ++r) {
    const int label = labels[std::size_t(r)];
    if (label == kIgnoreLabel) continue;
    const S mx = logits.row(r).maxCoeff();
    const double lse =
        double(mx) + std::log((logits.row(r).array() - mx).exp().sum());
    total += lse - double(logits(r, label));
    ++n;
  }
  if (masked_count) *masked_count = n;
  return n > 0 ? total / n : 0.0;
}

template <class S>
using ModelGrads = ModelParams<S>;  // same shapes, zero-initialized

// Forward + analytic backward over a masked batch. Returns mean masked
// cross-entropy; grads may be null for loss-only evaluation.
template <class S>
double mlm_loss_and_grads(const ModelParams<S>& params, const MaskedBatch& batch,
                          ModelGrads<S>* grads = nullptr,
                          Rng* dropout_rng = nullptr,
                          int* masked_count_out = nullptr) {
  const auto& cfg = params.config;
  const int d = cfg.d_model;
  const int heads = cfg.n_heads;
  const int dh = d / heads;
  const S scale = S(1) / std::sqrt(S(dh));

  const int total_masked = batch.masked_count();
  if (masked_count_out) *masked_count_out = total_masked;
  if (total_masked == 0) return 0.0;
  const S w = S(1) / S(total_masked);

  double loss = 0.0;
  for (Index b = 0; b < batch.batch(); ++b) {
    detail::SeqCache<S> c;
    std::vector<int> ids(std::size_t(batch.seq_len()));
    std::vector<std::uint8_t> am(std::size_t(batch.seq_len()));
    for (Index i = 0; i < batch.seq_len(); ++i) {
      ids[std::size_t(i)] = batch.input_ids(b, i);
      am[std::size_t(i)] = batch.attention_mask(b, i);
    }
    detail::encoder_forward(params, ids.data(), am.data(), batch.seq_len(), c,
                            dropout_rng, /*trim_to_mask=*/true);

    std::vector<Index> pos;
    for (Index i = 0; i < c.le; ++i)
      if (batch.labels(b, i) != kIgnoreLabel) pos.push_back(i);
    if (pos.empty()) continue;

    Mat<S> rows(Index(pos.size()), d);
    for (Index r = 0; r < Index(pos.size()); ++r)
      rows.row(r) = c.hfin.row(pos[std::size_t(r)]);
    detail::HeadCache<S> hc;
    detail::head_forward(params, rows, hc);

    // softmax cross-entropy at masked positions
    Mat<S> dlogits(hc.logits.rows(), hc.logits.cols());
    for (Index r = 0; r < hc.logits.rows(); ++r) {
      const int label = batch.labels(b, pos[std::size_t(r)]);
      const S mx = hc.logits.row(r).maxCoeff();
      auto e = (hc.logits.row(r).array() - mx).exp().eval();
      const S denom = e.sum();
      loss += double(mx) + std::log(double(denom)) - double(hc.logits(r, label));
      dlogits.row(r) = (e / denom) * w;
      dlogits(r, label) -= w;
    }
    if (!grads) continue;

    // ---- head backward ----
    Mat<S> dproj_in;
    if (cfg.tie_embeddings) {
      grads->word_emb.noalias() +=
          dlogits.transpose() * (cfg.head_transform ? hc.z : hc.in);
      dproj_in.noalias() = dlogits * params.word_emb;
    } else {
      grads->out_w.noalias() +=
          (cfg.head_transform ? hc.z : hc.in).transpose() * dlogits;
      dproj_in.noalias() = dlogits * params.out_w.transpose();
    }
    grads->out_b.noalias() += dlogits.colwise().sum().transpose();

    Mat<S> dhfin_rows;
    if (cfg.head_transform) {
      Mat<S> dg = detail::layer_norm_backward(dproj_in, hc.xhat, hc.inv,
                                              params.head_ln_g, grads->head_ln_g,
                                              grads->head_ln_b);
      Mat<S> du =
          dg.array() * hc.u.unaryExpr([](S x) { return gelu_grad(x); }).array();
      grads->head_w.noalias() += hc.in.transpose() * du;
      grads->head_b.noalias() += du.colwise().sum().transpose();
      dhfin_rows.noalias() = du * params.head_w.transpose();
    } else {
      dhfin_rows = dproj_in;
    }

    Mat<S> dhfin = Mat<S>::Zero(c.le, d);
    for (Index r = 0; r < Index(pos.size()); ++r)
      dhfin.row(pos[std::size_t(r)]) = dhfin_rows.row(r);

    // ---- final LN ----
    Mat<S> dres = detail::layer_norm_backward(dhfin, c.xhat_f, c.inv_f,
                                              params.lnf_g, grads->lnf_g,
                                              grads->lnf_b);

    // ---- layers in reverse ----
    for (int li = cfg.n_layers - 1; li >= 0; --li) {
      auto& lc = c.layers[std::size_t(li)];
      const auto& lp = params.layers[std::size_t(li)];
      auto& lg = grads->layers[std::size_t(li)];

      // dres is d(loss)/d(h_out of layer li)
      Mat<S> dffn = dres;
      if (lc.drop_ffn.size() > 0) dffn.array() *= lc.drop_ffn.array();
      Mat<S> dgact = dffn * lp.w2.transpose();
      lg.w2.noalias() += lc.gact.transpose() * dffn;
      lg.b2.noalias() += dffn.colwise().sum().transpose();
      Mat<S> du =
          dgact.array() * lc.u.unaryExpr([](S x) { return gelu_grad(x); }).array();
      lg.w1.noalias() += lc.n2.transpose() * du;
      lg.b1.noalias() += du.colwise().sum().transpose();
      Mat<S> dn2 = du * lp.w1.transpose();
      Mat<S> dhm = detail::layer_norm_backward(dn2, lc.xhat2, lc.inv2, lp.ln2_g,
                                               lg.ln2_g, lg.ln2_b);
      dhm += dres;  // residual

      Mat<S> dattn = dhm;
      if (lc.drop_attn.size() > 0) dattn.array() *= lc.drop_attn.array();
      Mat<S> dctx = dattn * lp.wo.transpose();
      lg.wo.noalias() += lc.ctx.transpose() * dattn;
      lg.bo.noalias() += dattn.colwise().sum().transpose();

      Mat<S> dq = Mat<S>::Zero(c.le, d);
      Mat<S> dk = Mat<S>::Zero(c.le, d);
      Mat<S> dv = Mat<S>::Zero(c.le, d);
      for (int hh = 0; hh < heads; ++hh) {
        auto vh = lc.v.middleCols(hh * dh, dh);
        auto qh = lc.q.middleCols(hh * dh, dh);
        auto kh = lc.k.middleCols(hh * dh, dh);
        const Mat<S>& pr = lc.probs[std::size_t(hh)];
        auto dctx_h = dctx.middleCols(hh * dh, dh);
        Mat<S> dpr = dctx_h * vh.transpose();
        dv.middleCols(hh * dh, dh).noalias() = pr.transpose() * dctx_h;
        // softmax rows backward
        Mat<S> ds(c.le, c.le);
        for (Index r = 0; r < c.le; ++r) {
          const S dot = dpr.row(r).dot(pr.row(r));
          ds.row(r) = pr.row(r).array() * (dpr.row(r).array() - dot);
        }
        dq.middleCols(hh * dh, dh).noalias() = ds * kh * scale;
        dk.middleCols(hh * dh, dh).noalias() = ds.transpose() * qh * scale;
      }
      Mat<S> dn1 = dq * lp.wq.transpose() + dk * lp.wk.transpose() +
                   dv * lp.wv.transpose();
      lg.wq.noalias() += lc.n1.transpose() * dq;
      lg.bq.noalias() += dq.colwise().sum().transpose();
      lg.wk.noalias() += lc.n1.transpose() * dk;
      lg.bk.noalias() += dk.colwise().sum().transpose();
      lg.wv.noalias() += lc.n1.transpose() * dv;
      lg.bv.noalias() += dv.colwise().sum().transpose();

      Mat<S> dh_in = detail::layer_norm_backward(dn1, lc.xhat1, lc.inv1,
                                                 lp.ln1_g, lg.ln1_g, lg.ln1_b);
      dres = dhm + dh_in;
    }

    // ---- embeddings ----
    if (c.drop_emb.size() > 0) dres.array() *= c.drop_emb.array();
    for (Index i = 0; i < c.le; ++i) {
      grads->word_emb.row(c.ids[std::size_t(i)]) += dres.row(i);
      grads->pos_emb.row(i) += dres.row(i);
    }
  }
  return loss / total_masked;
}

// ---------------------------------------------------------------------------
// Inference helpers
// ---------------------------------------------------------------------------

// Final-layer hidden state at the [CLS] position.
template <class S>
Vec<S> encode_cls(const ModelParams<S>& params, const Vocabulary& vocab,
                  std::string_view text) {
  EncodedSequence seq = encode(text, vocab, params.config.max_len);
  detail::SeqCache<S> cache;
  detail::encoder_forward(params, seq.ids.data(), seq.attention_mask.data(),
                          Index(seq.ids.size()), cache, nullptr,
                          /*trim_to_mask=*/true);
  return cache.hfin.row(0).transpose();
}

struct FillMaskResult {
  std::vector<std::pair<std::string, double>> top;  // (token, probability)
  Vec<double> probabilities;  // over vocab ids; specials fixed at 0
};

// Softmax over the non-special vocabulary at the single [MASK] position;
// ties broken by token id.
template <class S>
FillMaskResult fill_mask(const ModelParams<S>& params, const Vocabulary& vocab,
                         std::string_view sentence, int k) {
  EncodedSequence seq = encode(sentence, vocab, params.config.max_len);
  int mask_pos = -1;
  int mask_count = 0;
  for (int i = 0; i < seq.length; ++i) {
    if (seq.ids[std::size_t(i)] == kMaskId) {
      mask_pos = i;
      ++mask_count;
    }
  }
  if (mask_count != 1)
    throw FormatError("fill_mask expects exactly one [MASK], found " +
                      std::to_string(mask_count));

  Mat<S> logits = forward_logits(params, seq.ids, seq.attention_mask);
  const int V = params.config.vocab_size;
  Vec<double> probs = Vec<double>::Zero(V);
  double mx = -std::numeric_limits<double>::infinity();
  for (int t = kNumSpecials; t < V; ++t)
    mx = std::max(mx, double(logits(mask_pos, t)));
  double denom = 0.0;
  for (int t = kNumSpecials; t < V; ++t) {
    probs(t) = std::exp(double(logits(mask_pos, t)) - mx);
    denom += probs(t);
  }
  for (int t = kNumSpecials; t < V; ++t) probs(t) /= denom;

  std::vector<int> order;
  order.reserve(std::size_t(V - kNumSpecials));
  for (int t = kNumSpecials; t < V; ++t) order.push_back(t);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs(a) != probs(b)) return probs(a) > probs(b);
    return a < b;
  });

  FillMaskResult result;
  result.probabilities = probs;
  const int take = std::min<int>(k, int(order.size()));
  for (int i = 0; i < take; ++i)
    result.top.emplace_back(vocab.token(order[std::size_t(i)]),
                            probs(order[std::size_t(i)]));
  return result;
}

}  // namespace chronolm
