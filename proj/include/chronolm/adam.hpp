#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "chronolm/common.hpp"
#include "chronolm/model.hpp"

namespace chronolm {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled; never applied to embedding tensors
};

// Adam with decoupled weight decay over a fixed tensor directory. Tensors
// whose name starts with "embedding." get no decay, so rows with an all-zero
// gradient history stay bit-identical.
template <class S>
class Adam {
 public:
  Adam(const std::vector<TensorRef<S>>& refs, const AdamConfig& cfg)
      : cfg_(cfg) {
    m_.reserve(refs.size());
    v_.reserve(refs.size());
    decay_.reserve(refs.size());
    for (const auto& r : refs) {
      m_.emplace_back(Vec<S>::Zero(r.size()));
      v_.emplace_back(Vec<S>::Zero(r.size()));
      decay_.push_back(r.name.rfind("embedding.", 0) == 0 ? S(0)
                                                          : S(cfg.weight_decay));
    }
  }

  void step(std::vector<TensorRef<S>> params,
            const std::vector<TensorRef<S>>& grads) {
    ++t_;
    const S bc1 = S(1) - S(std::pow(cfg_.beta1, double(t_)));
    const S bc2 = S(1) - S(std::pow(cfg_.beta2, double(t_)));
    const S b1 = S(cfg_.beta1), b2 = S(cfg_.beta2);
    const S lr = S(cfg_.lr), eps = S(cfg_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      S* p = params[i].data;
      const S* g = grads[i].data;
      S* m = m_[i].data();
      S* v = v_[i].data();
      const S wd = decay_[i];
      const Index n = params[i].size();
      for (Index k = 0; k < n; ++k) {
        m[k] = b1 * m[k] + (S(1) - b1) * g[k];
        v[k] = b2 * v[k] + (S(1) - b2) * g[k] * g[k];
        const S mhat = m[k] / bc1;
        const S vhat = v[k] / bc2;
        p[k] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[k]);
      }
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Vec<S>> m_, v_;
  std::vector<S> decay_;
};

}  // namespace chronolm
