#pragma once

#include <continuum/tensor/tensor.hpp>

#include <cmath>
#include <vector>

namespace continuum::ad {

// Adam over a fixed list of leaf tensors. State is positional, so the
// parameter list must not change between steps.
template <typename S>
class Adam {
 public:
  explicit Adam(std::vector<Tensor<S>> params, S lr, S beta1 = S(0.9), S beta2 = S(0.99),
                S eps = S(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      m_.emplace_back(p.size(), S(0));
      v_.emplace_back(p.size(), S(0));
    }
  }

  void set_lr(S lr) { lr_ = lr; }
  S lr() const { return lr_; }
  const std::vector<Tensor<S>>& params() const { return params_; }

  void step(const std::vector<Tensor<S>>& grads) {
    ++t_;
    S bc1 = S(1) - std::pow(beta1_, S(t_));
    S bc2 = S(1) - std::pow(beta2_, S(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i].data();
      const auto& g = grads[i].data();
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < p.size(); ++j) {
        m[j] = beta1_ * m[j] + (S(1) - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (S(1) - beta2_) * g[j] * g[j];
        p[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

 private:
  std::vector<Tensor<S>> params_;
  std::vector<std::vector<S>> m_, v_;
  S lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace continuum::ad
