#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "misynth/errors.hpp"
#include "misynth/tensor.hpp"

namespace misynth {

// Adam with bias correction. The step counter advances before correction, so
// the first step uses 1 - beta^1. A step with any non-finite gradient aborts
// before touching parameters or moments.
template <class T>
class Adam {
 public:
  struct Hyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Hyper hyper) : hyper_(hyper) {}

  void attach(std::vector<Param<T>*> params) {
    params_ = std::move(params);
    m_.clear();
    v_.clear();
    for (const auto* p : params_) {
      m_.push_back(Tensor<T>::zeros_like(p->value));
      v_.push_back(Tensor<T>::zeros_like(p->value));
    }
    t_ = 0;
  }

  void step() {
    for (const auto* p : params_) {
      if (p->grad.has_nonfinite()) {
        throw NumericError("adam: non-finite gradient in '" + p->name + "', step aborted");
      }
    }
    ++t_;
    const T b1 = static_cast<T>(hyper_.beta1);
    const T b2 = static_cast<T>(hyper_.beta2);
    const T bc1 = T{1} - static_cast<T>(std::pow(hyper_.beta1, static_cast<double>(t_)));
    const T bc2 = T{1} - static_cast<T>(std::pow(hyper_.beta2, static_cast<double>(t_)));
    const T lr = static_cast<T>(hyper_.lr);
    const T eps = static_cast<T>(hyper_.eps);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto theta = params_[k]->value.flat();
      const auto grad = params_[k]->grad.flat();
      auto m = m_[k].flat();
      auto v = v_[k].flat();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T{1} - b1) * g;
        v[i] = b2 * v[i] + (T{1} - b2) * g * g;
        const T m_hat = m[i] / bc1;
        const T v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

  long long step_count() const { return t_; }
  const Hyper& hyper() const { return hyper_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

  // Checkpoint restore; sizes must mirror the attached parameters.
  void restore(long long t, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
    if (m.size() != params_.size() || v.size() != params_.size()) {
      throw IntegrityError("adam: restored moment count does not match parameters");
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
      if (!m[k].same_shape(params_[k]->value) || !v[k].same_shape(params_[k]->value)) {
        throw IntegrityError("adam: restored moment shape mismatch at '" + params_[k]->name + "'");
      }
    }
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  Hyper hyper_;
  long long t_ = 0;
  std::vector<Param<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace misynth
