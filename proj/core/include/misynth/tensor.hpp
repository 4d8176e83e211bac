#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "misynth/errors.hpp"

namespace misynth {

// Dense 4-axis array (batch, maps, height, width). float for training,
// double for gradient checking.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
      : shape_{n, c, h, w}, data_(n * c * h * w, T{0}) {}

  static Tensor zeros_like(const Tensor& other) {
    return Tensor(other.shape_[0], other.shape_[1], other.shape_[2], other.shape_[3]);
  }

  const std::array<std::size_t, 4>& shape() const { return shape_; }
  std::size_t batch() const { return shape_[0]; }
  std::size_t maps() const { return shape_[1]; }
  std::size_t height() const { return shape_[2]; }
  std::size_t width() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T{0}); }

  bool has_nonfinite() const {
    for (const T v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return true;
    }
    return false;
  }

  // View with a different shape but identical element count and order.
  Tensor reshaped(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    if (n * c * h * w != size()) {
      throw InputError("tensor reshape: element count mismatch");
    }
    Tensor out;
    out.shape_ = {n, c, h, w};
    out.data_ = data_;
    return out;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.flat()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

  std::string shape_string() const {
    return "(" + std::to_string(shape_[0]) + "," + std::to_string(shape_[1]) + "," +
           std::to_string(shape_[2]) + "," + std::to_string(shape_[3]) + ")";
  }

 private:
  template <class U>
  friend class Tensor;

  std::array<std::size_t, 4> shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

// A learnable tensor paired with its gradient accumulator.
template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  explicit Param(std::string param_name = {}) : name(std::move(param_name)) {}
  Param(std::string param_name, Tensor<T> v)
      : name(std::move(param_name)), value(std::move(v)), grad(Tensor<T>::zeros_like(value)) {}

  void zero_grad() { grad.set_zero(); }
};

template <class T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0.0;
  const auto fa = a.flat();
  const auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    s += static_cast<double>(fa[i]) * static_cast<double>(fb[i]);
  }
  return s;
}

}  // namespace misynth
