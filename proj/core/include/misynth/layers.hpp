#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "misynth/errors.hpp"
#include "misynth/rng.hpp"
#include "misynth/tensor.hpp"

namespace misynth {

// Stride-1 cross-correlation with explicit per-side padding. The temporal
// layers use TF-style same padding (extra sample on the right for even
// kernels); the spatial layer runs valid so the channel axis collapses.
template <class T>
class Conv2d {
  // Configuration precedes the params so their names can derive from name_.
  std::string name_;
  std::size_t in_maps_, out_maps_, kh_, kw_;
  long pt_, pb_, pl_, pr_;

 public:
  Conv2d(std::string name, std::size_t in_maps, std::size_t out_maps, std::size_t kh,
         std::size_t kw, long pad_top, long pad_bottom, long pad_left, long pad_right)
      : name_(std::move(name)),
        in_maps_(in_maps),
        out_maps_(out_maps),
        kh_(kh),
        kw_(kw),
        pt_(pad_top),
        pb_(pad_bottom),
        pl_(pad_left),
        pr_(pad_right),
        weight(name_ + ".weight", Tensor<T>(out_maps, in_maps, kh, kw)),
        bias(name_ + ".bias", Tensor<T>(1, out_maps, 1, 1)) {}

  static Conv2d same_width(std::string name, std::size_t in_maps, std::size_t out_maps,
                           std::size_t kh, std::size_t kw) {
    const long pl = static_cast<long>((kw - 1) / 2);
    const long pr = static_cast<long>(kw - 1) - pl;
    return Conv2d(std::move(name), in_maps, out_maps, kh, kw, 0, 0, pl, pr);
  }

  void init(Rng& rng) {
    const double fan_in = static_cast<double>(in_maps_ * kh_ * kw_);
    const double fan_out = static_cast<double>(out_maps_ * kh_ * kw_);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : weight.value.flat()) v = static_cast<T>(rng.uniform(-limit, limit));
    bias.value.set_zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    check_input(x);
    x_ = x;
    const auto [N, Ci, H, W] = as_dims(x);
    const std::size_t Ho = out_height(H);
    const std::size_t Wo = out_width(W);
    Tensor<T> y(N, out_maps_, Ho, Wo);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t co = 0; co < out_maps_; ++co) {
        const T b = bias.value.at(0, co, 0, 0);
        for (std::size_t i = 0; i < Ho; ++i) {
          T* yrow = &y.at(n, co, i, 0);
          for (std::size_t j = 0; j < Wo; ++j) yrow[j] = b;
        }
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          for (std::size_t u = 0; u < kh_; ++u) {
            const long xi_off = static_cast<long>(u) - pt_;
            for (std::size_t v = 0; v < kw_; ++v) {
              const T wv = weight.value.at(co, ci, u, v);
              const long xj_off = static_cast<long>(v) - pl_;
              for (std::size_t i = 0; i < Ho; ++i) {
                const long xi = static_cast<long>(i) + xi_off;
                if (xi < 0 || xi >= static_cast<long>(H)) continue;
                const auto [jlo, jhi] = col_range(Wo, W, xj_off);
                const T* xrow = &x.at(n, ci, static_cast<std::size_t>(xi), 0);
                T* yrow = &y.at(n, co, i, 0);
                for (std::size_t j = jlo; j < jhi; ++j) {
                  yrow[j] += wv * xrow[static_cast<std::size_t>(static_cast<long>(j) + xj_off)];
                }
              }
            }
          }
        }
      }
    }
    return y;
  }

  // Accumulates weight/bias gradients, returns the input gradient.
  Tensor<T> backward(const Tensor<T>& gy) {
    const auto [N, Ci, H, W] = as_dims(x_);
    const std::size_t Ho = out_height(H);
    const std::size_t Wo = out_width(W);
    if (gy.batch() != N || gy.maps() != out_maps_ || gy.height() != Ho || gy.width() != Wo) {
      throw InputError(name_ + ": output-gradient shape " + gy.shape_string() + " unexpected");
    }
    Tensor<T> gx = Tensor<T>::zeros_like(x_);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t co = 0; co < out_maps_; ++co) {
        T gb{0};
        for (std::size_t i = 0; i < Ho; ++i) {
          const T* grow = &gy.at(n, co, i, 0);
          for (std::size_t j = 0; j < Wo; ++j) gb += grow[j];
        }
        bias.grad.at(0, co, 0, 0) += gb;
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          for (std::size_t u = 0; u < kh_; ++u) {
            const long xi_off = static_cast<long>(u) - pt_;
            for (std::size_t v = 0; v < kw_; ++v) {
              const T wv = weight.value.at(co, ci, u, v);
              const long xj_off = static_cast<long>(v) - pl_;
              T gw{0};
              for (std::size_t i = 0; i < Ho; ++i) {
                const long xi = static_cast<long>(i) + xi_off;
                if (xi < 0 || xi >= static_cast<long>(H)) continue;
                const auto [jlo, jhi] = col_range(Wo, W, xj_off);
                const T* xrow = &x_.at(n, ci, static_cast<std::size_t>(xi), 0);
                T* gxrow = &gx.at(n, ci, static_cast<std::size_t>(xi), 0);
                const T* grow = &gy.at(n, co, i, 0);
                for (std::size_t j = jlo; j < jhi; ++j) {
                  const auto xj = static_cast<std::size_t>(static_cast<long>(j) + xj_off);
                  gw += grow[j] * xrow[xj];
                  gxrow[xj] += wv * grow[j];
                }
              }
              weight.grad.at(co, ci, u, v) += gw;
            }
          }
        }
      }
    }
    return gx;
  }

  Param<T> weight;
  Param<T> bias;
  const std::string& name() const { return name_; }
  std::size_t in_maps() const { return in_maps_; }
  std::size_t out_maps() const { return out_maps_; }

 private:
  static std::array<std::size_t, 4> as_dims(const Tensor<T>& t) { return t.shape(); }

  void check_input(const Tensor<T>& x) const {
    if (x.maps() != in_maps_) {
      throw InputError(name_ + ": input has " + std::to_string(x.maps()) + " maps, expected " +
                       std::to_string(in_maps_));
    }
    if (static_cast<long>(x.height()) + pt_ + pb_ < static_cast<long>(kh_) ||
        static_cast<long>(x.width()) + pl_ + pr_ < static_cast<long>(kw_)) {
      throw InputError(name_ + ": kernel larger than padded input " + x.shape_string());
    }
  }

  std::size_t out_height(std::size_t h) const {
    return static_cast<std::size_t>(static_cast<long>(h) + pt_ + pb_ - static_cast<long>(kh_) + 1);
  }
  std::size_t out_width(std::size_t w) const {
    return static_cast<std::size_t>(static_cast<long>(w) + pl_ + pr_ - static_cast<long>(kw_) + 1);
  }

  // Output-column interval [jlo, jhi) whose source column j + off stays inside [0, W).
  static std::pair<std::size_t, std::size_t> col_range(std::size_t wo, std::size_t w, long off) {
    const long lo = std::max<long>(0, -off);
    const long hi = std::min<long>(static_cast<long>(wo), static_cast<long>(w) - off);
    if (hi <= lo) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }

  Tensor<T> x_;
};

// Transposed convolution, stride 1. Forward is the exact adjoint of the
// matching Conv2d's forward (weights stored as (in_maps, out_maps, kh, kw)
// so a conv and a deconv built from the same array satisfy
// <conv(x), y> = <x, deconv(y)>).
template <class T>
class ConvTranspose2d {
  std::string name_;
  std::size_t in_maps_, out_maps_, kh_, kw_;
  long pt_, pb_, pl_, pr_;

 public:
  ConvTranspose2d(std::string name, std::size_t in_maps, std::size_t out_maps, std::size_t kh,
                  std::size_t kw, long pad_top, long pad_bottom, long pad_left, long pad_right)
      : name_(std::move(name)),
        in_maps_(in_maps),
        out_maps_(out_maps),
        kh_(kh),
        kw_(kw),
        pt_(pad_top),
        pb_(pad_bottom),
        pl_(pad_left),
        pr_(pad_right),
        weight(name_ + ".weight", Tensor<T>(in_maps, out_maps, kh, kw)),
        bias(name_ + ".bias", Tensor<T>(1, out_maps, 1, 1)) {}

  static ConvTranspose2d same_width(std::string name, std::size_t in_maps, std::size_t out_maps,
                                    std::size_t kh, std::size_t kw) {
    const long pl = static_cast<long>((kw - 1) / 2);
    const long pr = static_cast<long>(kw - 1) - pl;
    return ConvTranspose2d(std::move(name), in_maps, out_maps, kh, kw, 0, 0, pl, pr);
  }

  void init(Rng& rng) {
    const double fan_in = static_cast<double>(in_maps_ * kh_ * kw_);
    const double fan_out = static_cast<double>(out_maps_ * kh_ * kw_);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : weight.value.flat()) v = static_cast<T>(rng.uniform(-limit, limit));
    bias.value.set_zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.maps() != in_maps_) {
      throw InputError(name_ + ": input has " + std::to_string(x.maps()) + " maps, expected " +
                       std::to_string(in_maps_));
    }
    x_ = x;
    const std::size_t N = x.batch(), H = x.height(), W = x.width();
    const long ho = static_cast<long>(H + kh_ - 1) - pt_ - pb_;
    const long wo = static_cast<long>(W + kw_ - 1) - pl_ - pr_;
    if (ho <= 0 || wo <= 0) {
      throw InputError(name_ + ": padding swallows the whole output for input " + x.shape_string());
    }
    const auto Ho = static_cast<std::size_t>(ho);
    const auto Wo = static_cast<std::size_t>(wo);
    Tensor<T> y(N, out_maps_, Ho, Wo);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t mo = 0; mo < out_maps_; ++mo) {
        const T b = bias.value.at(0, mo, 0, 0);
        for (std::size_t i = 0; i < Ho; ++i) {
          T* yrow = &y.at(n, mo, i, 0);
          for (std::size_t j = 0; j < Wo; ++j) yrow[j] = b;
        }
      }
      for (std::size_t mi = 0; mi < in_maps_; ++mi) {
        for (std::size_t mo = 0; mo < out_maps_; ++mo) {
          for (std::size_t u = 0; u < kh_; ++u) {
            for (std::size_t v = 0; v < kw_; ++v) {
              const T wv = weight.value.at(mi, mo, u, v);
              // output row i = p + u - pt for input row p; columns likewise
              for (std::size_t p = 0; p < H; ++p) {
                const long i = static_cast<long>(p + u) - pt_;
                if (i < 0 || i >= static_cast<long>(Ho)) continue;
                const auto [qlo, qhi] = src_range(W, Wo, static_cast<long>(v) - pl_);
                const T* xrow = &x.at(n, mi, p, 0);
                T* yrow = &y.at(n, mo, static_cast<std::size_t>(i), 0);
                for (std::size_t q = qlo; q < qhi; ++q) {
                  yrow[static_cast<std::size_t>(static_cast<long>(q + v) - pl_)] += wv * xrow[q];
                }
              }
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t N = x_.batch(), H = x_.height(), W = x_.width();
    Tensor<T> gx = Tensor<T>::zeros_like(x_);
    const std::size_t Ho = gy.height(), Wo = gy.width();
    if (gy.batch() != N || gy.maps() != out_maps_) {
      throw InputError(name_ + ": output-gradient shape " + gy.shape_string() + " unexpected");
    }
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t mo = 0; mo < out_maps_; ++mo) {
        T gb{0};
        for (std::size_t i = 0; i < Ho; ++i) {
          const T* grow = &gy.at(n, mo, i, 0);
          for (std::size_t j = 0; j < Wo; ++j) gb += grow[j];
        }
        bias.grad.at(0, mo, 0, 0) += gb;
      }
      for (std::size_t mi = 0; mi < in_maps_; ++mi) {
        for (std::size_t mo = 0; mo < out_maps_; ++mo) {
          for (std::size_t u = 0; u < kh_; ++u) {
            for (std::size_t v = 0; v < kw_; ++v) {
              const T wv = weight.value.at(mi, mo, u, v);
              T gw{0};
              for (std::size_t p = 0; p < H; ++p) {
                const long i = static_cast<long>(p + u) - pt_;
                if (i < 0 || i >= static_cast<long>(Ho)) continue;
                const auto [qlo, qhi] = src_range(W, Wo, static_cast<long>(v) - pl_);
                const T* xrow = &x_.at(n, mi, p, 0);
                T* gxrow = &gx.at(n, mi, p, 0);
                const T* grow = &gy.at(n, mo, static_cast<std::size_t>(i), 0);
                for (std::size_t q = qlo; q < qhi; ++q) {
                  const auto j = static_cast<std::size_t>(static_cast<long>(q + v) - pl_);
                  gw += xrow[q] * grow[j];
                  gxrow[q] += wv * grow[j];
                }
              }
              weight.grad.at(mi, mo, u, v) += gw;
            }
          }
        }
      }
    }
    return gx;
  }

  Param<T> weight;
  Param<T> bias;
  const std::string& name() const { return name_; }

 private:
  // Input-column interval [qlo, qhi) whose destination q + off stays in [0, Wo).
  static std::pair<std::size_t, std::size_t> src_range(std::size_t w, std::size_t wo, long off) {
    const long lo = std::max<long>(0, -off);
    const long hi = std::min<long>(static_cast<long>(w), static_cast<long>(wo) - off);
    if (hi <= lo) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }

  Tensor<T> x_;
};

// Per-map batch normalization over (batch, height, width). Training mode
// uses biased batch statistics and updates the running estimates with
// momentum; inference applies the stored affine map.
template <class T>
class BatchNorm {
  std::string name_;
  std::size_t maps_;
  T eps_, momentum_;

 public:
  BatchNorm(std::string name, std::size_t maps, T eps = static_cast<T>(1e-3),
            T momentum = static_cast<T>(0.99))
      : name_(std::move(name)),
        maps_(maps),
        eps_(eps),
        momentum_(momentum),
        gamma(name_ + ".gamma", Tensor<T>(1, maps, 1, 1)),
        beta(name_ + ".beta", Tensor<T>(1, maps, 1, 1)),
        running_mean(1, maps, 1, 1),
        running_var(1, maps, 1, 1) {
    gamma.value.fill(T{1});
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) {
    if (x.maps() != maps_) {
      throw InputError(name_ + ": input has " + std::to_string(x.maps()) + " maps, expected " +
                       std::to_string(maps_));
    }
    training_ = training;
    x_ = x;
    const std::size_t N = x.batch(), H = x.height(), W = x.width();
    const std::size_t m = N * H * W;
    Tensor<T> y = Tensor<T>::zeros_like(x);
    if (training) {
      if (N < 2) throw InputError(name_ + ": training mode needs batch size >= 2");
      mean_.assign(maps_, T{0});
      inv_std_.assign(maps_, T{0});
      x_hat_ = Tensor<T>::zeros_like(x);
      for (std::size_t c = 0; c < maps_; ++c) {
        T mu{0};
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) mu += x.at(n, c, h, w);
        mu /= static_cast<T>(m);
        T var{0};
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const T d = x.at(n, c, h, w) - mu;
              var += d * d;
            }
        var /= static_cast<T>(m);
        const T inv = T{1} / std::sqrt(var + eps_);
        mean_[c] = mu;
        inv_std_[c] = inv;
        const T g = gamma.value.at(0, c, 0, 0);
        const T b = beta.value.at(0, c, 0, 0);
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const T xh = (x.at(n, c, h, w) - mu) * inv;
              x_hat_.at(n, c, h, w) = xh;
              y.at(n, c, h, w) = g * xh + b;
            }
        if (ema_started_) {
          running_mean.at(0, c, 0, 0) = momentum_ * running_mean.at(0, c, 0, 0) +
                                        (T{1} - momentum_) * mu;
          running_var.at(0, c, 0, 0) = momentum_ * running_var.at(0, c, 0, 0) +
                                       (T{1} - momentum_) * var;
        } else {
          // Warm start: the first batch seeds the estimates directly instead
          // of averaging against the arbitrary initial values.
          running_mean.at(0, c, 0, 0) = mu;
          running_var.at(0, c, 0, 0) = var;
        }
      }
      ema_started_ = true;
      stats_initialized_ = true;
    } else {
      if (!stats_initialized_) {
        throw InputError(name_ + ": inference before any training update or explicit init");
      }
      for (std::size_t c = 0; c < maps_; ++c) {
        const T inv = T{1} / std::sqrt(running_var.at(0, c, 0, 0) + eps_);
        const T mu = running_mean.at(0, c, 0, 0);
        const T g = gamma.value.at(0, c, 0, 0);
        const T b = beta.value.at(0, c, 0, 0);
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              y.at(n, c, h, w) = g * (x.at(n, c, h, w) - mu) * inv + b;
            }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t N = x_.batch(), H = x_.height(), W = x_.width();
    const T m = static_cast<T>(N * H * W);
    Tensor<T> gx = Tensor<T>::zeros_like(x_);
    for (std::size_t c = 0; c < maps_; ++c) {
      const T g = gamma.value.at(0, c, 0, 0);
      if (training_) {
        T sum_gy{0}, sum_gy_xhat{0};
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const T gv = gy.at(n, c, h, w);
              sum_gy += gv;
              sum_gy_xhat += gv * x_hat_.at(n, c, h, w);
            }
        gamma.grad.at(0, c, 0, 0) += sum_gy_xhat;
        beta.grad.at(0, c, 0, 0) += sum_gy;
        const T scale = g * inv_std_[c] / m;
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              gx.at(n, c, h, w) = scale * (m * gy.at(n, c, h, w) - sum_gy -
                                           x_hat_.at(n, c, h, w) * sum_gy_xhat);
            }
      } else {
        const T inv = T{1} / std::sqrt(running_var.at(0, c, 0, 0) + eps_);
        const T mu = running_mean.at(0, c, 0, 0);
        T sum_gy{0}, sum_gy_xhat{0};
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const T gv = gy.at(n, c, h, w);
              sum_gy += gv;
              sum_gy_xhat += gv * (x_.at(n, c, h, w) - mu) * inv;
              gx.at(n, c, h, w) = gv * g * inv;
            }
        gamma.grad.at(0, c, 0, 0) += sum_gy_xhat;
        beta.grad.at(0, c, 0, 0) += sum_gy;
      }
    }
    return gx;
  }

  // Explicit initialization (identity normalization) so inference can run
  // before any training batch, e.g. for an untrained baseline evaluation.
  void init_running_stats(T mean, T var) {
    running_mean.fill(mean);
    running_var.fill(var);
    stats_initialized_ = true;
  }
  void mark_stats_initialized() { stats_initialized_ = true; }
  bool stats_initialized() const { return stats_initialized_; }
  std::size_t maps() const { return maps_; }
  T eps() const { return eps_; }
  T momentum() const { return momentum_; }
  const std::string& name() const { return name_; }

  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;  // non-trainable
  Tensor<T> running_var;   // non-trainable

 private:
  bool stats_initialized_ = false;
  bool ema_started_ = false;
  bool training_ = true;
  Tensor<T> x_, x_hat_;
  std::vector<T> mean_, inv_std_;
};

// alpha = 1 exponential linear unit.
template <class T>
class Elu {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = Tensor<T>::zeros_like(x);
    const auto xin = x.flat();
    auto out = y_.flat();
    for (std::size_t i = 0; i < xin.size(); ++i) {
      out[i] = xin[i] > T{0} ? xin[i] : static_cast<T>(std::expm1(static_cast<double>(xin[i])));
    }
    return y_;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx = Tensor<T>::zeros_like(gy);
    const auto ys = y_.flat();
    const auto gys = gy.flat();
    auto gxs = gx.flat();
    for (std::size_t i = 0; i < ys.size(); ++i) {
      // For x <= 0 the derivative e^x equals y+1; at x = 0 both branches give 1.
      gxs[i] = gys[i] * (ys[i] > T{0} ? T{1} : ys[i] + T{1});
    }
    return gx;
  }

 private:
  Tensor<T> y_;
};

// (1,2) mean pooling along width.
template <class T>
class MeanPool {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    if (x.width() % 2 != 0) {
      throw InputError("mean_pool: width " + std::to_string(x.width()) + " not divisible by 2");
    }
    in_shape_ = x.shape();
    Tensor<T> y(x.batch(), x.maps(), x.height(), x.width() / 2);
    for (std::size_t n = 0; n < x.batch(); ++n)
      for (std::size_t c = 0; c < x.maps(); ++c)
        for (std::size_t h = 0; h < x.height(); ++h)
          for (std::size_t j = 0; j < y.width(); ++j) {
            y.at(n, c, h, j) = (x.at(n, c, h, 2 * j) + x.at(n, c, h, 2 * j + 1)) / T{2};
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (std::size_t n = 0; n < gy.batch(); ++n)
      for (std::size_t c = 0; c < gy.maps(); ++c)
        for (std::size_t h = 0; h < gy.height(); ++h)
          for (std::size_t j = 0; j < gy.width(); ++j) {
            const T half = gy.at(n, c, h, j) / T{2};
            gx.at(n, c, h, 2 * j) = half;
            gx.at(n, c, h, 2 * j + 1) = half;
          }
    return gx;
  }

 private:
  std::array<std::size_t, 4> in_shape_{};
};

// (1,2) nearest-neighbour upsampling along width.
template <class T>
class Upsample {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.batch(), x.maps(), x.height(), x.width() * 2);
    for (std::size_t n = 0; n < x.batch(); ++n)
      for (std::size_t c = 0; c < x.maps(); ++c)
        for (std::size_t h = 0; h < x.height(); ++h)
          for (std::size_t j = 0; j < x.width(); ++j) {
            const T v = x.at(n, c, h, j);
            y.at(n, c, h, 2 * j) = v;
            y.at(n, c, h, 2 * j + 1) = v;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.batch(), gy.maps(), gy.height(), gy.width() / 2);
    for (std::size_t n = 0; n < gy.batch(); ++n)
      for (std::size_t c = 0; c < gy.maps(); ++c)
        for (std::size_t h = 0; h < gy.height(); ++h)
          for (std::size_t j = 0; j < gx.width(); ++j) {
            gx.at(n, c, h, j) = gy.at(n, c, h, 2 * j) + gy.at(n, c, h, 2 * j + 1);
          }
    return gx;
  }
};

// Affine map on flattened rows: (N,1,1,in) -> (N,1,1,out).
template <class T>
class Dense {
  std::string name_;
  std::size_t in_, out_;

 public:
  Dense(std::string name, std::size_t in_features, std::size_t out_features)
      : name_(std::move(name)),
        in_(in_features),
        out_(out_features),
        weight(name_ + ".weight", Tensor<T>(1, 1, in_features, out_features)),
        bias(name_ + ".bias", Tensor<T>(1, 1, 1, out_features)) {}

  void init(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
    for (auto& v : weight.value.flat()) v = static_cast<T>(rng.uniform(-limit, limit));
    bias.value.set_zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.maps() != 1 || x.height() != 1 || x.width() != in_) {
      throw InputError(name_ + ": input " + x.shape_string() + " does not match width " +
                       std::to_string(in_));
    }
    x_ = x;
    Tensor<T> y(x.batch(), 1, 1, out_);
    for (std::size_t n = 0; n < x.batch(); ++n) {
      const T* xr = &x.at(n, 0, 0, 0);
      T* yr = &y.at(n, 0, 0, 0);
      for (std::size_t o = 0; o < out_; ++o) yr[o] = bias.value.at(0, 0, 0, o);
      for (std::size_t i = 0; i < in_; ++i) {
        const T xv = xr[i];
        const T* wr = &weight.value.at(0, 0, i, 0);
        for (std::size_t o = 0; o < out_; ++o) yr[o] += xv * wr[o];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx = Tensor<T>::zeros_like(x_);
    for (std::size_t n = 0; n < gy.batch(); ++n) {
      const T* gr = &gy.at(n, 0, 0, 0);
      const T* xr = &x_.at(n, 0, 0, 0);
      T* gxr = &gx.at(n, 0, 0, 0);
      for (std::size_t o = 0; o < out_; ++o) bias.grad.at(0, 0, 0, o) += gr[o];
      for (std::size_t i = 0; i < in_; ++i) {
        const T* wr = &weight.value.at(0, 0, i, 0);
        T* gwr = &weight.grad.at(0, 0, i, 0);
        T acc{0};
        const T xv = xr[i];
        for (std::size_t o = 0; o < out_; ++o) {
          acc += gr[o] * wr[o];
          gwr[o] += xv * gr[o];
        }
        gxr[i] = acc;
      }
    }
    return gx;
  }

  Param<T> weight;
  Param<T> bias;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const std::string& name() const { return name_; }

 private:
  Tensor<T> x_;
};

}  // namespace misynth
