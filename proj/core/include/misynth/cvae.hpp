#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "misynth/adam.hpp"
#include "misynth/epoch.hpp"
#include "misynth/layers.hpp"
#include "misynth/rng.hpp"
#include "misynth/tensor.hpp"

namespace misynth {

struct CvaeConfig {
  std::size_t n_channels = 15;
  std::size_t n_samples = 400;
  std::size_t n_classes = kNumClasses;
  std::size_t latent_dim = 10;
  std::size_t kernels_per_layer = 5;
  std::size_t temporal_kernel = 40;
  double bn_eps = 1e-3;
  // Running-statistics momentum; 0.9 keeps the inference estimates within a
  // few epochs of the batch statistics even at small steps-per-epoch.
  double bn_momentum = 0.9;

  std::size_t flat_dim() const { return kernels_per_layer * (n_samples / 2); }
};

struct LossParts {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

struct LayerParamCount {
  std::string layer;
  std::size_t weights = 0;
  std::size_t biases = 0;  // biases, or gamma+beta for batch norm
  std::size_t total() const { return weights + biases; }
};

struct ParameterCount {
  std::vector<LayerParamCount> layers;
  std::size_t trainable = 0;
  std::size_t non_trainable_running_stats = 0;
};

void print_parameter_count(const ParameterCount& count, std::ostream& out);

// The conditional VAE: a condition-blind convolutional encoder producing a
// 10-dimensional Gaussian posterior, and a decoder that reconstructs the
// epoch from the sampled latent concatenated with the one-hot condition.
//
// Encoder: conv (1,kt) same-width -> BN -> ELU -> conv (n_channels,1) valid
//          -> BN -> ELU -> mean-pool (1,2) -> flatten -> two dense heads.
// Decoder: dense -> reshape -> upsample (1,2) -> deconv (n_channels,1)
//          -> BN -> ELU -> deconv (1,kt) same-width -> BN -> ELU.
template <class T>
class CvaeModel {
 public:
  CvaeModel(const CvaeConfig& cfg, std::uint64_t init_seed)
      : cfg_(cfg),
        enc_conv_temporal_(Conv2d<T>::same_width("enc_conv_temporal", 1, cfg.kernels_per_layer, 1,
                                                 cfg.temporal_kernel)),
        enc_bn_temporal_("enc_bn_temporal", cfg.kernels_per_layer, static_cast<T>(cfg.bn_eps),
                         static_cast<T>(cfg.bn_momentum)),
        enc_conv_spatial_("enc_conv_spatial", cfg.kernels_per_layer, cfg.kernels_per_layer,
                          cfg.n_channels, 1, 0, 0, 0, 0),
        enc_bn_spatial_("enc_bn_spatial", cfg.kernels_per_layer, static_cast<T>(cfg.bn_eps),
                        static_cast<T>(cfg.bn_momentum)),
        enc_mu_("enc_mu", cfg.flat_dim(), cfg.latent_dim),
        enc_log_var_("enc_log_var", cfg.flat_dim(), cfg.latent_dim),
        dec_dense_("dec_dense", cfg.latent_dim + cfg.n_classes, cfg.flat_dim()),
        dec_deconv_spatial_("dec_deconv_spatial", cfg.kernels_per_layer, cfg.kernels_per_layer,
                            cfg.n_channels, 1, 0, 0, 0, 0),
        dec_bn_spatial_("dec_bn_spatial", cfg.kernels_per_layer, static_cast<T>(cfg.bn_eps),
                        static_cast<T>(cfg.bn_momentum)),
        dec_deconv_temporal_(ConvTranspose2d<T>::same_width("dec_deconv_temporal",
                                                            cfg.kernels_per_layer, 1, 1,
                                                            cfg.temporal_kernel)),
        dec_bn_temporal_("dec_bn_temporal", 1, static_cast<T>(cfg.bn_eps),
                         static_cast<T>(cfg.bn_momentum)) {
    Rng rng(init_seed);
    enc_conv_temporal_.init(rng);
    enc_conv_spatial_.init(rng);
    enc_mu_.init(rng);
    enc_log_var_.init(rng);
    dec_dense_.init(rng);
    dec_deconv_spatial_.init(rng);
    dec_deconv_temporal_.init(rng);
  }

  const CvaeConfig& config() const { return cfg_; }

  // Posterior parameters for a batch; x must be (N, 1, n_channels, n_samples).
  // The encoder never sees the condition.
  std::pair<Tensor<T>, Tensor<T>> encode(const Tensor<T>& x, bool training) {
    check_epoch_shape(x, "encode");
    Tensor<T> h = enc_conv_temporal_.forward(x);
    h = enc_elu1_.forward(enc_bn_temporal_.forward(h, training));
    h = enc_conv_spatial_.forward(h);
    h = enc_elu2_.forward(enc_bn_spatial_.forward(h, training));
    h = enc_pool_.forward(h);
    h = h.reshaped(h.batch(), 1, 1, cfg_.flat_dim());
    return {enc_mu_.forward(h), enc_log_var_.forward(h)};
  }

  // z = mu + exp(log_var/2) * eps, elementwise.
  static Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& log_var,
                                  const Tensor<T>& eps) {
    if (!mu.same_shape(log_var) || !mu.same_shape(eps)) {
      throw InputError("reparameterize: mu/log_var/eps shapes differ");
    }
    Tensor<T> z = Tensor<T>::zeros_like(mu);
    const auto m = mu.flat();
    const auto lv = log_var.flat();
    const auto e = eps.flat();
    auto out = z.flat();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = m[i] + static_cast<T>(std::exp(0.5 * static_cast<double>(lv[i]))) * e[i];
    }
    return z;
  }

  // z is (N,1,1,latent), c is (N,1,1,n_classes); returns (N,1,n_channels,n_samples).
  Tensor<T> decode(const Tensor<T>& z, const Tensor<T>& c, bool training) {
    if (z.width() != cfg_.latent_dim || z.maps() != 1 || z.height() != 1) {
      throw InputError("decode: z must be (N,1,1," + std::to_string(cfg_.latent_dim) + ")");
    }
    if (c.width() != cfg_.n_classes || c.batch() != z.batch()) {
      throw InputError("decode: condition must be (N,1,1," + std::to_string(cfg_.n_classes) + ")");
    }
    Tensor<T> zc = concat_width(z, c);
    Tensor<T> h = dec_dense_.forward(zc);
    h = h.reshaped(h.batch(), cfg_.kernels_per_layer, 1, cfg_.n_samples / 2);
    h = dec_upsample_.forward(h);
    h = dec_deconv_spatial_.forward(h);
    h = dec_elu1_.forward(dec_bn_spatial_.forward(h, training));
    h = dec_deconv_temporal_.forward(h);
    h = dec_elu2_.forward(dec_bn_temporal_.forward(h, training));
    return h;
  }

  // Closed-form KL(q || N(0,I)) summed over latent dims, averaged over batch.
  static double kl_term(const Tensor<T>& mu, const Tensor<T>& log_var) {
    if (!mu.same_shape(log_var)) throw InputError("kl_term: shape mismatch");
    const auto m = mu.flat();
    const auto lv = log_var.flat();
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double mu_i = static_cast<double>(m[i]);
      const double lv_i = static_cast<double>(lv[i]);
      sum += mu_i * mu_i + std::exp(lv_i) - lv_i - 1.0;
    }
    return 0.5 * sum / static_cast<double>(mu.batch());
  }

  // Squared error summed over the elements of each trial, averaged over batch.
  static double recon_term(const Tensor<T>& x, const Tensor<T>& x_hat) {
    if (!x.same_shape(x_hat)) throw InputError("recon_term: shape mismatch");
    const auto a = x.flat();
    const auto b = x_hat.flat();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
    return sum / static_cast<double>(x.batch());
  }

  // Full negated-ELBO forward pass with a caller-supplied noise draw
  // (eps shaped like mu). total == recon + kl by construction.
  LossParts loss(const Tensor<T>& x, const Tensor<T>& c, const Tensor<T>& eps, bool training) {
    auto [mu, log_var] = encode(x, training);
    const Tensor<T> z = reparameterize(mu, log_var, eps);
    const Tensor<T> x_hat = decode(z, c, training);
    LossParts parts;
    parts.recon = recon_term(x, x_hat);
    parts.kl = kl_term(mu, log_var);
    parts.total = parts.recon + parts.kl;
    return parts;
  }

  // Forward plus reverse pass; accumulates into every parameter's .grad and
  // returns the loss. Gradients flow through the reparameterized sample.
  // When input_grad is given it receives dL/dx, including the direct
  // reconstruction term.
  LossParts loss_backward(const Tensor<T>& x, const Tensor<T>& c, const Tensor<T>& eps,
                          bool training, Tensor<T>* input_grad = nullptr) {
    auto [mu, log_var] = encode(x, training);
    const Tensor<T> z = reparameterize(mu, log_var, eps);
    const Tensor<T> x_hat = decode(z, c, training);

    LossParts parts;
    parts.recon = recon_term(x, x_hat);
    parts.kl = kl_term(mu, log_var);
    parts.total = parts.recon + parts.kl;

    const T inv_batch = T{1} / static_cast<T>(x.batch());

    // d recon / d x_hat = 2 (x_hat - x) / N
    Tensor<T> g_xhat = Tensor<T>::zeros_like(x_hat);
    {
      const auto a = x.flat();
      const auto b = x_hat.flat();
      auto g = g_xhat.flat();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = T{2} * (b[i] - a[i]) * inv_batch;
      }
    }

    Tensor<T> g_zc = decode_backward(g_xhat);

    // Split the concatenation gradient; the condition is an input, not learned.
    Tensor<T> g_z(g_zc.batch(), 1, 1, cfg_.latent_dim);
    for (std::size_t n = 0; n < g_zc.batch(); ++n) {
      for (std::size_t j = 0; j < cfg_.latent_dim; ++j) {
        g_z.at(n, 0, 0, j) = g_zc.at(n, 0, 0, j);
      }
    }

    // Through z = mu + exp(lv/2) eps, plus the closed-form KL gradients.
    Tensor<T> g_mu = Tensor<T>::zeros_like(g_z);
    Tensor<T> g_lv = Tensor<T>::zeros_like(g_z);
    {
      const auto gz = g_z.flat();
      const auto m = mu.flat();
      const auto lv = log_var.flat();
      const auto e = eps.flat();
      auto gm = g_mu.flat();
      auto gl = g_lv.flat();
      for (std::size_t i = 0; i < gz.size(); ++i) {
        const T sigma = static_cast<T>(std::exp(0.5 * static_cast<double>(lv[i])));
        gm[i] = gz[i] + m[i] * inv_batch;
        gl[i] = gz[i] * e[i] * sigma * T{0.5} +
                T{0.5} * (static_cast<T>(std::exp(static_cast<double>(lv[i]))) - T{1}) * inv_batch;
      }
    }

    Tensor<T> gx = encode_backward(g_mu, g_lv);
    if (input_grad != nullptr) {
      // The reconstruction error also depends on x directly: d/dx = -g_xhat.
      auto out = gx.flat();
      const auto gh = g_xhat.flat();
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= gh[i];
      *input_grad = std::move(gx);
    }
    return parts;
  }

  // Declared parameter order; also the checkpoint block order.
  std::vector<Param<T>*> parameters() {
    return {
        &enc_conv_temporal_.weight, &enc_conv_temporal_.bias,
        &enc_bn_temporal_.gamma,    &enc_bn_temporal_.beta,
        &enc_conv_spatial_.weight,  &enc_conv_spatial_.bias,
        &enc_bn_spatial_.gamma,     &enc_bn_spatial_.beta,
        &enc_mu_.weight,            &enc_mu_.bias,
        &enc_log_var_.weight,       &enc_log_var_.bias,
        &dec_dense_.weight,         &dec_dense_.bias,
        &dec_deconv_spatial_.weight, &dec_deconv_spatial_.bias,
        &dec_bn_spatial_.gamma,     &dec_bn_spatial_.beta,
        &dec_deconv_temporal_.weight, &dec_deconv_temporal_.bias,
        &dec_bn_temporal_.gamma,    &dec_bn_temporal_.beta,
    };
  }

  std::vector<BatchNorm<T>*> batch_norms() {
    return {&enc_bn_temporal_, &enc_bn_spatial_, &dec_bn_spatial_, &dec_bn_temporal_};
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  bool bn_ready() const {
    return enc_bn_temporal_.stats_initialized() && enc_bn_spatial_.stats_initialized() &&
           dec_bn_spatial_.stats_initialized() && dec_bn_temporal_.stats_initialized();
  }

  void init_running_stats() {
    for (auto* bn : batch_norms()) bn->init_running_stats(T{0}, T{1});
  }

  ParameterCount count_parameters() const;

  template <class U>
  CvaeModel<U> cast() const {
    CvaeModel<U> out(cfg_, 0);
    auto* self = const_cast<CvaeModel<T>*>(this);
    auto src = self->parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i]->value = src[i]->value.template cast<U>();
      dst[i]->grad = Tensor<U>::zeros_like(dst[i]->value);
    }
    auto src_bn = self->batch_norms();
    auto dst_bn = out.batch_norms();
    for (std::size_t i = 0; i < src_bn.size(); ++i) {
      dst_bn[i]->running_mean = src_bn[i]->running_mean.template cast<U>();
      dst_bn[i]->running_var = src_bn[i]->running_var.template cast<U>();
      if (src_bn[i]->stats_initialized()) dst_bn[i]->mark_stats_initialized();
    }
    return out;
  }

 private:
  void check_epoch_shape(const Tensor<T>& x, const char* where) const {
    if (x.maps() != 1 || x.height() != cfg_.n_channels || x.width() != cfg_.n_samples) {
      throw InputError(std::string(where) + ": input " + x.shape_string() + " must be (N,1," +
                       std::to_string(cfg_.n_channels) + "," + std::to_string(cfg_.n_samples) + ")");
    }
  }

  static Tensor<T> concat_width(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> out(a.batch(), 1, 1, a.width() + b.width());
    for (std::size_t n = 0; n < a.batch(); ++n) {
      for (std::size_t j = 0; j < a.width(); ++j) out.at(n, 0, 0, j) = a.at(n, 0, 0, j);
      for (std::size_t j = 0; j < b.width(); ++j) out.at(n, 0, 0, a.width() + j) = b.at(n, 0, 0, j);
    }
    return out;
  }

  // Reverse of decode(); returns the gradient w.r.t. the concatenated (z,c).
  Tensor<T> decode_backward(const Tensor<T>& g_xhat) {
    Tensor<T> g = dec_bn_temporal_.backward(dec_elu2_.backward(g_xhat));
    g = dec_deconv_temporal_.backward(g);
    g = dec_bn_spatial_.backward(dec_elu1_.backward(g));
    g = dec_deconv_spatial_.backward(g);
    g = dec_upsample_.backward(g);
    g = g.reshaped(g.batch(), 1, 1, cfg_.flat_dim());
    return dec_dense_.backward(g);
  }

  // Reverse of encode(); returns the gradient w.r.t. the input epoch batch.
  Tensor<T> encode_backward(const Tensor<T>& g_mu, const Tensor<T>& g_log_var) {
    Tensor<T> g_flat = enc_mu_.backward(g_mu);
    const Tensor<T> g_flat2 = enc_log_var_.backward(g_log_var);
    {
      auto a = g_flat.flat();
      const auto b = g_flat2.flat();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
    Tensor<T> g = g_flat.reshaped(g_flat.batch(), cfg_.kernels_per_layer, 1, cfg_.n_samples / 2);
    g = enc_pool_.backward(g);
    g = enc_bn_spatial_.backward(enc_elu2_.backward(g));
    g = enc_conv_spatial_.backward(g);
    g = enc_bn_temporal_.backward(enc_elu1_.backward(g));
    return enc_conv_temporal_.backward(g);
  }

  template <class U>
  friend class CvaeModel;
  friend class CvaeGradientProbe;

  CvaeConfig cfg_;

  Conv2d<T> enc_conv_temporal_;
  BatchNorm<T> enc_bn_temporal_;
  Elu<T> enc_elu1_;
  Conv2d<T> enc_conv_spatial_;
  BatchNorm<T> enc_bn_spatial_;
  Elu<T> enc_elu2_;
  MeanPool<T> enc_pool_;
  Dense<T> enc_mu_;
  Dense<T> enc_log_var_;

  Dense<T> dec_dense_;
  Upsample<T> dec_upsample_;
  ConvTranspose2d<T> dec_deconv_spatial_;
  BatchNorm<T> dec_bn_spatial_;
  Elu<T> dec_elu1_;
  ConvTranspose2d<T> dec_deconv_temporal_;
  BatchNorm<T> dec_bn_temporal_;
  Elu<T> dec_elu2_;
};

template <class T>
ParameterCount CvaeModel<T>::count_parameters() const {
  ParameterCount count;
  auto add = [&](const std::string& layer, std::size_t weights, std::size_t biases) {
    count.layers.push_back({layer, weights, biases});
    count.trainable += weights + biases;
  };
  const std::size_t k = cfg_.kernels_per_layer;
  add("enc_conv_temporal", k * 1 * 1 * cfg_.temporal_kernel, k);
  add("enc_bn_temporal", k, k);
  add("enc_conv_spatial", k * k * cfg_.n_channels * 1, k);
  add("enc_bn_spatial", k, k);
  add("enc_mu", cfg_.flat_dim() * cfg_.latent_dim, cfg_.latent_dim);
  add("enc_log_var", cfg_.flat_dim() * cfg_.latent_dim, cfg_.latent_dim);
  add("dec_dense", (cfg_.latent_dim + cfg_.n_classes) * cfg_.flat_dim(), cfg_.flat_dim());
  add("dec_deconv_spatial", k * k * cfg_.n_channels * 1, k);
  add("dec_bn_spatial", k, k);
  add("dec_deconv_temporal", k * 1 * 1 * cfg_.temporal_kernel, 1);
  add("dec_bn_temporal", 1, 1);
  count.non_trainable_running_stats = 2 * (k + k + k + 1);
  return count;
}

// Per-trial condition tensor from labels.
Tensor<float> condition_tensor(const std::vector<Label>& labels);

// Fresh standard-normal draw of the given shape.
template <class T>
Tensor<T> normal_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  Tensor<T> t(n, c, h, w);
  for (auto& v : t.flat()) v = static_cast<T>(rng.normal());
  return t;
}

}  // namespace misynth
