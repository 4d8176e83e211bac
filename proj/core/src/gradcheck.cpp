#include "misynth/gradcheck.hpp"

#include <algorithm>
#include <functional>

#include "misynth/cvae.hpp"
#include "misynth/layers.hpp"

namespace misynth {

// Test-only access to the encoder/decoder reverse passes.
class CvaeGradientProbe {
 public:
  static Tensor<double> encode_backward(CvaeModel<double>& model, const Tensor<double>& g_mu,
                                        const Tensor<double>& g_lv) {
    return model.encode_backward(g_mu, g_lv);
  }
  static Tensor<double> decode_backward(CvaeModel<double>& model, const Tensor<double>& g_xhat) {
    return model.decode_backward(g_xhat);
  }
};

namespace {

using D = double;

Tensor<D> random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng,
                        double scale = 1.0) {
  Tensor<D> t(n, c, h, w);
  for (auto& v : t.flat()) v = rng.normal(0.0, scale);
  return t;
}

// Random +/-1 probe keeps every output coordinate contributing to the loss.
Tensor<D> probe_like(const Tensor<D>& y, Rng& rng) {
  Tensor<D> p = Tensor<D>::zeros_like(y);
  for (auto& v : p.flat()) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return p;
}

// One coordinate block (a parameter tensor or an input) with its analytic
// gradient snapshotted before the finite-difference sweep.
struct CheckBlock {
  std::string name;
  std::span<double> theta;
  std::vector<double> analytic;
  std::size_t max_coords;
};

CheckBlock block(std::string name, Tensor<D>& theta, const Tensor<D>& analytic,
                 std::size_t max_coords) {
  return {std::move(name), theta.flat(),
          std::vector<double>(analytic.flat().begin(), analytic.flat().end()), max_coords};
}

// Runs every block against the shared loss with a common gradient-scale
// floor, merging results into one per-group report.
GradCheckReport run_blocks(std::string group, std::vector<CheckBlock> blocks,
                           const std::function<double()>& loss, const GradCheckOptions& opt,
                           Rng& rng) {
  if (opt.inject_sign_flip && !blocks.empty()) {
    for (auto& a : blocks.front().analytic) a = a == 0.0 ? 1.0 : -a;
  }
  double g_max = 0.0;
  for (const auto& b : blocks) {
    for (const double a : b.analytic) g_max = std::max(g_max, std::abs(a));
  }
  GradCheckReport merged{std::move(group), 0.0, 0};
  for (auto& b : blocks) {
    const GradCheckReport r = check_gradient(b.name, b.theta, b.analytic, loss, opt.h,
                                             b.max_coords, rng, 1e-3 * g_max);
    merged.max_rel_err = std::max(merged.max_rel_err, r.max_rel_err);
    merged.coords_checked += r.coords_checked;
  }
  return merged;
}

GradCheckReport check_conv2d(const GradCheckOptions& opt, Rng& rng) {
  Conv2d<D> layer = Conv2d<D>::same_width("conv2d", 3, 4, 3, 5);
  layer.init(rng);
  Tensor<D> x = random_tensor(2, 3, 8, 10, rng);
  const Tensor<D> probe = probe_like(layer.forward(x), rng);
  const Tensor<D> gx = layer.backward(probe);
  auto loss = [&] { return dot(layer.forward(x), probe); };
  return run_blocks("conv2d",
                    {block("conv2d.weight", layer.weight.value, layer.weight.grad, 120),
                     block("conv2d.bias", layer.bias.value, layer.bias.grad, 120),
                     block("conv2d.input", x, gx, 120)},
                    loss, opt, rng);
}

GradCheckReport check_deconv2d(const GradCheckOptions& opt, Rng& rng) {
  ConvTranspose2d<D> layer = ConvTranspose2d<D>::same_width("deconv2d", 4, 3, 3, 5);
  layer.init(rng);
  Tensor<D> x = random_tensor(2, 4, 6, 9, rng);
  const Tensor<D> probe = probe_like(layer.forward(x), rng);
  const Tensor<D> gx = layer.backward(probe);
  auto loss = [&] { return dot(layer.forward(x), probe); };
  return run_blocks("deconv2d",
                    {block("deconv2d.weight", layer.weight.value, layer.weight.grad, 120),
                     block("deconv2d.bias", layer.bias.value, layer.bias.grad, 120),
                     block("deconv2d.input", x, gx, 120)},
                    loss, opt, rng);
}

GradCheckReport check_batchnorm(const GradCheckOptions& opt, Rng& rng) {
  BatchNorm<D> layer("batchnorm", 3);
  Tensor<D> x = random_tensor(4, 3, 2, 6, rng, 2.0);
  for (auto& v : layer.gamma.value.flat()) v = rng.uniform(0.5, 1.5);
  for (auto& v : layer.beta.value.flat()) v = rng.normal(0.0, 0.3);
  const Tensor<D> probe = probe_like(layer.forward(x, true), rng);
  const Tensor<D> gx = layer.backward(probe);
  auto loss = [&] { return dot(layer.forward(x, true), probe); };
  return run_blocks("batchnorm",
                    {block("batchnorm.input", x, gx, 150),
                     block("batchnorm.gamma", layer.gamma.value, layer.gamma.grad, 150),
                     block("batchnorm.beta", layer.beta.value, layer.beta.grad, 150)},
                    loss, opt, rng);
}

GradCheckReport check_elu(const GradCheckOptions& opt, Rng& rng) {
  Elu<D> layer;
  Tensor<D> x(2, 3, 4, 5);
  // Keep sampled points away from the kink at exactly zero.
  for (auto& v : x.flat()) {
    do {
      v = rng.normal();
    } while (std::abs(v) < 1e-2);
  }
  const Tensor<D> probe = probe_like(layer.forward(x), rng);
  const Tensor<D> gx = layer.backward(probe);
  auto loss = [&] { return dot(layer.forward(x), probe); };
  return run_blocks("elu", {block("elu.input", x, gx, 220)}, loss, opt, rng);
}

GradCheckReport check_pooling(const GradCheckOptions& opt, Rng& rng) {
  GradCheckReport merged{"mean_pool+upsample", 0.0, 0};
  {
    MeanPool<D> pool;
    Tensor<D> x = random_tensor(2, 3, 1, 8, rng);
    const Tensor<D> probe = probe_like(pool.forward(x), rng);
    const Tensor<D> gx = pool.backward(probe);
    auto loss = [&] { return dot(pool.forward(x), probe); };
    const auto r =
        run_blocks("mean_pool", {block("mean_pool.input", x, gx, 110)}, loss, opt, rng);
    merged.max_rel_err = std::max(merged.max_rel_err, r.max_rel_err);
    merged.coords_checked += r.coords_checked;
  }
  {
    Upsample<D> up;
    Tensor<D> x = random_tensor(2, 3, 1, 4, rng);
    const Tensor<D> probe = probe_like(up.forward(x), rng);
    const Tensor<D> gx = up.backward(probe);
    auto loss = [&] { return dot(up.forward(x), probe); };
    const auto r = run_blocks("upsample", {block("upsample.input", x, gx, 110)}, loss, opt, rng);
    merged.max_rel_err = std::max(merged.max_rel_err, r.max_rel_err);
    merged.coords_checked += r.coords_checked;
  }
  return merged;
}

GradCheckReport check_dense(const GradCheckOptions& opt, Rng& rng) {
  Dense<D> layer("dense", 7, 5);
  layer.init(rng);
  Tensor<D> x = random_tensor(3, 1, 1, 7, rng);
  const Tensor<D> probe = probe_like(layer.forward(x), rng);
  const Tensor<D> gx = layer.backward(probe);
  auto loss = [&] { return dot(layer.forward(x), probe); };
  return run_blocks("dense",
                    {block("dense.weight", layer.weight.value, layer.weight.grad, 120),
                     block("dense.bias", layer.bias.value, layer.bias.grad, 120),
                     block("dense.input", x, gx, 120)},
                    loss, opt, rng);
}

GradCheckReport check_encoder(const GradCheckOptions& opt, Rng& rng) {
  CvaeModel<D> model(CvaeConfig{}, opt.seed + 11);
  Tensor<D> x = random_tensor(2, 1, 15, 400, rng, 0.5);
  model.zero_grad();
  auto [mu, lv] = model.encode(x, true);
  const Tensor<D> probe_mu = probe_like(mu, rng);
  const Tensor<D> probe_lv = probe_like(lv, rng);
  const Tensor<D> gx = CvaeGradientProbe::encode_backward(model, probe_mu, probe_lv);

  auto loss = [&] {
    auto [m, l] = model.encode(x, true);
    return dot(m, probe_mu) + dot(l, probe_lv);
  };
  std::vector<CheckBlock> blocks;
  auto params = model.parameters();
  for (std::size_t i = 0; i < 12; ++i) {  // encoder parameters lead the declared order
    blocks.push_back(block("encoder." + params[i]->name, params[i]->value, params[i]->grad, 18));
  }
  blocks.push_back(block("encoder.input", x, gx, 40));
  return run_blocks("encoder", std::move(blocks), loss, opt, rng);
}

GradCheckReport check_decoder(const GradCheckOptions& opt, Rng& rng) {
  CvaeModel<D> model(CvaeConfig{}, opt.seed + 13);
  Tensor<D> z = random_tensor(2, 1, 1, 10, rng);
  const Tensor<D> c = condition_tensor({Label::Right, Label::Feet}).cast<D>();
  model.zero_grad();
  const Tensor<D> probe = probe_like(model.decode(z, c, true), rng);
  const Tensor<D> g_zc = CvaeGradientProbe::decode_backward(model, probe);
  Tensor<D> gz(2, 1, 1, 10);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t j = 0; j < 10; ++j) gz.at(n, 0, 0, j) = g_zc.at(n, 0, 0, j);
  }

  auto loss = [&] { return dot(model.decode(z, c, true), probe); };
  std::vector<CheckBlock> blocks;
  auto params = model.parameters();
  for (std::size_t i = 12; i < params.size(); ++i) {
    blocks.push_back(block("decoder." + params[i]->name, params[i]->value, params[i]->grad, 18));
  }
  blocks.push_back(block("decoder.latent_input", z, gz, 20));
  return run_blocks("decoder", std::move(blocks), loss, opt, rng);
}

GradCheckReport check_full_loss(const GradCheckOptions& opt, Rng& rng) {
  CvaeModel<D> model(CvaeConfig{}, opt.seed + 17);
  Tensor<D> x = random_tensor(2, 1, 15, 400, rng, 0.5);
  const Tensor<D> c = condition_tensor({Label::Left, Label::Right}).cast<D>();
  const Tensor<D> eps = random_tensor(2, 1, 1, 10, rng);  // frozen noise draw

  model.zero_grad();
  Tensor<D> gx;
  model.loss_backward(x, c, eps, true, &gx);

  auto loss = [&] { return model.loss(x, c, eps, true).total; };
  std::vector<CheckBlock> blocks;
  for (auto* p : model.parameters()) {
    blocks.push_back(block("full_loss." + p->name, p->value, p->grad, 12));
  }
  blocks.push_back(block("full_loss.input", x, gx, 24));
  return run_blocks("full_loss", std::move(blocks), loss, opt, rng);
}

}  // namespace

std::vector<GradCheckReport> run_gradient_checks(const GradCheckOptions& options) {
  Rng rng(options.seed);
  std::vector<GradCheckReport> reports;
  reports.push_back(check_conv2d(options, rng));
  GradCheckOptions rest = options;
  rest.inject_sign_flip = false;  // the self-test hook only corrupts the first group
  reports.push_back(check_deconv2d(rest, rng));
  reports.push_back(check_batchnorm(rest, rng));
  reports.push_back(check_elu(rest, rng));
  reports.push_back(check_pooling(rest, rng));
  reports.push_back(check_dense(rest, rng));
  reports.push_back(check_encoder(rest, rng));
  reports.push_back(check_decoder(rest, rng));
  reports.push_back(check_full_loss(rest, rng));
  return reports;
}

}  // namespace misynth
