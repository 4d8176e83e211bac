#include "misynth/generate.hpp"

#include <numeric>

#include "misynth/errors.hpp"
#include "misynth/train.hpp"

namespace misynth {

namespace {

constexpr std::size_t kDecodeBatch = 64;

void check_inputs(const CvaeModel<float>& model, const EpochStore& resting) {
  if (!model.bn_ready()) {
    throw InputError("generate: model batch-norm statistics are uninitialized");
  }
  if (resting.n_epochs() == 0) throw InputError("generate: resting store is empty");
  if (resting.n_channels() != model.config().n_channels ||
      resting.n_samples() != model.config().n_samples) {
    throw InputError("generate: resting store geometry does not match the model");
  }
}

// Core pipeline shared by both entry points. `conditions` holds the targets
// generated per noise draw; each draw is reused across all of them.
std::vector<ArtificialEpochSet> run_generation(CvaeModel<float>& model, const EpochStore& resting,
                                               const std::vector<Label>& conditions,
                                               std::size_t samples_per_epoch, std::uint64_t seed,
                                               bool latent_mean_mode = false) {
  check_inputs(model, resting);
  if (samples_per_epoch < 1) throw InputError("generate: samples_per_epoch must be >= 1");

  const std::size_t latent = model.config().latent_dim;
  const std::size_t n_src = resting.n_epochs();
  const std::size_t n_out = n_src * samples_per_epoch;

  std::vector<ArtificialEpochSet> sets;
  for (const Label cond : conditions) {
    ArtificialEpochSet set;
    set.condition = cond;
    set.seed = seed;
    set.samples_per_epoch = samples_per_epoch;
    set.store = EpochStore(resting.sample_rate_hz(), resting.channels(), resting.n_samples());
    sets.push_back(std::move(set));
  }

  // Noise is drawn once per (source epoch, sample) in store order, so the
  // sequence does not depend on how many conditions are requested. Mean mode
  // zeroes the draw, turning z into the posterior mean.
  Rng rng(seed);
  Tensor<float> eps_all(n_out, 1, 1, latent);
  if (!latent_mean_mode) {
    for (std::size_t i = 0; i < n_out; ++i) {
      for (std::size_t j = 0; j < latent; ++j) {
        eps_all.at(i, 0, 0, j) = static_cast<float>(rng.normal());
      }
    }
  }

  for (std::size_t start = 0; start < n_src; start += kDecodeBatch) {
    const std::size_t end = std::min(n_src, start + kDecodeBatch);
    std::vector<std::size_t> src_idx(end - start);
    std::iota(src_idx.begin(), src_idx.end(), start);
    const Tensor<float> x = epochs_to_tensor(resting, src_idx);
    auto [mu, log_var] = model.encode(x, /*training=*/false);

    // Expand posterior rows to one row per requested sample.
    const std::size_t rows = src_idx.size() * samples_per_epoch;
    Tensor<float> mu_rep(rows, 1, 1, latent);
    Tensor<float> lv_rep(rows, 1, 1, latent);
    Tensor<float> eps(rows, 1, 1, latent);
    for (std::size_t r = 0; r < src_idx.size(); ++r) {
      for (std::size_t s = 0; s < samples_per_epoch; ++s) {
        const std::size_t row = r * samples_per_epoch + s;
        const std::size_t global = src_idx[r] * samples_per_epoch + s;
        for (std::size_t j = 0; j < latent; ++j) {
          mu_rep.at(row, 0, 0, j) = mu.at(r, 0, 0, j);
          lv_rep.at(row, 0, 0, j) = log_var.at(r, 0, 0, j);
          eps.at(row, 0, 0, j) = eps_all.at(global, 0, 0, j);
        }
      }
    }
    const Tensor<float> z = CvaeModel<float>::reparameterize(mu_rep, lv_rep, eps);

    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
      const Tensor<float> c =
          condition_tensor(std::vector<Label>(rows, conditions[ci]));
      const Tensor<float> decoded = model.decode(z, c, /*training=*/false);
      if (decoded.has_nonfinite()) {
        throw NumericError("generate: decoder produced non-finite values");
      }
      for (std::size_t row = 0; row < rows; ++row) {
        const std::size_t src = src_idx[row / samples_per_epoch];
        Epoch e;
        e.n_channels = resting.n_channels();
        e.n_samples = resting.n_samples();
        e.data.assign(&decoded.at(row, 0, 0, 0),
                      &decoded.at(row, 0, 0, 0) + e.n_channels * e.n_samples);
        e.label = conditions[ci];
        e.kind = EpochKind::CueAligned;
        e.subject_id = resting.subject(src);
        sets[ci].provenance.push_back({sets[ci].store.n_epochs(), src, resting.subject(src),
                                       conditions[ci], seed});
        sets[ci].store.append(e);
      }
    }
  }
  return sets;
}

}  // namespace

ArtificialEpochSet generate_conditioned(CvaeModel<float>& model, const EpochStore& resting,
                                        Label condition, std::size_t samples_per_epoch,
                                        std::uint64_t seed, bool latent_mean_mode) {
  auto sets =
      run_generation(model, resting, {condition}, samples_per_epoch, seed, latent_mean_mode);
  return std::move(sets.front());
}

std::array<ArtificialEpochSet, kNumClasses> generate_all_conditions(CvaeModel<float>& model,
                                                                    const EpochStore& resting,
                                                                    std::uint64_t seed,
                                                                    std::size_t samples_per_epoch) {
  auto sets = run_generation(model, resting, {Label::Right, Label::Left, Label::Feet},
                             samples_per_epoch, seed);
  return {std::move(sets[0]), std::move(sets[1]), std::move(sets[2])};
}

void write_provenance_csv(const ArtificialEpochSet& set, std::ostream& out) {
  out << "epoch_index,subject,source_index,condition,seed\n";
  for (const auto& p : set.provenance) {
    out << p.index << "," << p.subject << "," << p.source_index << "," << to_string(p.condition)
        << "," << p.seed << "\n";
  }
}

}  // namespace misynth
