#include "misynth/reference.hpp"

#include "misynth/errors.hpp"

namespace misynth {

Recording common_average_reference(const Recording& rec) {
  rec.validate();
  if (rec.n_channels() < 2) {
    throw InputError("common_average_reference: need at least 2 channels");
  }
  Recording out = rec;
  const std::size_t nc = rec.n_channels();
  const std::size_t ns = rec.n_samples();
  for (std::size_t t = 0; t < ns; ++t) {
    double mean = 0.0;
    for (std::size_t ch = 0; ch < nc; ++ch) mean += rec.samples[ch][t];
    mean /= static_cast<double>(nc);
    for (std::size_t ch = 0; ch < nc; ++ch) out.samples[ch][t] -= mean;
  }
  return out;
}

Epoch common_average_reference(const Epoch& epoch) {
  epoch.validate();
  if (epoch.n_channels < 2) {
    throw InputError("common_average_reference: need at least 2 channels");
  }
  Epoch out = epoch;
  for (std::size_t t = 0; t < epoch.n_samples; ++t) {
    double mean = 0.0;
    for (std::size_t ch = 0; ch < epoch.n_channels; ++ch) mean += epoch.at(ch, t);
    mean /= static_cast<double>(epoch.n_channels);
    for (std::size_t ch = 0; ch < epoch.n_channels; ++ch) {
      out.at(ch, t) = static_cast<float>(epoch.at(ch, t) - mean);
    }
  }
  return out;
}

}  // namespace misynth
