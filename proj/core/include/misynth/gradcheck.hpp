#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "misynth/errors.hpp"
#include "misynth/rng.hpp"

namespace misynth {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;

  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central-difference check of analytic partial derivatives. `loss` must be a
// deterministic function of the coordinates in `theta` (verified by evaluating
// it twice up front). Checks all coordinates, or a seeded random subsample
// when there are more than max_coords of them. The error is relative to the
// larger of the two derivatives, floored by scale_floor (typically a small
// fraction of the largest gradient component in the group under test) so
// structurally-zero partials do not drown in difference noise.
template <class LossFn>
GradCheckReport check_gradient(std::string name, std::span<double> theta,
                               std::span<const double> analytic, LossFn&& loss, double h,
                               std::size_t max_coords, Rng& rng, double scale_floor = 0.0) {
  if (theta.size() != analytic.size()) {
    throw InputError("gradcheck: analytic gradient size mismatch for '" + name + "'");
  }
  const double l0 = loss();
  const double l1 = loss();
  if (l0 != l1) {
    throw NumericError("gradcheck: non-deterministic forward detected for '" + name + "'");
  }

  std::vector<std::size_t> coords(theta.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (coords.size() > max_coords) {
    rng.shuffle(coords);
    coords.resize(max_coords);
  }

  double g_max = 0.0;
  for (const double a : analytic) g_max = std::max(g_max, std::abs(a));
  const double floor = std::max({scale_floor, 1e-3 * g_max, 1e-10});

  GradCheckReport report;
  report.name = std::move(name);
  report.coords_checked = coords.size();
  for (const std::size_t i : coords) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double lp = loss();
    theta[i] = saved - h;
    const double lm = loss();
    theta[i] = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(analytic[i] - numeric) / denom);
  }
  return report;
}

struct GradCheckOptions {
  std::uint64_t seed = 1;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_coords = 220;
  bool inject_sign_flip = false;  // harness self-test: corrupt one analytic gradient
};

// Finite-difference verification of every layer type plus the composed
// encoder, decoder and full training loss, all in 64-bit precision with a
// frozen noise draw.
std::vector<GradCheckReport> run_gradient_checks(const GradCheckOptions& options);

}  // namespace misynth
