#include "misynth/dpss.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "misynth/errors.hpp"

namespace misynth {

TaperSet dpss(std::size_t window_len, double time_bandwidth, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(window_len);
  if (window_len < 2) throw InputError("dpss: window length must be >= 2");
  if (!(time_bandwidth > 0.0 && time_bandwidth < static_cast<double>(window_len) / 2.0)) {
    throw InputError("dpss: need 0 < NW < window_len/2");
  }
  const auto k_max = static_cast<std::size_t>(std::floor(2.0 * time_bandwidth));
  if (k < 1 || k > k_max) {
    throw InputError("dpss: taper count must be in [1, floor(2*NW)] = [1, " +
                     std::to_string(k_max) + "]");
  }

  const double half_bw = time_bandwidth / static_cast<double>(window_len);  // W
  const double cos_term = std::cos(2.0 * std::numbers::pi * half_bw);

  Eigen::VectorXd diag(n);
  Eigen::VectorXd subdiag(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = (static_cast<double>(n) - 1.0) / 2.0 - static_cast<double>(i);
    diag(i) = c * c * cos_term;
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    subdiag(i) = static_cast<double>(i + 1) * static_cast<double>(n - 1 - i) / 2.0;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericError("dpss: tridiagonal eigensolver failed");
  }

  TaperSet set;
  set.window_len = window_len;
  set.time_bandwidth = time_bandwidth;
  set.tapers.reserve(k);
  set.concentrations.reserve(k);

  for (std::size_t j = 0; j < k; ++j) {
    // Eigenvalues come back ascending; the most concentrated taper is last.
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - static_cast<Eigen::Index>(j));
    v.normalize();

    const double mean = v.mean();
    if (std::abs(mean) > 1e-10) {
      if (mean < 0.0) v = -v;
    } else {
      // Antisymmetric taper: make the leading lobe positive.
      const double peak = v.cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(v(i)) > 1e-7 * peak) {
          if (v(i) < 0.0) v = -v;
          break;
        }
      }
    }

    // Concentration from the sinc-kernel quadratic form v^T S v with
    // S_ij = sin(2 pi W (i-j)) / (pi (i-j)), S_ii = 2W.
    double lambda = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      lambda += v(a) * v(a) * 2.0 * half_bw;
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const double d = static_cast<double>(a - b);
        const double s = std::sin(2.0 * std::numbers::pi * half_bw * d) / (std::numbers::pi * d);
        lambda += 2.0 * v(a) * v(b) * s;
      }
    }

    set.tapers.emplace_back(v.data(), v.data() + n);
    set.concentrations.push_back(lambda);
  }
  return set;
}

}  // namespace misynth
