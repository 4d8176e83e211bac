#pragma once

#include <cstddef>
#include <vector>

namespace misynth {

// Discrete prolate spheroidal (Slepian) sequences.
struct TaperSet {
  std::size_t window_len = 0;
  double time_bandwidth = 0.0;             // NW
  std::vector<std::vector<double>> tapers;  // K x W, unit norm, mutually orthogonal
  std::vector<double> concentrations;       // in (0,1), sorted descending

  std::size_t k() const { return tapers.size(); }
};

// First k DPSS tapers of length window_len with time-bandwidth product NW,
// computed as eigenvectors of the standard symmetric tridiagonal matrix.
// Sign convention: positive mean, or positive leading lobe for the
// zero-mean antisymmetric tapers. Requires 0 < NW < window_len/2 and
// 1 <= k <= floor(2*NW).
TaperSet dpss(std::size_t window_len, double time_bandwidth, std::size_t k);

}  // namespace misynth
