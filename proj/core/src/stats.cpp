#include "misynth/stats.hpp"

#include <algorithm>
#include <cmath>

#include "misynth/errors.hpp"

namespace misynth {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

BoxStats boxstats(std::vector<double> values) {
  if (values.empty()) throw InputError("boxstats: empty value list");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.n = values.size();
  s.min = values.front();
  s.max = values.back();
  s.median = quantile_sorted(values, 0.5);
  s.q1 = quantile_sorted(values, 0.25);
  s.q3 = quantile_sorted(values, 0.75);
  return s;
}

}  // namespace misynth
