#pragma once

#include <vector>

namespace misynth {

// Five-number box summary. Quartiles use linear interpolation of order
// statistics (the numpy/R type-7 rule).
struct BoxStats {
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double min = 0;
  double max = 0;
  std::size_t n = 0;
};

BoxStats boxstats(std::vector<double> values);  // throws InputError when empty

// p-quantile of a sorted sequence, linear interpolation between order
// statistics at position (n-1)*p.
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace misynth
