#pragma once

#include <complex>
#include <ostream>
#include <span>
#include <vector>

namespace misynth {

// One biquad: numerator b0,b1,b2 over denominator 1,a1,a2.
struct SosSection {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

struct IirFilter {
  std::vector<SosSection> sections;
  int design_order = 0;  // analog prototype order
  double low_hz = 0.0;
  double high_hz = 0.0;
  double sample_rate_hz = 0.0;

  bool stable() const;  // every section's poles strictly inside the unit circle
  std::complex<double> response_at(double freq_hz) const;
  // Transfer function at an explicit z; H(1) and H(-1) evaluate exactly.
  std::complex<double> response_at_z(const std::complex<double>& z) const;
  double magnitude_at(double freq_hz) const;
  double magnitude_db(double freq_hz) const;
};

// Digital Butterworth bandpass: analog prototype of the given order,
// lowpass-to-bandpass transform, bilinear discretization with frequency
// prewarping. The passband edges land at -3.0103 dB by construction.
IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz);

// Causal cascade of direct-form II transposed sections, zero initial state.
// Throws NumericError if the output turns non-finite.
std::vector<double> filter_causal(const IirFilter& filter, std::span<const double> x);

// Plain-text coefficient dump (one "b0 b1 b2 1 a1 a2" row per section) for
// cross-checking against reference tools.
void write_sos_text(const IirFilter& filter, std::ostream& out);

}  // namespace misynth
