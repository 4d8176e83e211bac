#include "misynth/filters.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

#include "misynth/errors.hpp"

namespace misynth {

namespace {
using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
}  // namespace

bool IirFilter::stable() const {
  // Stability triangle for z^2 + a1 z + a2: |a2| < 1 and |a1| < 1 + a2.
  for (const auto& s : sections) {
    if (!(std::abs(s.a2) < 1.0) || !(std::abs(s.a1) < 1.0 + s.a2)) return false;
  }
  return true;
}

std::complex<double> IirFilter::response_at(double freq_hz) const {
  const double omega = 2.0 * kPi * freq_hz / sample_rate_hz;
  return response_at_z(std::exp(cplx(0.0, omega)));
}

std::complex<double> IirFilter::response_at_z(const std::complex<double>& z) const {
  const cplx z1 = 1.0 / z;
  const cplx z2 = z1 * z1;
  cplx h(1.0, 0.0);
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

double IirFilter::magnitude_at(double freq_hz) const { return std::abs(response_at(freq_hz)); }

double IirFilter::magnitude_db(double freq_hz) const {
  return 20.0 * std::log10(magnitude_at(freq_hz));
}

IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  if (order < 1) throw InputError("butterworth design: order must be >= 1");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs_hz / 2.0)) {
    throw InputError("butterworth design: need 0 < low < high < fs/2");
  }

  // Prewarped analog band edges.
  const double w1 = 2.0 * fs_hz * std::tan(kPi * low_hz / fs_hz);
  const double w2 = 2.0 * fs_hz * std::tan(kPi * high_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0_sq = w1 * w2;

  // Analog lowpass prototype poles (left half plane, unit cutoff), then the
  // lowpass-to-bandpass substitution s -> (s^2 + w0^2)/(bw*s): each prototype
  // pole p yields the two roots of s^2 - p*bw*s + w0^2 = 0.
  std::vector<cplx> analog_poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
    const cplx p(std::cos(theta), std::sin(theta));
    const cplx half = p * bw * 0.5;
    const cplx root = std::sqrt(half * half - w0_sq);
    analog_poles.push_back(half + root);
    analog_poles.push_back(half - root);
  }

  // Bilinear transform. The n zeros at s=0 map to z=+1, the n at infinity
  // to z=-1, so every section gets the numerator (z-1)(z+1).
  const double two_fs = 2.0 * fs_hz;
  std::vector<cplx> digital_poles;
  digital_poles.reserve(analog_poles.size());
  for (const cplx& s : analog_poles) {
    digital_poles.push_back((two_fs + s) / (two_fs - s));
  }

  // Pair poles into second-order sections: conjugate pairs first (matched by
  // sorting on imaginary part magnitude), leftover real poles pairwise.
  std::vector<cplx> complex_poles;
  std::vector<double> real_poles;
  for (const cplx& p : digital_poles) {
    if (std::abs(p.imag()) > 1e-12) {
      if (p.imag() > 0) complex_poles.push_back(p);  // keep one of each conjugate pair
    } else {
      real_poles.push_back(p.real());
    }
  }
  std::sort(complex_poles.begin(), complex_poles.end(),
            [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
  std::sort(real_poles.begin(), real_poles.end());

  IirFilter f;
  f.design_order = order;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.sample_rate_hz = fs_hz;
  for (const cplx& p : complex_poles) {
    SosSection s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    f.sections.push_back(s);
  }
  if (real_poles.size() % 2 != 0) {
    throw NumericError("butterworth design: unpaired real pole");
  }
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    SosSection s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -(real_poles[i] + real_poles[i + 1]);
    s.a2 = real_poles[i] * real_poles[i + 1];
    f.sections.push_back(s);
  }

  // Normalize to unit gain at the (warped-back) center frequency, spreading
  // the correction evenly across sections.
  const double center_hz = fs_hz / kPi * std::atan(std::sqrt(w0_sq) / two_fs);
  const double g = f.magnitude_at(center_hz);
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw NumericError("butterworth design: degenerate center-frequency gain");
  }
  const double per_section = std::pow(1.0 / g, 1.0 / static_cast<double>(f.sections.size()));
  for (auto& s : f.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }

  if (!f.stable()) {
    throw NumericError("butterworth design: produced an unstable filter");
  }
  return f;
}

std::vector<double> filter_causal(const IirFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  std::vector<double> s1(filter.sections.size(), 0.0);
  std::vector<double> s2(filter.sections.size(), 0.0);
  for (std::size_t n = 0; n < y.size(); ++n) {
    double v = y[n];
    for (std::size_t k = 0; k < filter.sections.size(); ++k) {
      const auto& c = filter.sections[k];
      const double out = c.b0 * v + s1[k];
      s1[k] = c.b1 * v - c.a1 * out + s2[k];
      s2[k] = c.b2 * v - c.a2 * out;
      v = out;
    }
    y[n] = v;
  }
  for (std::size_t n = 0; n < y.size(); ++n) {
    if (!std::isfinite(y[n])) {
      throw NumericError("filter_causal: non-finite output at sample " + std::to_string(n));
    }
  }
  return y;
}

void write_sos_text(const IirFilter& filter, std::ostream& out) {
  out << "# butterworth bandpass order=" << filter.design_order << " low_hz=" << filter.low_hz
      << " high_hz=" << filter.high_hz << " fs_hz=" << filter.sample_rate_hz << "\n";
  out << "# b0 b1 b2 a0 a1 a2\n";
  out << std::setprecision(17);
  for (const auto& s : filter.sections) {
    out << s.b0 << " " << s.b1 << " " << s.b2 << " 1 " << s.a1 << " " << s.a2 << "\n";
  }
}

}  // namespace misynth
