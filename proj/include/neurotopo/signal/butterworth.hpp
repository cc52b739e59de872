#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurotopo::signal {

// One second-order section, normalized so a0 == 1:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct BiquadCascade {
  std::vector<BiquadSection> sections;
  double gain = 1.0;  // applied once across the whole cascade

  std::size_t state_length() const { return 2 * sections.size(); }
};

// Digital Butterworth bandpass via the classical chain: analog lowpass
// prototype -> frequency prewarp -> lowpass-to-bandpass transform -> bilinear
// transform -> second-order sections. `order` is the prototype order, so the
// resulting bandpass has 2*order poles and `order` sections; attenuation one
// octave outside the passband is then steep enough for band separation work.
inline BiquadCascade design_butterworth_bandpass(int order, double low_hz,
                                                 double high_hz, double fs) {
  if (order < 1)
    throw std::invalid_argument("butterworth: order must be >= 1, got " +
                                std::to_string(order));
  if (!(fs > 0.0))
    throw std::invalid_argument("butterworth: sample rate must be positive, got " +
                                std::to_string(fs));
  const double nyquist = fs / 2.0;
  if (!(low_hz > 0.0))
    throw std::invalid_argument("butterworth: low edge must be positive, got " +
                                std::to_string(low_hz) + " Hz");
  if (!(high_hz > low_hz))
    throw std::invalid_argument("butterworth: high edge " + std::to_string(high_hz) +
                                " Hz must exceed low edge " + std::to_string(low_hz) +
                                " Hz");
  if (!(high_hz < nyquist))
    throw std::invalid_argument("butterworth: high edge " + std::to_string(high_hz) +
                                " Hz must be below the Nyquist frequency " +
                                std::to_string(nyquist) + " Hz");

  using cd = std::complex<double>;
  const double pi = std::numbers::pi;

  // Prewarped analog edges so the bilinear transform lands the digital edges
  // exactly on low_hz/high_hz.
  const double warped_lo = 2.0 * fs * std::tan(pi * low_hz / fs);
  const double warped_hi = 2.0 * fs * std::tan(pi * high_hz / fs);
  const double bw = warped_hi - warped_lo;
  const double w0_sq = warped_lo * warped_hi;

  // Unit-circle prototype poles; each maps to two bandpass poles
  //   s = p*bw/2 +- sqrt((p*bw/2)^2 - w0^2)
  // and the bandpass picks up `order` zeros at s = 0.
  std::vector<cd> analog_poles;
  analog_poles.reserve(2 * static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
    const cd p{std::cos(theta), std::sin(theta)};
    const cd half = p * (bw / 2.0);
    const cd delta = std::sqrt(half * half - cd{w0_sq, 0.0});
    analog_poles.push_back(half + delta);
    analog_poles.push_back(half - delta);
  }

  // Bilinear transform with K = 2*fs. The bandpass zeros at s=0 land on z=+1
  // and the order-deficit zeros fill in at z=-1, so every section's numerator
  // is (z-1)(z+1) -> b = (1, 0, -1). The pole set is closed under
  // conjugation, so the accumulated gain product is real.
  const double K = 2.0 * fs;
  cd gain_denominator{1.0, 0.0};
  std::vector<cd> digital_poles;
  digital_poles.reserve(analog_poles.size());
  for (const cd& sp : analog_poles) {
    digital_poles.push_back((cd{K, 0.0} + sp) / (cd{K, 0.0} - sp));
    gain_denominator *= (cd{K, 0.0} - sp);
  }
  if (std::abs(gain_denominator.imag()) >
      1e-8 * std::abs(gain_denominator.real()))
    throw std::runtime_error("butterworth: pole set lost conjugate symmetry");
  const double gain =
      std::pow(bw, order) * std::pow(K, order) / gain_denominator.real();

  // Group into second-order sections: each upper-half pole pairs with its
  // implied conjugate; real poles (wideband designs) pair among themselves.
  constexpr double real_tol = 1e-12;
  std::vector<cd> upper;
  std::vector<double> reals;
  for (const cd& zp : digital_poles) {
    if (zp.imag() > real_tol)
      upper.push_back(zp);
    else if (zp.imag() >= -real_tol)
      reals.push_back(zp.real());
  }
  std::sort(upper.begin(), upper.end(), [](const cd& a, const cd& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::sort(reals.begin(), reals.end());
  if (2 * upper.size() + reals.size() != digital_poles.size() ||
      reals.size() % 2 != 0)
    throw std::runtime_error("butterworth: pole pairing failed");

  BiquadCascade cascade;
  cascade.gain = gain;
  auto add_section = [&](double a1, double a2) {
    BiquadSection sec;
    sec.b0 = 1.0;
    sec.b1 = 0.0;
    sec.b2 = -1.0;
    sec.a1 = a1;
    sec.a2 = a2;
    if (!(std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2))
      throw std::runtime_error(
          "butterworth: design produced an unstable section for band [" +
          std::to_string(low_hz) + ", " + std::to_string(high_hz) + ") Hz");
    cascade.sections.push_back(sec);
  };
  for (const cd& zp : upper) add_section(-2.0 * zp.real(), std::norm(zp));
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    add_section(-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]);
  if (cascade.sections.size() != static_cast<std::size_t>(order))
    throw std::runtime_error("butterworth: unexpected section count");
  return cascade;
}

// |H(e^{j 2 pi f / fs})| of the cascade.
inline double magnitude_response(const BiquadCascade& f, double freq_hz, double fs) {
  using cd = std::complex<double>;
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  const cd z1 = std::polar(1.0, -w);  // z^-1
  const cd z2 = z1 * z1;
  cd h{f.gain, 0.0};
  for (const auto& s : f.sections)
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

inline bool is_stable(const BiquadCascade& f) {
  // Jury criterion per section: |a2| < 1 and |a1| < 1 + a2.
  for (const auto& s : f.sections)
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) return false;
  return true;
}

}  // namespace neurotopo::signal
