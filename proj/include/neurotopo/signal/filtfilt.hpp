#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/signal/butterworth.hpp"
#include "neurotopo/signal/time_series.hpp"

namespace neurotopo::signal {

// Single forward pass of the cascade, in place. With steady_state_init the
// per-section delay registers start at their constant-input fixed point
// scaled by the section's first input, which suppresses the start-up
// transient when the signal has been edge-padded.
inline void sos_filter_inplace(const BiquadCascade& f, double* x, std::size_t n,
                               bool steady_state_init = true) {
  if (n == 0) return;
  for (std::size_t t = 0; t < n; ++t) x[t] *= f.gain;
  for (const auto& s : f.sections) {
    double z1 = 0.0, z2 = 0.0;
    if (steady_state_init) {
      const double denom = 1.0 + s.a1 + s.a2;
      const double dc = (s.b0 + s.b1 + s.b2) / denom;
      z1 = (dc - s.b0) * x[0];
      z2 = (s.b2 - s.a2 * dc) * x[0];
    }
    for (std::size_t t = 0; t < n; ++t) {
      const double in = x[t];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[t] = out;
    }
  }
}

// Zero-phase filtering: forward pass, backward pass, transients absorbed by
// odd-reflection padding of three state lengths at each end. The effective
// magnitude response is |H|^2, so the passband edges sit at -6 dB.
inline std::vector<double> filtfilt(const BiquadCascade& f,
                                    std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t padlen = 3 * f.state_length();
  if (n <= padlen)
    throw std::invalid_argument(
        "filtfilt: signal of " + std::to_string(n) +
        " samples is too short; need more than " + std::to_string(padlen) +
        " samples (3x the filter state length) for edge padding");

  std::vector<double> ext(n + 2 * padlen);
  for (std::size_t i = 0; i < padlen; ++i)
    ext[i] = 2.0 * x[0] - x[padlen - i];
  for (std::size_t i = 0; i < n; ++i) ext[padlen + i] = x[i];
  for (std::size_t i = 0; i < padlen; ++i)
    ext[padlen + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  sos_filter_inplace(f, ext.data(), ext.size());
  std::reverse(ext.begin(), ext.end());
  sos_filter_inplace(f, ext.data(), ext.size());
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
                             ext.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

inline TimeSeries filtfilt(const BiquadCascade& f, const TimeSeries& ts) {
  TimeSeries out(ts.channels, ts.samples, ts.sample_rate_hz);
  for (std::size_t c = 0; c < ts.channels; ++c) {
    const auto y = filtfilt(f, std::span<const double>(ts.channel(c), ts.samples));
    std::copy(y.begin(), y.end(), out.channel(c));
  }
  return out;
}

}  // namespace neurotopo::signal
