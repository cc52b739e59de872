#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/signal/bands.hpp"
#include "neurotopo/signal/fft.hpp"

namespace neurotopo::signal {

// One-sided power spectral density (power per Hz).
struct PowerSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> density;

  double bin_width_hz() const {
    return freq_hz.size() >= 2 ? freq_hz[1] - freq_hz[0] : 0.0;
  }
};

struct WelchParams {
  double segment_s = 1.0;  // Hann segment length
  double overlap = 0.5;    // fraction of a segment shared with the next
};

// Welch's method with a fixed segment length: periodic Hann window, constant
// detrend per segment, density scaling 1/(fs * sum(w^2)), one-sided spectrum
// with the interior bins doubled. Hold one estimator per segment length; the
// transform plan is reused across calls. Not thread-safe.
class WelchEstimator {
 public:
  WelchEstimator(std::size_t segment_len, double overlap)
      : nperseg_(segment_len), plan_(segment_len == 0 ? 1 : segment_len) {
    if (nperseg_ < 8)
      throw std::invalid_argument(
          "welch: segment of " + std::to_string(nperseg_) +
          " samples is too short; use at least 8 samples per segment");
    if (!(overlap >= 0.0 && overlap < 1.0))
      throw std::invalid_argument("welch: overlap fraction must lie in [0, 1), got " +
                                  std::to_string(overlap));
    const auto noverlap =
        static_cast<std::size_t>(std::floor(static_cast<double>(nperseg_) * overlap));
    step_ = nperseg_ - noverlap;

    window_.resize(nperseg_);
    window_power_ = 0.0;
    for (std::size_t i = 0; i < nperseg_; ++i) {
      window_[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                         static_cast<double>(i) /
                                         static_cast<double>(nperseg_)));
      window_power_ += window_[i] * window_[i];
    }
    buf_.resize(nperseg_);
  }

  std::size_t segment_len() const { return nperseg_; }

  PowerSpectrum psd(std::span<const double> x, double fs) {
    if (!(fs > 0.0))
      throw std::invalid_argument("welch: sample rate must be positive, got " +
                                  std::to_string(fs));
    if (x.size() < nperseg_)
      throw std::invalid_argument(
          "welch: segment length " + std::to_string(nperseg_) +
          " exceeds signal length " + std::to_string(x.size()) +
          "; use a segment of at most " + std::to_string(x.size()) + " samples");

    const std::size_t n_bins = nperseg_ / 2 + 1;
    PowerSpectrum out;
    out.freq_hz.resize(n_bins);
    out.density.assign(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k)
      out.freq_hz[k] = static_cast<double>(k) * fs / static_cast<double>(nperseg_);

    const std::size_t n_segments = 1 + (x.size() - nperseg_) / step_;
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
      const double* src = x.data() + seg * step_;
      double mean = 0.0;
      for (std::size_t i = 0; i < nperseg_; ++i) mean += src[i];
      mean /= static_cast<double>(nperseg_);
      for (std::size_t i = 0; i < nperseg_; ++i)
        buf_[i] = cdouble{(src[i] - mean) * window_[i], 0.0};
      plan_.forward(buf_.data());
      for (std::size_t k = 0; k < n_bins; ++k)
        out.density[k] += std::norm(buf_[k]);
    }

    const double scale =
        1.0 / (fs * window_power_ * static_cast<double>(n_segments));
    const bool even = (nperseg_ % 2 == 0);
    for (std::size_t k = 0; k < n_bins; ++k) {
      double v = out.density[k] * scale;
      const bool nyquist_bin = even && (k == n_bins - 1);
      if (k != 0 && !nyquist_bin) v *= 2.0;  // fold the negative frequencies in
      out.density[k] = v;
    }
    return out;
  }

 private:
  std::size_t nperseg_;
  std::size_t step_;
  std::vector<double> window_;
  double window_power_ = 0.0;
  FftPlan plan_;
  std::vector<cdouble> buf_;
};

inline PowerSpectrum welch_psd(std::span<const double> x, double fs,
                               const WelchParams& params = {}) {
  const auto nperseg = static_cast<std::size_t>(
      std::llround(params.segment_s * fs));
  WelchEstimator est(nperseg, params.overlap);
  return est.psd(x, fs);
}

// Integrates the one-sided density over [band.low_hz, band.high_hz).
inline double band_power(const PowerSpectrum& spectrum, const FrequencyBand& band) {
  const double df = spectrum.bin_width_hz();
  if (df <= 0.0)
    throw std::invalid_argument("band_power: spectrum has fewer than two bins");
  double acc = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < spectrum.freq_hz.size(); ++k) {
    if (band.contains(spectrum.freq_hz[k])) {
      acc += spectrum.density[k];
      ++hits;
    }
  }
  if (hits == 0)
    throw std::invalid_argument(
        "band_power: band '" + band.name + "' [" + std::to_string(band.low_hz) +
        ", " + std::to_string(band.high_hz) + ") Hz contains no bins at resolution " +
        std::to_string(df) + " Hz; use longer segments");
  return acc * df;
}

}  // namespace neurotopo::signal
