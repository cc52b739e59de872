#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/signal/bands.hpp"
#include "neurotopo/signal/butterworth.hpp"
#include "neurotopo/signal/filtfilt.hpp"
#include "neurotopo/signal/time_series.hpp"
#include "neurotopo/signal/welch.hpp"
#include "neurotopo/topo/layout.hpp"
#include "neurotopo/topo/rasterizer.hpp"

namespace neurotopo::topo {

// Stack of band images over one scalp grid. Plane-major storage:
// pixels[band * width * height + row * width + col]; mask is shared by all
// planes and masked-out pixels hold 0.
struct TopographicImage {
  int width = 0, height = 0, bands = 0;
  std::vector<double> pixels;
  std::vector<std::uint8_t> mask;

  std::size_t plane_size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  double* plane(int b) { return pixels.data() + static_cast<std::size_t>(b) * plane_size(); }
  const double* plane(int b) const {
    return pixels.data() + static_cast<std::size_t>(b) * plane_size();
  }
};

// Turns a signal chunk into a band-power image stack:
// per band: zero-phase bandpass -> Welch power spectral density per channel ->
// power integrated over the band -> log10(power + 1e-12); all band x channel
// values are then standardized jointly and each band's electrode field is
// interpolated over the projected montage and rasterized. Geometry, filters,
// and spectral plans are built once and reused across chunks. Not thread-safe.
class TopomapPipeline {
 public:
  TopomapPipeline(const ElectrodeLayout& layout,
                  std::span<const signal::FrequencyBand> bands, double sample_rate_hz,
                  int resolution, const signal::WelchParams& welch_params = {},
                  int filter_order = 6)
      : layout_(layout),
        bands_(bands.begin(), bands.end()),
        sample_rate_hz_(sample_rate_hz),
        welch_(welch_segment_len(welch_params, sample_rate_hz), welch_params.overlap),
        surface_(project_layout(layout), delaunay_triangulate(project_layout(layout))),
        plan_(surface_, grid_over_points(project_layout(layout), resolution)) {
    if (bands_.empty())
      throw std::invalid_argument("topomap: need at least one frequency band");
    filters_.reserve(bands_.size());
    for (const auto& band : bands_)
      filters_.push_back(signal::design_butterworth_bandpass(
          filter_order, band.low_hz, band.high_hz, sample_rate_hz_));
  }

  const GridSpec& grid() const { return plan_.grid(); }
  const std::vector<std::uint8_t>& mask() const { return plan_.mask(); }
  std::size_t band_count() const { return bands_.size(); }

  TopographicImage process(const signal::TimeSeries& chunk) {
    if (chunk.channels != layout_.size())
      throw std::invalid_argument("topomap: chunk has " +
                                  std::to_string(chunk.channels) +
                                  " channels but the montage has " +
                                  std::to_string(layout_.size()));
    if (std::abs(chunk.sample_rate_hz - sample_rate_hz_) > 1e-9)
      throw std::invalid_argument("topomap: chunk sample rate " +
                                  std::to_string(chunk.sample_rate_hz) +
                                  " differs from the pipeline rate " +
                                  std::to_string(sample_rate_hz_));

    const std::size_t n_ch = layout_.size();
    const std::size_t n_bands = bands_.size();
    std::vector<double> feature(n_bands * n_ch);
    for (std::size_t b = 0; b < n_bands; ++b) {
      const auto filtered = signal::filtfilt(filters_[b], chunk);
      for (std::size_t c = 0; c < n_ch; ++c) {
        const auto spectrum = welch_.psd(
            std::span<const double>(filtered.channel(c), filtered.samples),
            sample_rate_hz_);
        feature[b * n_ch + c] =
            std::log10(signal::band_power(spectrum, bands_[b]) + 1e-12);
      }
    }

    // joint standardization across all band x electrode values of the chunk
    double mean = 0.0;
    for (double v : feature) mean += v;
    mean /= static_cast<double>(feature.size());
    double var = 0.0;
    for (double v : feature) var += (v - mean) * (v - mean);
    var /= static_cast<double>(feature.size());
    const double inv_std = 1.0 / std::max(std::sqrt(var), 1e-12);
    for (double& v : feature) v = (v - mean) * inv_std;

    TopographicImage img;
    img.width = plan_.grid().width;
    img.height = plan_.grid().height;
    img.bands = static_cast<int>(n_bands);
    img.pixels.assign(n_bands * img.plane_size(), 0.0);
    img.mask = plan_.mask();
    for (std::size_t b = 0; b < n_bands; ++b) {
      surface_.fit(std::span<const double>(feature.data() + b * n_ch, n_ch));
      plan_.render(surface_, std::span<double>(img.plane(static_cast<int>(b)),
                                               img.plane_size()));
    }
    return img;
  }

 private:
  static std::size_t welch_segment_len(const signal::WelchParams& p, double fs) {
    if (!(fs > 0.0))
      throw std::invalid_argument("topomap: sample rate must be positive");
    return static_cast<std::size_t>(std::llround(p.segment_s * fs));
  }

  ElectrodeLayout layout_;
  std::vector<signal::FrequencyBand> bands_;
  double sample_rate_hz_;
  signal::WelchEstimator welch_;
  HctSurface surface_;
  RasterPlan plan_;
  std::vector<signal::BiquadCascade> filters_;
};

// One-shot convenience wrapper for tests and small batches.
inline TopographicImage build_topomap(const signal::TimeSeries& chunk,
                                      const ElectrodeLayout& layout,
                                      std::span<const signal::FrequencyBand> bands,
                                      int resolution,
                                      const signal::WelchParams& welch_params = {}) {
  TopomapPipeline pipeline(layout, bands, chunk.sample_rate_hz, resolution,
                           welch_params);
  return pipeline.process(chunk);
}

}  // namespace neurotopo::topo
