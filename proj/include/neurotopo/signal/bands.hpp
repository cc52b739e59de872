#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace neurotopo::signal {

// Half-open frequency interval [low_hz, high_hz).
struct FrequencyBand {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;

  FrequencyBand() = default;
  FrequencyBand(std::string n, double lo, double hi)
      : name(std::move(n)), low_hz(lo), high_hz(hi) {
    if (!(lo > 0.0) || !(hi > lo))
      throw std::invalid_argument("FrequencyBand '" + name +
                                  "': need 0 < low < high, got [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }

  bool contains(double f) const { return f >= low_hz && f < high_hz; }
};

// The five standard EEG rhythms used throughout the pipeline. Gamma is capped
// at 60 Hz so every band stays below the Nyquist limit of 125 Hz recordings.
inline const std::array<FrequencyBand, 5>& canonical_bands() {
  static const std::array<FrequencyBand, 5> bands = {
      FrequencyBand{"delta", 1.0, 3.0},  FrequencyBand{"theta", 3.0, 8.0},
      FrequencyBand{"alpha", 8.0, 13.0}, FrequencyBand{"beta", 13.0, 30.0},
      FrequencyBand{"gamma", 30.0, 60.0}};
  return bands;
}

}  // namespace neurotopo::signal
