#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurotopo::signal {

// Multichannel signal, channel-major storage: sample t of channel c lives at
// data[c * samples + t].
struct TimeSeries {
  std::size_t channels = 0;
  std::size_t samples = 0;
  double sample_rate_hz = 0.0;
  std::vector<double> data;

  TimeSeries() = default;
  TimeSeries(std::size_t ch, std::size_t n, double fs)
      : channels(ch), samples(n), sample_rate_hz(fs), data(ch * n, 0.0) {
    if (fs <= 0.0)
      throw std::invalid_argument("TimeSeries: sample rate must be positive, got " +
                                  std::to_string(fs));
  }

  double* channel(std::size_t c) {
    check_channel(c);
    return data.data() + c * samples;
  }
  const double* channel(std::size_t c) const {
    check_channel(c);
    return data.data() + c * samples;
  }

  double& at(std::size_t c, std::size_t t) { return data[c * samples + t]; }
  double at(std::size_t c, std::size_t t) const { return data[c * samples + t]; }

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples) / sample_rate_hz : 0.0;
  }

 private:
  void check_channel(std::size_t c) const {
    if (c >= channels)
      throw std::out_of_range("TimeSeries: channel " + std::to_string(c) +
                              " out of range (have " + std::to_string(channels) + ")");
  }
};

}  // namespace neurotopo::signal
