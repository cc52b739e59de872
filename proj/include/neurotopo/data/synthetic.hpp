#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/data/dataset.hpp"
#include "neurotopo/topo/layout.hpp"
#include "neurotopo/util/rng.hpp"

namespace neurotopo::data {

// Synthetic EEG with separately tunable user, song, and enjoyment structure.
//
// Every song is a sum of the same three oscillations (theta/alpha/beta); song
// identity lives purely in one spatial pattern weighting those oscillations
// across channels. All song patterns are channel permutations of one shared
// gain profile, and the same permutation applies to all three oscillations:
// songs therefore share every location-free statistic (total power, per-band
// gain histograms, their joint distribution) and differ only by WHERE the
// power sits. confound_lambda mixes each pattern with a per-user channel
// permutation of itself: 0 means every user expresses the song identically,
// 1 means the pattern is fully user-scrambled and song decoding cannot
// transfer across users.
//
// User identity is carried by a song-independent fingerprint: five
// off-pattern oscillations (one per canonical band) with per-user band
// weights and a per-user channel gain profile.
//
// When enjoyment_gate is set, a rating > 5 expresses the song's canonical
// pattern scaled by gate_high; otherwise a fixed alternate pattern set
// (the canonical patterns reassigned across songs, identical for all users)
// scaled by gate_low. gate_low > gate_high plants the "low enjoyment decodes
// better" asymmetry while both classes stay decodable across users.
struct SyntheticConfig {
  int users = 20;
  int songs = 10;
  double duration_s = 60.0;
  int channels = 125;
  double sample_rate_hz = 125.0;
  double confound_lambda = 0.0;
  bool enjoyment_gate = false;
  double gate_high = 0.62;
  double gate_low = 0.92;
  double song_level = 1.0;
  double fingerprint_level = 0.8;
  double noise_level = 0.25;
  std::uint64_t seed = 0;
};

// Generator-side ground truth, for validating downstream bookkeeping.
struct SyntheticTruth {
  std::vector<int> ratings;  // indexed user * songs + song
  int high_count = 0;        // ratings > 5
  int low_count = 0;
};

inline constexpr std::array<double, 3> kSongFreqsHz = {6.0, 10.0, 21.0};
inline constexpr std::array<double, 5> kFingerprintFreqsHz = {2.0, 4.5, 11.5,
                                                              16.0, 38.0};

namespace detail {

// Everything random the generator uses, drawn up front from independent
// seed streams so recording synthesis itself is pure per recording.
struct GeneratorPlan {
  std::vector<std::vector<double>> pattern;  // [song][chan], all oscillations
  std::vector<std::vector<int>> user_perm;   // [user][chan]
  std::vector<std::vector<double>> fp_gain;  // [user][chan]
  std::vector<std::vector<double>> fp_weight;  // [user][band]
  std::vector<std::vector<double>> phase;      // [song][osc]
  std::vector<int> ratings;                    // [user*songs+song]
};

inline void validate(const SyntheticConfig& cfg) {
  if (cfg.users < 2 || cfg.songs < 2)
    throw std::invalid_argument("synthetic config needs at least 2 users and 2 songs");
  if (cfg.channels < 4)
    throw std::invalid_argument("synthetic config needs at least 4 channels");
  if (cfg.duration_s <= 0.0 || cfg.sample_rate_hz <= 0.0)
    throw std::invalid_argument("synthetic duration and sample rate must be positive");
  if (cfg.confound_lambda < 0.0 || cfg.confound_lambda > 1.0)
    throw std::invalid_argument("confound_lambda must lie in [0,1], got " +
                                std::to_string(cfg.confound_lambda));
  if (cfg.gate_high <= 0.0 || cfg.gate_low <= 0.0 || cfg.song_level < 0.0 ||
      cfg.fingerprint_level < 0.0 || cfg.noise_level < 0.0)
    throw std::invalid_argument("synthetic levels must be non-negative (gates positive)");
}

inline GeneratorPlan make_plan(const SyntheticConfig& cfg) {
  validate(cfg);
  const int C = cfg.channels;
  GeneratorPlan plan;

  // shared gain profile: one multiset of channel gains in [0.5, 1.5]
  std::vector<double> base(C);
  for (int c = 0; c < C; ++c)
    base[c] = 0.5 + static_cast<double>(c) / static_cast<double>(C - 1);

  Rng pattern_rng(derive_seed(cfg.seed, 1));
  plan.pattern.resize(cfg.songs);
  for (int s = 0; s < cfg.songs; ++s) {
    plan.pattern[s] = base;
    pattern_rng.shuffle(plan.pattern[s]);
  }

  Rng user_rng(derive_seed(cfg.seed, 2));
  plan.user_perm.resize(cfg.users);
  plan.fp_gain.resize(cfg.users);
  plan.fp_weight.resize(cfg.users);
  for (int u = 0; u < cfg.users; ++u) {
    plan.user_perm[u].resize(C);
    std::iota(plan.user_perm[u].begin(), plan.user_perm[u].end(), 0);
    user_rng.shuffle(plan.user_perm[u]);
    plan.fp_gain[u].resize(C);
    for (double& g : plan.fp_gain[u]) g = user_rng.uniform(0.5, 1.5);
    plan.fp_weight[u].resize(kFingerprintFreqsHz.size());
    for (double& w : plan.fp_weight[u]) w = user_rng.uniform(0.6, 1.4);
  }

  // oscillation phases belong to the stimulus, not the listener: sharing
  // them across users makes lambda=0 produce identical signals per song
  Rng phase_rng(derive_seed(cfg.seed, 3));
  plan.phase.resize(cfg.songs);
  for (int s = 0; s < cfg.songs; ++s) {
    plan.phase[s].resize(kSongFreqsHz.size());
    for (double& p : plan.phase[s]) p = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  Rng rating_rng(derive_seed(cfg.seed, 4));
  plan.ratings.resize(static_cast<std::size_t>(cfg.users) * cfg.songs);
  for (int& r : plan.ratings)
    r = static_cast<int>(rating_rng.uniform_int(1, 9));
  return plan;
}

// Spatial weight of the song oscillations at channel c for (user, song): the
// gated base pattern mixed with its user-permuted copy by confound_lambda.
inline double expressed_gain(const SyntheticConfig& cfg, const GeneratorPlan& plan,
                             int user, int song, int chan) {
  const int rating = plan.ratings[static_cast<std::size_t>(user) * cfg.songs + song];
  int pattern_song = song;
  double gate = 1.0;
  if (cfg.enjoyment_gate) {
    if (rating > 5) {
      gate = cfg.gate_high;
    } else {
      gate = cfg.gate_low;
      pattern_song = (song + 1) % cfg.songs;  // fixed shared alternate pattern
    }
  }
  const std::vector<double>& pat = plan.pattern[pattern_song];
  const double shared = pat[chan];
  const double scrambled = pat[plan.user_perm[user][chan]];
  const double lam = cfg.confound_lambda;
  return gate * ((1.0 - lam) * shared + lam * scrambled);
}

}  // namespace detail

// Deterministic per seed: rerunning with one config reproduces every sample
// bit-exactly. Ratings ground truth is returned through `truth` if given.
inline Dataset synthesize(const SyntheticConfig& cfg,
                          SyntheticTruth* truth = nullptr) {
  const detail::GeneratorPlan plan = detail::make_plan(cfg);
  const int C = cfg.channels;
  const double fs = cfg.sample_rate_hz;
  const std::size_t N = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
  if (N == 0) throw std::invalid_argument("synthetic duration shorter than one sample");

  // one sin/cos table per oscillation, shared by every recording
  const std::size_t n_osc = kSongFreqsHz.size();
  const std::size_t n_fp = kFingerprintFreqsHz.size();
  std::vector<std::vector<double>> osc_sin(n_osc + n_fp), osc_cos(n_osc + n_fp);
  for (std::size_t k = 0; k < n_osc + n_fp; ++k) {
    const double f = k < n_osc ? kSongFreqsHz[k] : kFingerprintFreqsHz[k - n_osc];
    osc_sin[k].resize(N);
    osc_cos[k].resize(N);
    for (std::size_t t = 0; t < N; ++t) {
      const double arg = 2.0 * std::numbers::pi * f * static_cast<double>(t) / fs;
      osc_sin[k][t] = std::sin(arg);
      osc_cos[k][t] = std::cos(arg);
    }
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.channels = static_cast<std::size_t>(C);
  ds.sample_rate_hz = fs;
  ds.layout = topo::fibonacci_hemisphere(C);
  ds.recordings.reserve(static_cast<std::size_t>(cfg.users) * cfg.songs);

  for (int u = 0; u < cfg.users; ++u) {
    for (int s = 0; s < cfg.songs; ++s) {
      const std::size_t idx = static_cast<std::size_t>(u) * cfg.songs + s;
      Recording rec;
      rec.user_id = u;
      rec.song_id = s;
      rec.enjoyment_rating = plan.ratings[idx];
      rec.eeg = signal::TimeSeries(static_cast<std::size_t>(C), N, fs);

      Rng rec_rng(derive_seed(cfg.seed, 5, idx));
      rec.familiarity_rating = static_cast<int>(rec_rng.uniform_int(1, 9));

      for (int c = 0; c < C; ++c) {
        double* x = rec.eeg.channel(static_cast<std::size_t>(c));
        // song oscillations: amplitude-weighted stimulus-phase sinusoids
        const double gain = detail::expressed_gain(cfg, plan, u, s, c);
        for (std::size_t k = 0; k < n_osc; ++k) {
          const double amp = cfg.song_level * gain;
          if (amp == 0.0) continue;
          const double ph = plan.phase[s][k];
          const double a_sin = amp * std::cos(ph), a_cos = amp * std::sin(ph);
          const double* st = osc_sin[k].data();
          const double* ct = osc_cos[k].data();
          for (std::size_t t = 0; t < N; ++t) x[t] += a_sin * st[t] + a_cos * ct[t];
        }
        // user fingerprint: per-band weights on a per-user channel profile
        for (std::size_t b = 0; b < n_fp; ++b) {
          const double ph = rec_rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double amp =
              cfg.fingerprint_level * plan.fp_weight[u][b] * plan.fp_gain[u][c];
          if (amp == 0.0) continue;
          const double a_sin = amp * std::cos(ph), a_cos = amp * std::sin(ph);
          const double* st = osc_sin[n_osc + b].data();
          const double* ct = osc_cos[n_osc + b].data();
          for (std::size_t t = 0; t < N; ++t) x[t] += a_sin * st[t] + a_cos * ct[t];
        }
        if (cfg.noise_level > 0.0)
          for (std::size_t t = 0; t < N; ++t)
            x[t] += cfg.noise_level * rec_rng.normal();
      }
      ds.recordings.push_back(std::move(rec));
    }
  }

  if (truth) {
    truth->ratings = plan.ratings;
    truth->high_count = 0;
    for (int r : plan.ratings) truth->high_count += r > 5;
    truth->low_count = static_cast<int>(plan.ratings.size()) - truth->high_count;
  }
  return ds;
}

}  // namespace neurotopo::data
