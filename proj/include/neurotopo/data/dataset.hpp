#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neurotopo/signal/time_series.hpp"
#include "neurotopo/topo/layout.hpp"
#include "neurotopo/util/io.hpp"

namespace neurotopo::data {

struct Recording {
  int user_id = 0;
  int song_id = 0;
  int enjoyment_rating = 0;    // 1-9
  int familiarity_rating = 0;  // 0 when absent, else 1-9
  signal::TimeSeries eeg;
};

// A dataset directory: manifest.json + layout file + one .eegr blob per
// recording. Channel count and sample rate are uniform across the set.
struct Dataset {
  std::string name;
  std::size_t channels = 0;
  double sample_rate_hz = 0.0;
  topo::ElectrodeLayout layout;
  std::vector<Recording> recordings;
};

inline constexpr char kEegrMagic[4] = {'E', 'E', 'G', 'R'};
inline constexpr std::uint16_t kEegrVersion = 1;

// Blob layout: "EEGR", version u16, channels u32, samples u64, then
// channel-major float32, all little-endian.
inline void write_eegr(const std::filesystem::path& path,
                       const signal::TimeSeries& ts) {
  io::ByteWriter wtr;
  wtr.raw(kEegrMagic, 4);
  wtr.u16(kEegrVersion);
  wtr.u32(static_cast<std::uint32_t>(ts.channels));
  wtr.u64(ts.samples);
  wtr.bytes.reserve(wtr.bytes.size() + ts.data.size() * 4);
  for (double v : ts.data) wtr.f32(static_cast<float>(v));
  io::write_file_atomic(path, wtr.bytes);
}

inline signal::TimeSeries read_eegr(const std::filesystem::path& path,
                                    double sample_rate_hz) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::ByteReader rdr(raw, path.string());
  char magic[4];
  rdr.raw(magic, 4, "magic");
  if (std::string(magic, 4) != std::string(kEegrMagic, 4))
    throw std::runtime_error(path.string() + ": not an EEG blob (bad magic)");
  const std::uint16_t version = rdr.u16("version");
  if (version != kEegrVersion)
    throw std::runtime_error(path.string() + ": unsupported blob version " +
                             std::to_string(version));
  const std::uint32_t channels = rdr.u32("channels");
  const std::uint64_t samples = rdr.u64("samples");
  if (channels == 0 || samples == 0)
    throw std::runtime_error(path.string() + ": empty blob");
  signal::TimeSeries ts(channels, samples, sample_rate_hz);
  for (double& v : ts.data) v = static_cast<double>(rdr.f32("samples"));
  return ts;
}

namespace detail {

inline std::string blob_name(int user, int song) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "rec_u%03d_s%03d.eegr", user, song);
  return buf;
}

inline void check_rating(int rating, const std::string& where) {
  if (rating < 1 || rating > 9)
    throw std::runtime_error(where + ": enjoyment rating " +
                             std::to_string(rating) + " outside 1-9");
}

}  // namespace detail

// Writes layout, blobs, and manifest under dir (created if needed).
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (ds.layout.labels.size() != ds.channels)
    throw std::invalid_argument("dataset layout has " +
                                std::to_string(ds.layout.labels.size()) +
                                " electrodes for " + std::to_string(ds.channels) +
                                " channels");
  fs::create_directories(dir);
  const std::string layout_file = "layout.txt";
  topo::save_layout(dir / layout_file, ds.layout);

  nlohmann::json manifest;
  manifest["name"] = ds.name;
  manifest["channels"] = ds.channels;
  manifest["sample_rate_hz"] = ds.sample_rate_hz;
  manifest["layout"] = layout_file;
  manifest["recordings"] = nlohmann::json::array();
  for (const Recording& rec : ds.recordings) {
    detail::check_rating(rec.enjoyment_rating,
                         "recording (user " + std::to_string(rec.user_id) +
                             ", song " + std::to_string(rec.song_id) + ")");
    if (rec.eeg.channels != ds.channels ||
        rec.eeg.sample_rate_hz != ds.sample_rate_hz)
      throw std::invalid_argument("recording (user " + std::to_string(rec.user_id) +
                                  ", song " + std::to_string(rec.song_id) +
                                  ") does not match dataset shape/rate");
    const std::string blob = detail::blob_name(rec.user_id, rec.song_id);
    write_eegr(dir / blob, rec.eeg);
    nlohmann::json entry;
    entry["user"] = rec.user_id;
    entry["song"] = rec.song_id;
    entry["path"] = blob;
    entry["enjoyment"] = rec.enjoyment_rating;
    if (rec.familiarity_rating != 0) entry["familiarity"] = rec.familiarity_rating;
    entry["sha256"] = io::sha256_of_file(dir / blob);
    manifest["recordings"].push_back(entry);
  }
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

// Loads and fully validates a dataset directory: manifest fields, blob
// checksums, shapes, and rating ranges. Errors name the file and field.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw std::runtime_error(manifest_path.string() + ": manifest not found");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  try {
    ds.name = manifest.at("name").get<std::string>();
    ds.channels = manifest.at("channels").get<std::size_t>();
    ds.sample_rate_hz = manifest.at("sample_rate_hz").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(manifest_path.string() + ": " + e.what());
  }
  if (ds.channels == 0 || ds.sample_rate_hz <= 0.0)
    throw std::runtime_error(manifest_path.string() +
                             ": channels/sample_rate_hz must be positive");

  const std::string layout_file = manifest.at("layout").get<std::string>();
  ds.layout = topo::load_layout(dir / layout_file);
  if (ds.layout.labels.size() != ds.channels)
    throw std::runtime_error((dir / layout_file).string() + ": " +
                             std::to_string(ds.layout.labels.size()) +
                             " electrodes for " + std::to_string(ds.channels) +
                             "-channel dataset");

  std::set<std::pair<int, int>> seen;
  for (const auto& entry : manifest.at("recordings")) {
    Recording rec;
    rec.user_id = entry.at("user").get<int>();
    rec.song_id = entry.at("song").get<int>();
    rec.enjoyment_rating = entry.at("enjoyment").get<int>();
    rec.familiarity_rating = entry.value("familiarity", 0);
    const std::string blob = entry.at("path").get<std::string>();
    const std::string where = manifest_path.string() + ": recording \"" + blob + "\"";
    detail::check_rating(rec.enjoyment_rating, where + " field enjoyment");
    if (rec.familiarity_rating != 0)
      detail::check_rating(rec.familiarity_rating, where + " field familiarity");
    if (!seen.insert({rec.user_id, rec.song_id}).second)
      throw std::runtime_error(where + ": duplicate (user " +
                               std::to_string(rec.user_id) + ", song " +
                               std::to_string(rec.song_id) + ") entry");

    const fs::path blob_path = dir / blob;
    if (!fs::exists(blob_path))
      throw std::runtime_error(blob_path.string() + ": blob missing");
    const std::string digest = io::sha256_of_file(blob_path);
    const std::string expected = entry.at("sha256").get<std::string>();
    if (digest != expected)
      throw std::runtime_error(blob_path.string() + ": sha256 mismatch (manifest " +
                               expected + ", file " + digest + ")");
    rec.eeg = read_eegr(blob_path, ds.sample_rate_hz);
    if (rec.eeg.channels != ds.channels)
      throw std::runtime_error(blob_path.string() + ": field channels is " +
                               std::to_string(rec.eeg.channels) + ", dataset has " +
                               std::to_string(ds.channels));
    ds.recordings.push_back(std::move(rec));
  }
  return ds;
}

struct ChunkSpec {
  double duration_s = 5.0;
  double hop_s = 5.0;  // equal to duration: non-overlapping tiling
};

// A windowed slice of one recording, carrying its provenance.
struct Chunk {
  int user_id = 0;
  int song_id = 0;
  int index = 0;
  signal::TimeSeries eeg;
};

inline std::vector<Chunk> chunk_recording(const Recording& rec,
                                          const ChunkSpec& spec) {
  if (spec.duration_s <= 0.0 || spec.hop_s <= 0.0)
    throw std::invalid_argument("chunk duration and hop must be positive");
  const double fs = rec.eeg.sample_rate_hz;
  const std::size_t dur = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  const std::size_t hop = static_cast<std::size_t>(std::llround(spec.hop_s * fs));
  if (dur == 0 || hop == 0)
    throw std::invalid_argument("chunk duration/hop shorter than one sample");
  if (rec.eeg.samples < dur)
    throw std::invalid_argument(
        "recording (user " + std::to_string(rec.user_id) + ", song " +
        std::to_string(rec.song_id) + ") has " + std::to_string(rec.eeg.samples) +
        " samples, shorter than one " + std::to_string(dur) + "-sample chunk");

  const std::size_t count = (rec.eeg.samples - dur) / hop + 1;
  std::vector<Chunk> chunks;
  chunks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Chunk ch;
    ch.user_id = rec.user_id;
    ch.song_id = rec.song_id;
    ch.index = static_cast<int>(i);
    ch.eeg = signal::TimeSeries(rec.eeg.channels, dur, fs);
    const std::size_t start = i * hop;
    for (std::size_t c = 0; c < rec.eeg.channels; ++c)
      std::copy(rec.eeg.channel(c) + start, rec.eeg.channel(c) + start + dur,
                ch.eeg.channel(c));
    chunks.push_back(std::move(ch));
  }
  return chunks;
}

}  // namespace neurotopo::data
