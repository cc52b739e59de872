#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neurotopo/eval/experiments.hpp"
#include "neurotopo/topo/topomap.hpp"
#include "neurotopo/util/io.hpp"

// On-disk layout of a featurized dataset: one image file per chunk plus an
// index.json carrying provenance and ratings, so experiment runs need only
// this directory.
//
// Image file: magic "NTIM", version u16, bands/height/width u32 little-endian,
// then bands*height*width float32 pixels plane-major, then height*width mask
// bytes (1 = inside the head outline).

namespace neurotopo::cli {

inline constexpr char kImageMagic[4] = {'N', 'T', 'I', 'M'};
inline constexpr std::uint16_t kImageVersion = 1;

inline void write_image_file(const std::filesystem::path& path,
                             const topo::TopographicImage& img) {
  io::ByteWriter w;
  w.raw(kImageMagic, 4);
  w.u16(kImageVersion);
  w.u32(static_cast<std::uint32_t>(img.bands));
  w.u32(static_cast<std::uint32_t>(img.height));
  w.u32(static_cast<std::uint32_t>(img.width));
  for (double v : img.pixels) w.f32(static_cast<float>(v));
  w.raw(img.mask.data(), img.mask.size());
  io::write_file_atomic(path, w.bytes);
}

inline topo::TopographicImage read_image_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::ByteReader r(raw, path.string());
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::string(magic, 4) != std::string(kImageMagic, 4))
    throw std::runtime_error(path.string() + ": not an image tensor file");
  const std::uint16_t version = r.u16("version");
  if (version != kImageVersion)
    throw std::runtime_error(path.string() + ": unsupported image file version " +
                             std::to_string(version));
  topo::TopographicImage img;
  img.bands = static_cast<int>(r.u32("bands"));
  img.height = static_cast<int>(r.u32("height"));
  img.width = static_cast<int>(r.u32("width"));
  if (img.bands < 1 || img.height < 1 || img.width < 1)
    throw std::runtime_error(path.string() + ": bad image dimensions");
  const std::size_t npx = img.plane_size();
  img.pixels.resize(npx * static_cast<std::size_t>(img.bands));
  for (double& v : img.pixels) v = r.f32("pixels");
  img.mask.resize(npx);
  r.raw(img.mask.data(), npx, "mask");
  return img;
}

struct FeatureEntry {
  int user = 0, song = 0, chunk = 0;
  int enjoyment = 0, familiarity = 0;  // familiarity 0 = not recorded
  std::string path;                    // relative to the feature directory
};

struct FeatureIndex {
  int width = 0, height = 0, bands = 0;
  double chunk_s = 0.0;
  double sample_rate_hz = 0.0;
  std::vector<std::string> band_names;
  std::vector<FeatureEntry> entries;
};

inline void save_feature_index(const std::filesystem::path& dir,
                               const FeatureIndex& index) {
  nlohmann::json j;
  j["width"] = index.width;
  j["height"] = index.height;
  j["bands"] = index.bands;
  j["chunk_s"] = index.chunk_s;
  j["sample_rate_hz"] = index.sample_rate_hz;
  j["band_names"] = index.band_names;
  j["chunks"] = nlohmann::json::array();
  for (const FeatureEntry& e : index.entries) {
    nlohmann::json row;
    row["user"] = e.user;
    row["song"] = e.song;
    row["chunk"] = e.chunk;
    row["enjoyment"] = e.enjoyment;
    if (e.familiarity != 0) row["familiarity"] = e.familiarity;
    row["path"] = e.path;
    j["chunks"].push_back(std::move(row));
  }
  io::write_file_atomic(dir / "index.json", j.dump(2) + "\n");
}

inline FeatureIndex load_feature_index(const std::filesystem::path& dir) {
  const std::filesystem::path path = dir / "index.json";
  if (!std::filesystem::exists(path))
    throw std::runtime_error("feature index missing: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  FeatureIndex index;
  try {
    index.width = j.at("width").get<int>();
    index.height = j.at("height").get<int>();
    index.bands = j.at("bands").get<int>();
    index.chunk_s = j.at("chunk_s").get<double>();
    index.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    index.band_names = j.at("band_names").get<std::vector<std::string>>();
    for (const auto& row : j.at("chunks")) {
      FeatureEntry e;
      e.user = row.at("user").get<int>();
      e.song = row.at("song").get<int>();
      e.chunk = row.at("chunk").get<int>();
      e.enjoyment = row.at("enjoyment").get<int>();
      if (row.contains("familiarity")) e.familiarity = row.at("familiarity").get<int>();
      e.path = row.at("path").get<std::string>();
      index.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (index.width < 1 || index.height < 1 || index.bands < 1)
    throw std::runtime_error(path.string() + ": bad image dimensions");
  return index;
}

// Reads every image listed in the index into an experiment-ready dataset.
inline eval::LabeledDataset load_feature_dataset(const std::filesystem::path& dir) {
  const FeatureIndex index = load_feature_index(dir);
  eval::LabeledDataset data;
  data.width = index.width;
  data.height = index.height;
  data.bands = index.bands;
  data.images.reserve(index.entries.size() * data.image_size());
  for (const FeatureEntry& e : index.entries) {
    const topo::TopographicImage img = read_image_file(dir / e.path);
    if (img.width != index.width || img.height != index.height ||
        img.bands != index.bands)
      throw std::runtime_error(e.path + ": image shape does not match the index");
    data.images.insert(data.images.end(), img.pixels.begin(), img.pixels.end());
    data.user_ids.push_back(e.user);
    data.song_ids.push_back(e.song);
    data.ratings[{e.user, e.song}] = e.enjoyment;
  }
  return data;
}

}  // namespace neurotopo::cli
