#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/topo/projection.hpp"
#include "neurotopo/util/io.hpp"

namespace neurotopo::topo {

// Electrode montage: labels plus unit-sphere positions, scalp modeled as the
// upper hemisphere with the vertex at (0,0,1).
struct ElectrodeLayout {
  std::vector<std::string> labels;
  std::vector<Vec3> positions;

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (labels.size() != positions.size())
      throw std::runtime_error("layout: label/position count mismatch");
    if (size() < 3)
      throw std::runtime_error("layout: need at least 3 electrodes, have " +
                               std::to_string(size()));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < size(); ++i) {
      if (!seen.insert(labels[i]).second)
        throw std::runtime_error("layout: duplicate electrode label '" +
                                 labels[i] + "'");
      const double n = positions[i].norm();
      if (std::abs(n - 1.0) > 1e-6)
        throw std::runtime_error("layout: electrode '" + labels[i] +
                                 "' is not on the unit sphere (|p| = " +
                                 std::to_string(n) + ")");
    }
  }
};

// Evenly spread synthetic montage: golden-angle spiral over the upper
// hemisphere, kept off the equator so every electrode projects strictly
// inside the disc.
inline ElectrodeLayout fibonacci_hemisphere(int count) {
  if (count < 3)
    throw std::invalid_argument("fibonacci_hemisphere: need at least 3 electrodes, got " +
                                std::to_string(count));
  ElectrodeLayout lay;
  const double golden_angle = 2.39996322972865332;  // pi * (3 - sqrt(5))
  const double z_min = 0.05;
  for (int i = 0; i < count; ++i) {
    const double z =
        1.0 - (1.0 - z_min) * (static_cast<double>(i) + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(i);
    char name[16];
    std::snprintf(name, sizeof(name), "E%03d", i);
    lay.labels.emplace_back(name);
    lay.positions.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  lay.validate();
  return lay;
}

// Text format, one electrode per line: "LABEL X Y Z". Blank lines and lines
// starting with '#' are ignored.
inline ElectrodeLayout load_layout(const std::filesystem::path& path) {
  const std::string text = io::read_text_file(path);
  ElectrodeLayout lay;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string label;
    double x, y, z;
    if (!(fields >> label >> x >> y >> z))
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'LABEL X Y Z', got '" + line + "'");
    std::string extra;
    if (fields >> extra)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": trailing content '" + extra + "'");
    lay.labels.push_back(label);
    lay.positions.push_back({x, y, z});
  }
  try {
    lay.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return lay;
}

inline void save_layout(const std::filesystem::path& path,
                        const ElectrodeLayout& lay) {
  lay.validate();
  std::string out;
  out.reserve(lay.size() * 64);
  for (std::size_t i = 0; i < lay.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof(line), "%s %.17g %.17g %.17g\n",
                  lay.labels[i].c_str(), lay.positions[i].x, lay.positions[i].y,
                  lay.positions[i].z);
    out += line;
  }
  io::write_file_atomic(path, out);
}

// Projects every electrode into the plane; errors carry the electrode label.
inline std::vector<Vec2> project_layout(const ElectrodeLayout& lay) {
  lay.validate();
  std::vector<Vec2> pts;
  pts.reserve(lay.size());
  for (std::size_t i = 0; i < lay.size(); ++i)
    pts.push_back(azimuthal_project(lay.positions[i],
                                    "electrode '" + lay.labels[i] + "'"));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec2 d = pts[i] - pts[j];
      if (dot(d, d) < 1e-16)
        throw std::runtime_error("layout: electrodes '" + lay.labels[i] +
                                 "' and '" + lay.labels[j] +
                                 "' project to the same point");
    }
  return pts;
}

}  // namespace neurotopo::topo
