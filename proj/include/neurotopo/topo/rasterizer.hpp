#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/topo/clough_tocher.hpp"
#include "neurotopo/topo/delaunay.hpp"
#include "neurotopo/topo/projection.hpp"

namespace neurotopo::topo {

// Inclusive sampling grid over a bounding box: column c maps to
// x0 + c*dx with the last column landing exactly on the right edge, and
// row 0 corresponds to the minimum y.
struct GridSpec {
  int width = 0, height = 0;
  double x0 = 0.0, y0 = 0.0;
  double dx = 0.0, dy = 0.0;

  Vec2 pixel_center(int row, int col) const {
    return {x0 + dx * static_cast<double>(col), y0 + dy * static_cast<double>(row)};
  }
};

inline GridSpec grid_over_points(const std::vector<Vec2>& pts, int resolution) {
  if (resolution < 2)
    throw std::invalid_argument("raster grid: resolution must be at least 2, got " +
                                std::to_string(resolution));
  if (pts.empty()) throw std::invalid_argument("raster grid: no points");
  double xmin = pts[0].x, xmax = xmin, ymin = pts[0].y, ymax = ymin;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  GridSpec g;
  g.width = g.height = resolution;
  g.x0 = xmin;
  g.y0 = ymin;
  g.dx = (xmax - xmin) / static_cast<double>(resolution - 1);
  g.dy = (ymax - ymin) / static_cast<double>(resolution - 1);
  return g;
}

// Precomputed pixel -> (triangle, barycentric) map so one triangulation can
// rasterize many value fields. Pixels outside the hull are masked out.
class RasterPlan {
 public:
  RasterPlan(const HctSurface& surface, const GridSpec& grid) : grid_(grid) {
    const std::size_t n =
        static_cast<std::size_t>(grid_.width) * static_cast<std::size_t>(grid_.height);
    tri_.assign(n, -1);
    bary_.assign(n * 3, 0.0);
    mask_.assign(n, 0);
    for (int r = 0; r < grid_.height; ++r) {
      for (int c = 0; c < grid_.width; ++c) {
        const std::size_t px = static_cast<std::size_t>(r) * grid_.width + c;
        const int t = surface.locate(grid_.pixel_center(r, c));
        if (t < 0) continue;
        tri_[px] = t;
        mask_[px] = 1;
        surface.barycentric(static_cast<std::size_t>(t), grid_.pixel_center(r, c),
                            &bary_[px * 3]);
      }
    }
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  // Evaluates the fitted surface at every covered pixel; masked pixels get 0.
  void render(const HctSurface& surface, std::span<double> out) const {
    if (out.size() != tri_.size())
      throw std::invalid_argument("raster render: output buffer holds " +
                                  std::to_string(out.size()) + " pixels, grid needs " +
                                  std::to_string(tri_.size()));
    for (std::size_t px = 0; px < tri_.size(); ++px)
      out[px] = mask_[px]
                    ? surface.evaluate(static_cast<std::size_t>(tri_[px]), &bary_[px * 3])
                    : 0.0;
  }

 private:
  GridSpec grid_;
  std::vector<int> tri_;
  std::vector<double> bary_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace neurotopo::topo
