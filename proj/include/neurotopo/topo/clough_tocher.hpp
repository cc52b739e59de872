#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/topo/delaunay.hpp"
#include "neurotopo/topo/projection.hpp"

namespace neurotopo::topo {

// Estimates per-vertex gradients from the 1-ring: least-squares plane through
// the neighbor differences. Exact for affine data, which is what gives the
// interpolant its linear precision.
inline std::vector<Vec2> estimate_vertex_gradients(
    const std::vector<Vec2>& points, const std::vector<Triangle>& triangles,
    std::span<const double> values) {
  if (values.size() != points.size())
    throw std::invalid_argument("gradients: got " + std::to_string(values.size()) +
                                " values for " + std::to_string(points.size()) +
                                " points");
  std::vector<std::vector<int>> ring(points.size());
  auto link = [&](int a, int b) {
    auto& r = ring[static_cast<std::size_t>(a)];
    if (std::find(r.begin(), r.end(), b) == r.end()) r.push_back(b);
  };
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e) {
      link(t.v[e], t.v[(e + 1) % 3]);
      link(t.v[(e + 1) % 3], t.v[e]);
    }

  std::vector<Vec2> grads(points.size());
  for (std::size_t v = 0; v < points.size(); ++v) {
    double axx = 0.0, axy = 0.0, ayy = 0.0, bx = 0.0, by = 0.0;
    for (int nb : ring[v]) {
      const Vec2 d = points[static_cast<std::size_t>(nb)] - points[v];
      const double df = values[static_cast<std::size_t>(nb)] - values[v];
      axx += d.x * d.x;
      axy += d.x * d.y;
      ayy += d.y * d.y;
      bx += df * d.x;
      by += df * d.y;
    }
    // regularize in case a rim vertex has a collinear ring
    const double reg = 1e-12 * std::max(1.0, axx + ayy);
    axx += reg;
    ayy += reg;
    const double det = axx * ayy - axy * axy;
    grads[v] = {(bx * ayy - by * axy) / det, (by * axx - bx * axy) / det};
  }
  return grads;
}

// Piecewise-cubic C1 interpolation over a triangulation. Each triangle is
// split at its barycenter into three cubic Bezier patches; corner ordinates
// come from values and estimated gradients, and the remaining interior
// ordinates are fixed by requiring the normal derivative across each exterior
// edge to vary linearly along it (the reduced element). That condition plus
// shared edge data makes the surface C1 across both sub-edges and
// macro-edges.
class HctSurface {
 public:
  HctSurface(std::vector<Vec2> points, std::vector<Triangle> triangles)
      : pts_(std::move(points)), tris_(std::move(triangles)) {
    if (tris_.empty())
      throw std::invalid_argument("interpolation surface: empty triangulation");
    geom_.resize(tris_.size());
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const Vec2 v0 = pts_[idx(t, 0)], v1 = pts_[idx(t, 1)], v2 = pts_[idx(t, 2)];
      TriGeom& g = geom_[t];
      const double det = (v1.x - v0.x) * (v2.y - v0.y) -
                         (v2.x - v0.x) * (v1.y - v0.y);
      if (std::abs(det) < 1e-14)
        throw std::invalid_argument("interpolation surface: triangle " +
                                    std::to_string(t) + " is degenerate");
      g.inv[0] = (v2.y - v0.y) / det;
      g.inv[1] = -(v2.x - v0.x) / det;
      g.inv[2] = -(v1.y - v0.y) / det;
      g.inv[3] = (v1.x - v0.x) / det;
      g.origin = v0;
      g.center = {(v0.x + v1.x + v2.x) / 3.0, (v0.y + v1.y + v2.y) / 3.0};

      const Vec2 corner[3] = {v0, v1, v2};
      for (int k = 0; k < 3; ++k) {
        const Vec2 a1 = corner[k], a2 = corner[(k + 1) % 3], a3 = g.center;
        const Vec2 n = perp(a2 - a1);  // normal to the exterior edge
        g.u[k][0] = dot(grad_bary(a1, a2, a3), n);
        g.u[k][1] = dot(grad_bary(a2, a3, a1), n);
        g.u[k][2] = dot(grad_bary(a3, a1, a2), n);
      }
    }
  }

  const std::vector<Vec2>& points() const { return pts_; }
  const std::vector<Triangle>& triangles() const { return tris_; }

  // Computes the patch ordinates for one set of vertex values.
  void fit(std::span<const double> values) {
    if (values.size() != pts_.size())
      throw std::invalid_argument("interpolation surface: got " +
                                  std::to_string(values.size()) + " values for " +
                                  std::to_string(pts_.size()) + " vertices");
    const auto grads = estimate_vertex_gradients(pts_, tris_, values);
    ord_.assign(tris_.size() * 30, 0.0);

    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const TriGeom& g = geom_[t];
      const Vec2 v[3] = {pts_[idx(t, 0)], pts_[idx(t, 1)], pts_[idx(t, 2)]};
      double f[3];
      Vec2 gr[3];
      for (int k = 0; k < 3; ++k) {
        f[k] = values[idx(t, k)];
        gr[k] = grads[idx(t, k)];
      }

      double* o = ord_.data() + t * 30;  // 3 sub-patches x 10 ordinates
      double c111[3];
      for (int k = 0; k < 3; ++k) {
        const int i = k, j = (k + 1) % 3;
        double* c = o + k * 10;
        c[O300] = f[i];
        c[O030] = f[j];
        c[O210] = f[i] + dot(gr[i], v[j] - v[i]) / 3.0;
        c[O120] = f[j] + dot(gr[j], v[i] - v[j]) / 3.0;
        c[O201] = f[i] + dot(gr[i], g.center - v[i]) / 3.0;
        c[O021] = f[j] + dot(gr[j], g.center - v[j]) / 3.0;
        // linear normal derivative along the exterior edge pins the middle
        const double u1 = g.u[k][0], u2 = g.u[k][1], u3 = g.u[k][2];
        c111[k] = (0.5 * (u1 * (c[O300] + c[O120]) + u2 * (c[O210] + c[O030]) +
                          u3 * (c[O201] + c[O021])) -
                   u1 * c[O210] - u2 * c[O120]) /
                  u3;
        c[O111] = c111[k];
      }
      // interior edge ordinates adjacent to the barycenter, then the center
      double p[3];
      for (int k = 0; k < 3; ++k)
        p[k] = (c111[k] + c111[(k + 1) % 3] + o[k * 10 + O021]) / 3.0;
      const double q = (p[0] + p[1] + p[2]) / 3.0;
      for (int k = 0; k < 3; ++k) {
        o[k * 10 + O012] = p[k];
        o[k * 10 + O102] = p[(k + 2) % 3];
        o[k * 10 + O003] = q;
      }
    }
    fitted_ = true;
  }

  void barycentric(std::size_t t, const Vec2& p, double out[3]) const {
    const TriGeom& g = geom_[t];
    const double dx = p.x - g.origin.x, dy = p.y - g.origin.y;
    out[1] = g.inv[0] * dx + g.inv[1] * dy;
    out[2] = g.inv[2] * dx + g.inv[3] * dy;
    out[0] = 1.0 - out[1] - out[2];
  }

  // Lowest-index triangle containing p (tolerant boundaries), or -1.
  int locate(const Vec2& p) const {
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      double b[3];
      barycentric(t, p, b);
      if (b[0] >= -1e-12 && b[1] >= -1e-12 && b[2] >= -1e-12)
        return static_cast<int>(t);
    }
    return -1;
  }

  double evaluate(std::size_t t, const double bary[3]) const {
    if (!fitted_)
      throw std::logic_error("interpolation surface: evaluate before fit");
    // sub-patch whose exterior edge faces the smallest coordinate
    int m = 0;
    if (bary[1] < bary[m]) m = 1;
    if (bary[2] < bary[m]) m = 2;
    const int k = (m + 1) % 3;
    const double s1 = bary[k] - bary[m];
    const double s2 = bary[(k + 1) % 3] - bary[m];
    const double s3 = 3.0 * bary[m];
    const double* c = ord_.data() + t * 30 + k * 10;

    const double s1s1 = s1 * s1, s2s2 = s2 * s2, s3s3 = s3 * s3;
    return c[O300] * s1s1 * s1 + c[O030] * s2s2 * s2 + c[O003] * s3s3 * s3 +
           3.0 * (c[O210] * s1s1 * s2 + c[O120] * s1 * s2s2 +
                  c[O201] * s1s1 * s3 + c[O021] * s2s2 * s3 +
                  c[O102] * s1 * s3s3 + c[O012] * s2 * s3s3) +
           6.0 * c[O111] * s1 * s2 * s3;
  }

  // Locate-and-evaluate; throws when p is outside the triangulated hull.
  double evaluate_at(const Vec2& p) const {
    const int t = locate(p);
    if (t < 0)
      throw std::invalid_argument("interpolation surface: point (" +
                                  std::to_string(p.x) + ", " + std::to_string(p.y) +
                                  ") lies outside the triangulated region");
    double b[3];
    barycentric(static_cast<std::size_t>(t), p, b);
    return evaluate(static_cast<std::size_t>(t), b);
  }

 private:
  // ordinate layout within a sub-patch, by exponents of (s1,s2,s3)
  enum Ord {
    O300 = 0, O210 = 1, O120 = 2, O030 = 3, O201 = 4,
    O111 = 5, O021 = 6, O102 = 7, O012 = 8, O003 = 9
  };

  struct TriGeom {
    double inv[4];        // maps (p - origin) to (bary1, bary2)
    Vec2 origin;
    Vec2 center;          // split point (barycenter)
    double u[3][3];       // per sub-patch: normal-direction weights
  };

  static Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

  // Gradient of the barycentric coordinate that is 1 at a and 0 at b, c.
  static Vec2 grad_bary(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 n = perp(c - b);
    const double d = dot(n, a - b);
    return {n.x / d, n.y / d};
  }

  std::size_t idx(std::size_t t, int corner) const {
    return static_cast<std::size_t>(tris_[t].v[corner]);
  }

  std::vector<Vec2> pts_;
  std::vector<Triangle> tris_;
  std::vector<TriGeom> geom_;
  std::vector<double> ord_;
  bool fitted_ = false;
};

}  // namespace neurotopo::topo
