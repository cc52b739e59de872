#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "neurotopo/topo/projection.hpp"

namespace neurotopo::topo {

// Vertex indices in counter-clockwise order, rotated so the smallest comes
// first; the triangle list itself is sorted, so output is a canonical form.
struct Triangle {
  std::array<int, 3> v{};

  bool operator==(const Triangle&) const = default;
  bool operator<(const Triangle& o) const { return v < o.v; }
};

namespace detail {

// Twice the signed area of (a,b,c); positive when counter-clockwise.
inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Positive when d lies strictly inside the circumcircle of CCW (a,b,c).
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c,
                       const Vec2& d) {
  const double ax = a.x - d.x, ay = a.y - d.y;
  const double bx = b.x - d.x, by = b.y - d.y;
  const double cx = c.x - d.x, cy = c.y - d.y;
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

constexpr double kPredicateTol = 1e-9;

}  // namespace detail

// Bowyer-Watson with a strict in-circle test: points exactly on a circle do
// not evict the triangle, which pins down the co-circular case. Insertion in
// index order plus a canonicalization pass make the result deterministic; for
// a co-circular quad the kept diagonal is the one containing the lowest
// vertex index.
inline std::vector<Triangle> delaunay_triangulate(const std::vector<Vec2>& points) {
  using detail::incircle;
  using detail::kPredicateTol;
  using detail::orient2d;

  const int n = static_cast<int>(points.size());
  if (n < 3)
    throw std::invalid_argument("delaunay: need at least 3 points, got " +
                                std::to_string(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = points[i] - points[j];
      if (dot(d, d) < 1e-16)
        throw std::invalid_argument("delaunay: points " + std::to_string(i) +
                                    " and " + std::to_string(j) + " coincide");
    }

  // Super-triangle comfortably containing everything.
  double xmin = points[0].x, xmax = xmin, ymin = points[0].y, ymax = ymin;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double cx = (xmin + xmax) / 2.0, cy = (ymin + ymax) / 2.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-6});
  std::vector<Vec2> pts = points;
  pts.push_back({cx - 20.0 * span, cy - 10.0 * span});
  pts.push_back({cx + 20.0 * span, cy - 10.0 * span});
  pts.push_back({cx, cy + 20.0 * span});

  struct Tri {
    int a, b, c;
    bool alive;
  };
  std::vector<Tri> tris;
  tris.push_back({n, n + 1, n + 2, true});

  for (int ip = 0; ip < n; ++ip) {
    const Vec2& p = pts[ip];

    std::vector<int> bad;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      if (incircle(pts[tris[t].a], pts[tris[t].b], pts[tris[t].c], p) >
          kPredicateTol)
        bad.push_back(t);
    }

    // Cavity boundary: directed edges of evicted triangles that appear once.
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // key -> directed
    auto note_edge = [&](int u, int v) {
      const auto key = std::minmax(u, v);
      auto it = edges.find(key);
      if (it == edges.end())
        edges.emplace(key, std::make_pair(u, v));
      else
        it->second = {-1, -1};  // interior to the cavity
    };
    for (int t : bad) {
      note_edge(tris[t].a, tris[t].b);
      note_edge(tris[t].b, tris[t].c);
      note_edge(tris[t].c, tris[t].a);
      tris[t].alive = false;
    }
    for (const auto& [key, dir] : edges) {
      if (dir.first < 0) continue;
      int u = dir.first, v = dir.second;
      if (orient2d(p, pts[u], pts[v]) < 0.0) std::swap(u, v);
      tris.push_back({ip, u, v, true});
    }
  }

  std::vector<Triangle> out;
  for (const auto& t : tris) {
    if (!t.alive || t.a >= n || t.b >= n || t.c >= n) continue;
    Triangle tri{{t.a, t.b, t.c}};
    // rotate so the smallest index leads, preserving orientation
    while (tri.v[0] != std::min({tri.v[0], tri.v[1], tri.v[2]}))
      tri.v = {tri.v[1], tri.v[2], tri.v[0]};
    out.push_back(tri);
  }
  if (out.empty())
    throw std::invalid_argument(
        "delaunay: all points are collinear; no triangulation exists");

  // Canonicalize co-circular quads: if the alternative diagonal of an exactly
  // co-circular pair contains a smaller vertex index, flip to it.
  for (int pass = 0; pass < 10 * n; ++pass) {
    std::sort(out.begin(), out.end());
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (int t = 0; t < static_cast<int>(out.size()); ++t)
      for (int e = 0; e < 3; ++e)
        edge_tris[std::minmax(out[t].v[e], out[t].v[(e + 1) % 3])].push_back(t);

    bool flipped = false;
    for (const auto& [edge, owners] : edge_tris) {
      if (owners.size() != 2) continue;
      const Triangle& t1 = out[owners[0]];
      const Triangle& t2 = out[owners[1]];
      auto third = [&](const Triangle& t) {
        for (int vv : t.v)
          if (vv != edge.first && vv != edge.second) return vv;
        return -1;
      };
      const int w1 = third(t1), w2 = third(t2);
      const double det =
          incircle(pts[t1.v[0]], pts[t1.v[1]], pts[t1.v[2]], pts[w2]);
      if (std::abs(det) > kPredicateTol) continue;  // not co-circular
      const int quad_min = std::min({edge.first, edge.second, w1, w2});
      if (quad_min == edge.first || quad_min == edge.second) continue;
      // flip edge (u,v) -> (w1,w2); orientations follow from the old pair
      int u = edge.first, v = edge.second;
      if (orient2d(pts[u], pts[v], pts[w1]) < 0.0) std::swap(u, v);
      Triangle n1{{w1, u, w2}};
      Triangle n2{{w2, v, w1}};
      for (Triangle* tp : {&n1, &n2})
        while (tp->v[0] != std::min({tp->v[0], tp->v[1], tp->v[2]}))
          tp->v = {tp->v[1], tp->v[2], tp->v[0]};
      out[owners[0]] = n1;
      out[owners[1]] = n2;
      flipped = true;
      break;  // adjacency is stale; rebuild
    }
    if (!flipped) break;
  }

  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace neurotopo::topo
