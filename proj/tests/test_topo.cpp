#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <map>
#include <set>
#include <vector>

#include "neurotopo/topo/clough_tocher.hpp"
#include "neurotopo/topo/delaunay.hpp"
#include "neurotopo/topo/layout.hpp"
#include "neurotopo/topo/projection.hpp"
#include "neurotopo/topo/rasterizer.hpp"
#include "neurotopo/topo/topomap.hpp"
#include "neurotopo/util/io.hpp"
#include "neurotopo/util/rng.hpp"

using namespace neurotopo;
using namespace neurotopo::topo;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

// shoelace area of the convex hull (monotone chain), oracle for coverage
double hull_area(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  double area = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2& a = h[i];
    const Vec2& b = h[(i + 1) % h.size()];
    area += a.x * b.y - b.x * a.y;
  }
  return area / 2.0;
}

double tri_area(const std::vector<Vec2>& pts, const Triangle& t) {
  const Vec2 &a = pts[t.v[0]], &b = pts[t.v[1]], &c = pts[t.v[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

}  // namespace

TEST_CASE("azimuthal projection preserves arc distance from the apex") {
  REQUIRE_THAT(azimuthal_project({0.0, 0.0, 1.0}).x, WithinAbs(0.0, 1e-15));
  const Vec2 e = azimuthal_project({1.0, 0.0, 0.0});
  REQUIRE_THAT(e.x, WithinAbs(kPi / 2.0, 1e-12));
  REQUIRE_THAT(e.y, WithinAbs(0.0, 1e-12));
  const Vec2 ny = azimuthal_project({0.0, 1.0, 0.0});
  REQUIRE_THAT(ny.x, WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(ny.y, WithinAbs(kPi / 2.0, 1e-12));

  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const double z = rng.uniform(0.02, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double r = std::sqrt(1.0 - z * z);
    const Vec3 p{r * std::cos(phi), r * std::sin(phi), z};
    const Vec2 q = azimuthal_project(p);
    REQUIRE_THAT(std::sqrt(q.x * q.x + q.y * q.y),
                 WithinAbs(std::acos(z), 1e-12));
  }
}

TEST_CASE("azimuthal projection rejects bad points") {
  REQUIRE_THROWS_WITH(azimuthal_project({0.0, 0.0, 2.0}),
                      ContainsSubstring("unit sphere"));
  REQUIRE_THROWS_WITH(azimuthal_project({0.0, 0.0, -1.0}, "electrode 'Oz'"),
                      ContainsSubstring("antipode") &&
                          ContainsSubstring("Oz"));
}

TEST_CASE("fibonacci hemisphere montage is valid and projects distinctly") {
  for (int n : {3, 16, 64, 125}) {
    const auto lay = fibonacci_hemisphere(n);
    REQUIRE(lay.size() == static_cast<std::size_t>(n));
    lay.validate();
    for (const auto& p : lay.positions) {
      REQUIRE(p.z >= 0.05 - 1e-12);
      REQUIRE(p.z < 1.0);
    }
    REQUIRE_NOTHROW(project_layout(lay));
  }
  REQUIRE_THROWS_WITH(fibonacci_hemisphere(2), ContainsSubstring("at least 3"));
}

TEST_CASE("layout file round-trips exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "neurotopo_layout_test";
  fs::create_directories(dir);
  const auto lay = fibonacci_hemisphere(32);
  save_layout(dir / "montage.txt", lay);
  const auto back = load_layout(dir / "montage.txt");
  REQUIRE(back.labels == lay.labels);
  for (std::size_t i = 0; i < lay.size(); ++i) {
    REQUIRE(back.positions[i].x == lay.positions[i].x);
    REQUIRE(back.positions[i].y == lay.positions[i].y);
    REQUIRE(back.positions[i].z == lay.positions[i].z);
  }
  fs::remove_all(dir);
}

TEST_CASE("layout loader reports the offending line") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "neurotopo_layout_err";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "bad.txt",
                        std::string("# comment\nA1 0 0 1\nA2 0.6 0.8\n"));
  REQUIRE_THROWS_WITH(load_layout(dir / "bad.txt"),
                      ContainsSubstring(":3") &&
                          ContainsSubstring("LABEL X Y Z"));
  io::write_file_atomic(dir / "dup.txt",
                        std::string("A1 0 0 1\nA1 0.6 0 0.8\nA3 0 0.6 0.8\n"));
  REQUIRE_THROWS_WITH(load_layout(dir / "dup.txt"),
                      ContainsSubstring("duplicate") && ContainsSubstring("A1"));
  io::write_file_atomic(dir / "offsphere.txt",
                        std::string("A1 0 0 1\nA2 0.6 0 0.8\nA3 0 0.9 0.8\n"));
  REQUIRE_THROWS_WITH(load_layout(dir / "offsphere.txt"),
                      ContainsSubstring("unit sphere") && ContainsSubstring("A3"));
  fs::remove_all(dir);
}

TEST_CASE("delaunay handles the minimal and degenerate cases") {
  const std::vector<Vec2> tri = {{0, 0}, {1, 0}, {0, 1}};
  const auto tris = delaunay_triangulate(tri);
  REQUIRE(tris.size() == 1);
  REQUIRE(tris[0].v == std::array<int, 3>{0, 1, 2});

  REQUIRE_THROWS_WITH(delaunay_triangulate({{0, 0}, {1, 1}}),
                      ContainsSubstring("at least 3"));
  REQUIRE_THROWS_WITH(delaunay_triangulate({{0, 0}, {1, 1}, {2, 2}, {3, 3}}),
                      ContainsSubstring("collinear"));
  REQUIRE_THROWS_WITH(delaunay_triangulate({{0, 0}, {1, 0}, {0, 0}}),
                      ContainsSubstring("coincide"));
}

TEST_CASE("delaunay resolves the co-circular square toward the lowest index") {
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto tris = delaunay_triangulate(square);
  REQUIRE(tris.size() == 2);
  // the kept diagonal is 0-2, and output is canonical (CCW, sorted)
  REQUIRE(tris[0].v == std::array<int, 3>{0, 1, 2});
  REQUIRE(tris[1].v == std::array<int, 3>{0, 2, 3});

  // rotating the square's labels must still pick the diagonal through 0
  const std::vector<Vec2> rotated = {{1, 0}, {1, 1}, {0, 1}, {0, 0}};
  const auto tris2 = delaunay_triangulate(rotated);
  REQUIRE(tris2.size() == 2);
  std::set<std::pair<int, int>> edges;
  for (const auto& t : tris2)
    for (int e = 0; e < 3; ++e)
      edges.insert(std::minmax(t.v[e], t.v[(e + 1) % 3]));
  REQUIRE(edges.count({0, 2}) == 1);  // diagonal contains vertex 0
  REQUIRE(edges.count({1, 3}) == 0);
}

TEST_CASE("delaunay satisfies the empty-circumcircle property on a montage") {
  const auto pts = project_layout(fibonacci_hemisphere(64));
  const auto tris = delaunay_triangulate(pts);

  // brute force: no point strictly inside any triangle's circumcircle
  for (const auto& t : tris) {
    REQUIRE(tri_area(pts, t) > 0.0);  // CCW
    for (int p = 0; p < static_cast<int>(pts.size()); ++p) {
      if (p == t.v[0] || p == t.v[1] || p == t.v[2]) continue;
      const double det = topo::detail::incircle(pts[t.v[0]], pts[t.v[1]],
                                                pts[t.v[2]], pts[p]);
      INFO("triangle " << t.v[0] << "," << t.v[1] << "," << t.v[2]
                       << " vs point " << p);
      REQUIRE(det <= 1e-9);
    }
  }

  // triangles tile the convex hull exactly
  double covered = 0.0;
  for (const auto& t : tris) covered += tri_area(pts, t);
  REQUIRE_THAT(covered, WithinAbs(hull_area(pts), 1e-9));

  // determinism
  REQUIRE(delaunay_triangulate(pts) == tris);
}

TEST_CASE("interpolation reproduces vertex values and affine fields") {
  const auto pts = project_layout(fibonacci_hemisphere(40));
  const auto tris = delaunay_triangulate(pts);
  HctSurface surf(pts, tris);

  std::vector<double> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    values[i] = 2.0 + 3.0 * pts[i].x - 1.5 * pts[i].y;
  surf.fit(values);

  for (std::size_t i = 0; i < pts.size(); ++i)
    REQUIRE_THAT(surf.evaluate_at(pts[i]), WithinAbs(values[i], 1e-10));

  // affine data is reconstructed exactly everywhere inside the hull
  Rng rng(123);
  int tested = 0;
  while (tested < 500) {
    const Vec2 p{rng.uniform(-1.6, 1.6), rng.uniform(-1.6, 1.6)};
    if (surf.locate(p) < 0) continue;
    REQUIRE_THAT(surf.evaluate_at(p),
                 WithinAbs(2.0 + 3.0 * p.x - 1.5 * p.y, 1e-9));
    ++tested;
  }
}

TEST_CASE("interpolation is continuous and has continuous derivatives") {
  const auto pts = project_layout(fibonacci_hemisphere(48));
  const auto tris = delaunay_triangulate(pts);
  HctSurface surf(pts, tris);

  std::vector<double> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    values[i] = std::sin(1.7 * pts[i].x) * std::cos(1.3 * pts[i].y) +
                0.3 * pts[i].x * pts[i].y;
  surf.fit(values);

  // strict C0 across macro edges: the same edge point evaluated through both
  // adjacent triangles must agree to roundoff
  std::map<std::pair<int, int>, std::vector<std::size_t>> owners;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int e = 0; e < 3; ++e)
      owners[std::minmax(tris[t].v[e], tris[t].v[(e + 1) % 3])].push_back(t);
  std::size_t interior_edges = 0;
  for (const auto& [edge, ts] : owners) {
    if (ts.size() != 2) continue;
    ++interior_edges;
    const Vec2 a = pts[edge.first], b = pts[edge.second];
    for (double s : {0.2, 0.5, 0.85}) {
      const Vec2 m = a + s * (b - a);
      double b1[3], b2[3];
      surf.barycentric(ts[0], m, b1);
      surf.barycentric(ts[1], m, b2);
      INFO("edge " << edge.first << "-" << edge.second << " at s=" << s);
      REQUIRE_THAT(surf.evaluate(ts[0], b1),
                   WithinAbs(surf.evaluate(ts[1], b2), 1e-10));
    }
  }
  REQUIRE(interior_edges > 40);

  // C1: one-sided normal derivatives agree across macro edges and across
  // sub-patch seams (segments from each vertex to the barycenter)
  Rng rng(321);
  auto check_c1_at = [&](const Vec2& m, Vec2 n, const char* what) {
    const double len = std::sqrt(dot(n, n));
    n = {n.x / len, n.y / len};
    const double h = 1e-6;
    const Vec2 lhs{m.x - h * n.x, m.y - h * n.y};
    const Vec2 rhs{m.x + h * n.x, m.y + h * n.y};
    const Vec2 lhs2{m.x - 2 * h * n.x, m.y - 2 * h * n.y};
    const Vec2 rhs2{m.x + 2 * h * n.x, m.y + 2 * h * n.y};
    if (surf.locate(lhs2) < 0 || surf.locate(rhs2) < 0) return;  // hull rim
    const double dl = (surf.evaluate_at(lhs) - surf.evaluate_at(lhs2)) / h;
    const double dr = (surf.evaluate_at(rhs2) - surf.evaluate_at(rhs)) / h;
    INFO(what);
    REQUIRE_THAT(dl, WithinAbs(dr, 1e-3));
  };
  for (const auto& t : tris) {
    const Vec2 center{(pts[t.v[0]].x + pts[t.v[1]].x + pts[t.v[2]].x) / 3.0,
                      (pts[t.v[0]].y + pts[t.v[1]].y + pts[t.v[2]].y) / 3.0};
    for (int e = 0; e < 3; ++e) {
      const Vec2 a = pts[t.v[e]];
      const Vec2 b = pts[t.v[(e + 1) % 3]];
      const double s = rng.uniform(0.25, 0.75);
      const Vec2 edge_pt = a + s * (b - a);
      check_c1_at(edge_pt, {-(b.y - a.y), b.x - a.x}, "macro edge");
      const Vec2 seam_pt = a + s * (center - a);
      check_c1_at(seam_pt, {-(center.y - a.y), center.x - a.x}, "sub-patch seam");
    }
  }

  // smooth field is reconstructed well away from the rim
  int tested = 0;
  double max_err = 0.0;
  while (tested < 400) {
    const Vec2 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (surf.locate(p) < 0) continue;
    const double want = std::sin(1.7 * p.x) * std::cos(1.3 * p.y) + 0.3 * p.x * p.y;
    max_err = std::max(max_err, std::abs(surf.evaluate_at(p) - want));
    ++tested;
  }
  REQUIRE(max_err < 0.08);
}

TEST_CASE("interpolation surface validates inputs") {
  const auto pts = project_layout(fibonacci_hemisphere(16));
  const auto tris = delaunay_triangulate(pts);
  HctSurface surf(pts, tris);
  std::vector<double> wrong(pts.size() + 1, 0.0);
  REQUIRE_THROWS_WITH(surf.fit(wrong), ContainsSubstring("17 values"));
  std::vector<double> ok(pts.size(), 0.0);
  double b[3] = {1.0, 0.0, 0.0};
  REQUIRE_THROWS_WITH(surf.evaluate(0, b), ContainsSubstring("before fit"));
  surf.fit(ok);
  REQUIRE_NOTHROW(surf.evaluate(0, b));
  REQUIRE_THROWS_WITH(surf.evaluate_at({50.0, 50.0}), ContainsSubstring("outside"));
}

TEST_CASE("raster grid spans the bounding box inclusively") {
  const std::vector<Vec2> pts = {{-2.0, -1.0}, {2.0, 3.0}, {0.0, 0.0}};
  const auto g = grid_over_points(pts, 5);
  REQUIRE(g.width == 5);
  REQUIRE(g.height == 5);
  REQUIRE_THAT(g.pixel_center(0, 0).x, WithinAbs(-2.0, 1e-15));
  REQUIRE_THAT(g.pixel_center(0, 0).y, WithinAbs(-1.0, 1e-15));
  REQUIRE_THAT(g.pixel_center(4, 4).x, WithinAbs(2.0, 1e-15));
  REQUIRE_THAT(g.pixel_center(4, 4).y, WithinAbs(3.0, 1e-15));
  REQUIRE_THROWS_WITH(grid_over_points(pts, 1), ContainsSubstring("at least 2"));
}

TEST_CASE("raster plan masks pixels outside the hull and renders the rest") {
  const auto pts = project_layout(fibonacci_hemisphere(48));
  const auto tris = delaunay_triangulate(pts);
  HctSurface surf(pts, tris);
  const auto grid = grid_over_points(pts, 16);
  RasterPlan plan(surf, grid);

  // distinctive but smooth field
  std::vector<double> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    values[i] = pts[i].x * pts[i].x - pts[i].y;
  surf.fit(values);
  std::vector<double> out(16 * 16, -1.0);
  plan.render(surf, out);

  const auto& mask = plan.mask();
  // bbox corners of a near-disc region lie outside the hull
  REQUIRE(mask[0] == 0);
  REQUIRE(mask[15] == 0);
  REQUIRE(mask[16 * 16 - 1] == 0);
  // center is covered
  REQUIRE(mask[8 * 16 + 8] == 1);
  std::size_t covered = 0;
  for (std::size_t px = 0; px < mask.size(); ++px) {
    if (mask[px]) {
      ++covered;
      const int r = static_cast<int>(px) / 16, c = static_cast<int>(px) % 16;
      REQUIRE_THAT(out[px],
                   WithinAbs(surf.evaluate_at(grid.pixel_center(r, c)), 1e-12));
    } else {
      REQUIRE(out[px] == 0.0);
    }
  }
  REQUIRE(covered > mask.size() / 3);
}

TEST_CASE("topomap pipeline highlights the band and region carrying power") {
  const double fs = 125.0;
  const auto lay = fibonacci_hemisphere(24);
  const std::size_t n = 625;  // 5 s
  signal::TimeSeries chunk(lay.size(), n, fs);
  Rng rng(9);
  // alpha tone on the first 12 electrodes, faint broadband noise everywhere
  for (std::size_t c = 0; c < lay.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      double v = 0.05 * rng.normal();
      if (c < 12) v += 2.0 * std::sin(2 * kPi * 10.0 * t + 0.3 * c);
      chunk.at(c, i) = v;
    }
  }

  const auto& bands = signal::canonical_bands();
  TopomapPipeline pipeline(lay, bands, fs, 20);
  const auto img = pipeline.process(chunk);

  REQUIRE(img.width == 20);
  REQUIRE(img.height == 20);
  REQUIRE(img.bands == 5);
  REQUIRE(img.pixels.size() == 5 * 20 * 20);
  REQUIRE(img.mask.size() == 20 * 20);

  // masked pixels are exactly zero on every plane
  for (int b = 0; b < img.bands; ++b)
    for (std::size_t px = 0; px < img.mask.size(); ++px)
      if (!img.mask[px]) REQUIRE(img.plane(b)[px] == 0.0);

  // the alpha plane (band 2) dominates the others on covered pixels
  double mean_alpha = 0.0, mean_rest = 0.0;
  std::size_t covered = 0;
  for (std::size_t px = 0; px < img.mask.size(); ++px) {
    if (!img.mask[px]) continue;
    ++covered;
    mean_alpha += img.plane(2)[px];
    for (int b = 0; b < 5; ++b)
      if (b != 2) mean_rest += img.plane(b)[px] / 4.0;
  }
  mean_alpha /= static_cast<double>(covered);
  mean_rest /= static_cast<double>(covered);
  REQUIRE(mean_alpha > mean_rest + 0.5);

  // determinism: processing the same chunk twice is bit-identical
  const auto img2 = pipeline.process(chunk);
  REQUIRE(img2.pixels == img.pixels);
  REQUIRE(img2.mask == img.mask);

  // channel count mismatch is rejected
  signal::TimeSeries bad(3, n, fs);
  REQUIRE_THROWS_WITH(pipeline.process(bad), ContainsSubstring("montage"));
}
