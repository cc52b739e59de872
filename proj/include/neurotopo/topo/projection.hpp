#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurotopo::topo {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a.x, s * a.y}; }

// Flattens a point on the unit sphere into the plane, preserving arc distance
// from the apex (0,0,1): radius = acos(z), direction = azimuth. This keeps
// scalp distances near the vertex faithful, which is what matters for
// interpolating electrode fields.
inline Vec2 azimuthal_project(const Vec3& p, const std::string& who = "point") {
  const double n = p.norm();
  if (std::abs(n - 1.0) > 1e-6)
    throw std::invalid_argument("azimuthal_project: " + who +
                                " is not on the unit sphere (|p| = " +
                                std::to_string(n) + ")");
  const double z = std::clamp(p.z / n, -1.0, 1.0);
  const double radius = std::acos(z);
  constexpr double pi = 3.14159265358979323846;
  if (radius > pi - 1e-6)
    throw std::invalid_argument("azimuthal_project: " + who +
                                " sits at the projection antipode (0,0,-1); "
                                "its direction from the apex is undefined");
  if (radius < 1e-12) return {0.0, 0.0};
  const double az = std::atan2(p.y, p.x);
  return {radius * std::cos(az), radius * std::sin(az)};
}

}  // namespace neurotopo::topo
