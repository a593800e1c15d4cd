#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "fitbench/core.hpp"

namespace fitbench::raster {

inline bool in_disc(Vec2 p, Vec2 c, double r) {
  const Vec2 d = p - c;
  return dot(d, d) <= r * r;
}

/// Membership in the convex hull of two discs (tapered capsule). The hull is
/// the union of the end discs and the band between the two outer tangent
/// lines; in axis-folded coordinates the tangent line satisfies
/// sqrt(1-k^2)*x_perp + k*y_axial = r1 with k = (r1-r2)/L.
inline bool in_uneven_capsule(Vec2 p, Vec2 c1, double r1, Vec2 c2, double r2) {
  if (in_disc(p, c1, r1) || in_disc(p, c2, r2)) return true;
  const Vec2 d = c2 - c1;
  const double len = norm(d);
  if (len <= std::abs(r1 - r2)) return false;  // one disc contains the hull
  const double k = (r1 - r2) / len;
  const double sqk = std::sqrt(1.0 - k * k);
  const Vec2 u = p - c1;
  const double axial = dot(u, d) / len;
  const double perp = std::abs(cross(d, u)) / len;
  if (axial < r1 * k || axial > len + r2 * k) return false;
  return sqk * perp + k * axial <= r1;
}

/// Circular segment over a chord, bulging by sagitta along the stored
/// normal. Region = disc cap on the bulge side of the chord.
struct CircularSegment {
  Vec2 center;
  double radius = 0.0;
  Vec2 chord_mid;
  Vec2 normal;
  bool valid = false;
};

/// Builds the segment over chord a-b with sagitta = sagitta_ratio * chord
/// length, bulging away from `away_from`.
inline CircularSegment make_cap(Vec2 a, Vec2 b, double sagitta_ratio, Vec2 away_from) {
  CircularSegment seg;
  const double chord = norm(b - a);
  if (chord <= 0.0) return seg;
  const double s = sagitta_ratio * chord;
  const double radius = chord * chord / (8.0 * s) + s / 2.0;
  seg.chord_mid = (a + b) * 0.5;
  Vec2 n{-(b - a).y / chord, (b - a).x / chord};
  if (dot(n, away_from - seg.chord_mid) > 0.0) n = n * -1.0;
  seg.normal = n;
  seg.center = seg.chord_mid - n * (radius - s);
  seg.radius = radius;
  seg.valid = true;
  return seg;
}

inline bool in_cap(Vec2 p, const CircularSegment& seg) {
  if (!seg.valid) return false;
  if (dot(p - seg.chord_mid, seg.normal) < 0.0) return false;
  return in_disc(p, seg.center, seg.radius);
}

/// Even-odd point-in-polygon test.
inline bool in_polygon(Vec2 p, const Vec2* verts, int count) {
  bool inside = false;
  for (int i = 0, j = count - 1; i < count; j = i++) {
    const Vec2 a = verts[j];
    const Vec2 b = verts[i];
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

/// Paints label over every integer pixel inside the bbox where pred holds.
template <typename Pred>
void paint(Image<std::uint8_t>& img, double bx0, double by0, double bx1, double by1,
           std::uint8_t label, Pred&& pred) {
  const int x0 = std::max(0, static_cast<int>(std::floor(bx0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(by0)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(bx1)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(by1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (pred(Vec2{static_cast<double>(x), static_cast<double>(y)})) img.at(x, y) = label;
}

inline void paint_capsule(Image<std::uint8_t>& img, Vec2 a, double ra, Vec2 b, double rb,
                          std::uint8_t label) {
  const double pad = std::max(ra, rb);
  paint(img, std::min(a.x, b.x) - pad, std::min(a.y, b.y) - pad, std::max(a.x, b.x) + pad,
        std::max(a.y, b.y) + pad, label,
        [&](Vec2 p) { return in_uneven_capsule(p, a, ra, b, rb); });
}

inline void paint_disc(Image<std::uint8_t>& img, Vec2 c, double r, std::uint8_t label) {
  paint(img, c.x - r, c.y - r, c.x + r, c.y + r, label,
        [&](Vec2 p) { return in_disc(p, c, r); });
}

}  // namespace fitbench::raster
