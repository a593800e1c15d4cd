#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fitbench/core.hpp"

namespace fitbench {

/// H x W boolean raster; nonzero pixels are foreground.
using BinaryMask = Image<std::uint8_t>;

/// 3-class body-garment layout: 0 background, 1 body, 2 garment.
using LayoutMap = Image<std::uint8_t>;

inline constexpr std::uint8_t kLayoutBackground = 0;
inline constexpr std::uint8_t kLayoutBody = 1;
inline constexpr std::uint8_t kLayoutGarment = 2;

struct ContourPoint {
  int x = 0;
  int y = 0;
  bool operator==(const ContourPoint&) const = default;
};

/// Ordered trace of one closed boundary; consecutive points are 8-connected.
using Contour = std::vector<ContourPoint>;

/// Seven Hu shape invariants [phi1 .. phi7].
using HuVector = std::array<double, 7>;

// ------------------------------------------------------------------ moments

/// Central moment mu_pq = sum_x sum_y (x - cx)^p (y - cy)^q I(x,y) about the
/// foreground centroid.
inline double central_moment(const BinaryMask& mask, int p, int q) {
  if (p < 0 || q < 0)
    throw Error(ErrorKind::OrderTooLow, "moment orders must be non-negative");
  double m00 = 0.0, m10 = 0.0, m01 = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      m00 += 1.0;
      m10 += x;
      m01 += y;
    }
  }
  if (m00 == 0.0) throw Error(ErrorKind::EmptyMask, "mask has no foreground pixels");
  const double cx = m10 / m00;
  const double cy = m01 / m00;

  const auto ipow = [](double v, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= v;
    return r;
  };

  double mu = 0.0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) mu += ipow(x - cx, p) * ipow(y - cy, q);
  return mu;
}

/// Scale-normalized moment eta_pq = mu_pq / mu00^r with r = (p+q)/2 + 1.
inline double normalized_moment(const BinaryMask& mask, int p, int q) {
  if (p + q < 2) throw Error(ErrorKind::OrderTooLow, "normalized moments need p+q >= 2");
  const double mu = central_moment(mask, p, q);
  const double mu00 = central_moment(mask, 0, 0);
  const double r = (p + q) / 2.0 + 1.0;
  return mu / std::pow(mu00, r);
}

/// The canonical seven Hu invariants of the filled foreground region.
inline HuVector hu_vector(const BinaryMask& mask) {
  // One pass for the raw sums, then the eta combinations.
  double m00 = 0.0, m10 = 0.0, m01 = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      m00 += 1.0;
      m10 += x;
      m01 += y;
    }
  }
  if (m00 == 0.0) throw Error(ErrorKind::EmptyMask, "mask has no foreground pixels");
  const double cx = m10 / m00;
  const double cy = m01 / m00;

  double mu20 = 0, mu02 = 0, mu11 = 0, mu30 = 0, mu21 = 0, mu12 = 0, mu03 = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const double dx = x - cx;
      const double dy = y - cy;
      mu20 += dx * dx;
      mu02 += dy * dy;
      mu11 += dx * dy;
      mu30 += dx * dx * dx;
      mu21 += dx * dx * dy;
      mu12 += dx * dy * dy;
      mu03 += dy * dy * dy;
    }
  }

  const double n2 = std::pow(m00, 2.0);  // r = 2 for p+q = 2
  const double n3 = std::pow(m00, 2.5);  // r = 2.5 for p+q = 3
  const double e20 = mu20 / n2, e02 = mu02 / n2, e11 = mu11 / n2;
  const double e30 = mu30 / n3, e21 = mu21 / n3, e12 = mu12 / n3, e03 = mu03 / n3;

  HuVector phi{};
  phi[0] = e20 + e02;
  phi[1] = (e20 - e02) * (e20 - e02) + 4.0 * e11 * e11;
  phi[2] = (e30 - 3.0 * e12) * (e30 - 3.0 * e12) + (3.0 * e21 - e03) * (3.0 * e21 - e03);
  phi[3] = (e30 + e12) * (e30 + e12) + (e21 + e03) * (e21 + e03);
  phi[4] = (e30 - 3.0 * e12) * (e30 + e12) *
               ((e30 + e12) * (e30 + e12) - 3.0 * (e21 + e03) * (e21 + e03)) +
           (3.0 * e21 - e03) * (e21 + e03) *
               (3.0 * (e30 + e12) * (e30 + e12) - (e21 + e03) * (e21 + e03));
  phi[5] = (e20 - e02) * ((e30 + e12) * (e30 + e12) - (e21 + e03) * (e21 + e03)) +
           4.0 * e11 * (e30 + e12) * (e21 + e03);
  phi[6] = (3.0 * e21 - e03) * (e30 + e12) *
               ((e30 + e12) * (e30 + e12) - 3.0 * (e21 + e03) * (e21 + e03)) -
           (e30 - 3.0 * e12) * (e21 + e03) *
               (3.0 * (e30 + e12) * (e30 + e12) - (e21 + e03) * (e21 + e03));
  return phi;
}

/// Scalar distance between Hu vectors: sum of |m_i(a) - m_i(b)| with the
/// sign-log map m_i = sign(phi_i) * log10|phi_i|, and m_i = 0 when
/// |phi_i| < 1e-30.
inline double hu_distance(const HuVector& a, const HuVector& b) {
  const auto log_map = [](double phi) {
    if (std::abs(phi) < 1e-30) return 0.0;
    const double sign = phi > 0.0 ? 1.0 : -1.0;
    return sign * std::log10(std::abs(phi));
  };
  double sum = 0.0;
  for (int i = 0; i < 7; ++i) sum += std::abs(log_map(a[i]) - log_map(b[i]));
  return sum;
}

// ---------------------------------------------------------------- hausdorff

/// Squared Hausdorff distance over integer point sets, exact in int64
/// arithmetic. `stride` subsamples both contours (1 = every point).
inline std::int64_t hausdorff_distance_sq(const Contour& a, const Contour& b, int stride = 1) {
  if (a.empty() || b.empty())
    throw Error(ErrorKind::EmptyContour, "hausdorff over an empty contour");
  if (stride < 1) stride = 1;

  const auto directed = [stride](const Contour& from, const Contour& to) {
    std::int64_t worst = 0;
    for (std::size_t i = 0; i < from.size(); i += stride) {
      const ContourPoint p = from[i];
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (std::size_t j = 0; j < to.size(); j += stride) {
        const std::int64_t dx = p.x - to[j].x;
        const std::int64_t dy = p.y - to[j].y;
        const std::int64_t d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          if (best <= worst) break;  // cannot raise the running max
        }
      }
      if (best > worst) worst = best;
    }
    return worst;
  };

  return std::max(directed(a, b), directed(b, a));
}

/// Exact symmetric Hausdorff distance (Euclidean) between two contours.
inline double hausdorff_distance(const Contour& a, const Contour& b, int stride = 1) {
  return std::sqrt(static_cast<double>(hausdorff_distance_sq(a, b, stride)));
}

// ------------------------------------------------------------------ contour

namespace detail {

// Moore neighborhood in clockwise order on a y-down raster.
inline constexpr int kMooreDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr int kMooreDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

inline int moore_dir(int dx, int dy) {
  for (int k = 0; k < 8; ++k)
    if (kMooreDx[k] == dx && kMooreDy[k] == dy) return k;
  return -1;
}

/// Moore-neighbor border following. The start pixel must be the topmost,
/// then leftmost component pixel, so its west and north neighbors are known
/// background. Terminates when the initial move out of the start pixel is
/// about to repeat (Jacob's criterion).
template <typename InComponent>
Contour moore_trace(int start_x, int start_y, std::int64_t max_steps, InComponent&& inside) {
  Contour contour;
  int cur_x = start_x, cur_y = start_y;
  int back_x = start_x - 1, back_y = start_y;  // west neighbor
  int first_dir = -1;
  std::int64_t steps = 0;

  for (;;) {
    const int bd = moore_dir(back_x - cur_x, back_y - cur_y);
    int found_dir = -1;
    int scan = (bd + 1) % 8;
    for (int k = 0; k < 8; ++k, scan = (scan + 1) % 8) {
      const int nx = cur_x + kMooreDx[scan];
      const int ny = cur_y + kMooreDy[scan];
      if (inside(nx, ny)) {
        found_dir = scan;
        break;
      }
      back_x = nx;  // last background neighbor examined
      back_y = ny;
    }
    if (found_dir < 0) {
      contour.push_back({cur_x, cur_y});  // isolated pixel
      break;
    }
    if (cur_x == start_x && cur_y == start_y) {
      if (first_dir < 0) {
        first_dir = found_dir;
      } else if (found_dir == first_dir) {
        break;  // trace closed
      }
    }
    contour.push_back({cur_x, cur_y});
    cur_x += kMooreDx[found_dir];
    cur_y += kMooreDy[found_dir];
    if (++steps > max_steps)
      throw Error(ErrorKind::ParseError, "contour trace failed to close");
  }
  return contour;
}

}  // namespace detail

/// Outer boundary of the largest 8-connected component of `label` pixels,
/// traced clockwise by Moore border following from the topmost-then-leftmost
/// boundary pixel.
inline Contour extract_label_contour(const Image<std::uint8_t>& image, std::uint8_t label) {
  const int w = image.width();
  const int h = image.height();

  // Largest 8-connected component; ties break toward the first encountered
  // in scan order.
  std::vector<std::int32_t> component(static_cast<std::size_t>(w) * h, -1);
  std::int32_t best_component = -1;
  std::int64_t best_size = 0;
  std::int32_t next_id = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (image.at(x, y) != label || component[static_cast<std::size_t>(y) * w + x] >= 0)
        continue;
      const std::int32_t id = next_id++;
      std::int64_t size = 0;
      stack.push_back({x, y});
      component[static_cast<std::size_t>(y) * w + x] = id;
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        ++size;
        for (int k = 0; k < 8; ++k) {
          const int nx = px + detail::kMooreDx[k];
          const int ny = py + detail::kMooreDy[k];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          auto& slot = component[static_cast<std::size_t>(ny) * w + nx];
          if (slot >= 0 || image.at(nx, ny) != label) continue;
          slot = id;
          stack.push_back({nx, ny});
        }
      }
      if (size > best_size) {
        best_size = size;
        best_component = id;
      }
    }
  }
  if (best_component < 0)
    throw Error(ErrorKind::EmptyClass, "no pixels with the requested label");

  int start_x = -1, start_y = -1;
  for (int y = 0; y < h && start_x < 0; ++y)
    for (int x = 0; x < w; ++x)
      if (component[static_cast<std::size_t>(y) * w + x] == best_component) {
        start_x = x;
        start_y = y;
        break;
      }

  const auto inside = [&](int x, int y) {
    return x >= 0 && x < w && y >= 0 && y < h &&
           component[static_cast<std::size_t>(y) * w + x] == best_component;
  };
  return detail::moore_trace(start_x, start_y, 8LL * w * h + 16, inside);
}

/// Garment-class contour of a 3-class layout map.
inline Contour extract_garment_contour(const LayoutMap& layout) {
  return extract_label_contour(layout, kLayoutGarment);
}

/// Foreground mask of one label class.
inline BinaryMask label_mask(const Image<std::uint8_t>& image, std::uint8_t label) {
  BinaryMask mask(image.width(), image.height(), 0);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (image.at(x, y) == label) mask.at(x, y) = 1;
  return mask;
}

}  // namespace fitbench
