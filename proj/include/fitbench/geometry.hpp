#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fitbench/core.hpp"
#include "fitbench/raster.hpp"

namespace fitbench {

// ---------------------------------------------------------------- skeleton

enum class JointName : int {
  LeftShoulder = 0,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

inline constexpr int kJointCount = 12;

inline constexpr std::array<JointName, kJointCount> kAllJoints = {
    JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftElbow,
    JointName::RightElbow,   JointName::LeftWrist,     JointName::RightWrist,
    JointName::LeftHip,      JointName::RightHip,      JointName::LeftKnee,
    JointName::RightKnee,    JointName::LeftAnkle,     JointName::RightAnkle,
};

inline const char* joint_name(JointName j) {
  switch (j) {
    case JointName::LeftShoulder: return "left_shoulder";
    case JointName::RightShoulder: return "right_shoulder";
    case JointName::LeftElbow: return "left_elbow";
    case JointName::RightElbow: return "right_elbow";
    case JointName::LeftWrist: return "left_wrist";
    case JointName::RightWrist: return "right_wrist";
    case JointName::LeftHip: return "left_hip";
    case JointName::RightHip: return "right_hip";
    case JointName::LeftKnee: return "left_knee";
    case JointName::RightKnee: return "right_knee";
    case JointName::LeftAnkle: return "left_ankle";
    case JointName::RightAnkle: return "right_ankle";
  }
  return "unknown";
}

inline std::optional<JointName> joint_from_name(std::string_view name) {
  for (JointName j : kAllJoints)
    if (name == joint_name(j)) return j;
  return std::nullopt;
}

struct Joint {
  double x = 0.0;
  double y = 0.0;
  bool visible = false;
};

/// Named 2-D body keypoints in pixel units. The sole input to every
/// preprocessing operation below; none of them ever sees garment imagery,
/// which is what makes the outputs leakage-free by construction.
struct Skeleton2D {
  std::array<Joint, kJointCount> joints{};
  int image_width = 0;
  int image_height = 0;

  const Joint& joint(JointName j) const { return joints[static_cast<int>(j)]; }
  Joint& joint(JointName j) { return joints[static_cast<int>(j)]; }
  bool visible(JointName j) const { return joint(j).visible; }

  void set(JointName j, double x, double y, bool visible = true) {
    joints[static_cast<int>(j)] = Joint{x, y, visible};
  }

  /// Checks the type invariants: positive canvas, visible joints in bounds.
  void validate() const {
    if (image_width <= 0 || image_height <= 0)
      throw Error(ErrorKind::ParseError, "skeleton image dimensions must be positive");
    for (JointName j : kAllJoints) {
      const Joint& p = joint(j);
      if (!p.visible) continue;
      if (p.x < 0.0 || p.x >= image_width || p.y < 0.0 || p.y >= image_height)
        throw Error(ErrorKind::ParseError,
                    std::string("visible joint out of bounds: ") + joint_name(j));
    }
  }
};

enum class BodyRegion { UpperBody, LowerBody };

// --------------------------------------------------------------- rectangle

/// Inclusive-exclusive pixel rectangle within a canvas.
struct RectMask {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int image_width = 0;
  int image_height = 0;

  bool operator==(const RectMask&) const = default;

  /// Binary raster: 255 inside the rectangle, 0 outside.
  Image<std::uint8_t> rasterize() const {
    Image<std::uint8_t> out(image_width, image_height, 0);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) out.at(x, y) = 255;
    return out;
  }
};

namespace detail {

struct RegionRule {
  std::vector<JointName> horizontal;
  std::vector<JointName> vertical;
  std::vector<JointName> required;
  double k1;
  double k2;
};

inline const RegionRule& region_rule(BodyRegion region) {
  // Upper body: span x over shoulder/elbow/wrist, span y shoulders->hips,
  // padding ratios (0.6, 0.25). Lower body: hip/knee/ankle, hips->ankles,
  // ratios (0.5, 0.2).
  static const RegionRule upper = {
      {JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftElbow,
       JointName::RightElbow, JointName::LeftWrist, JointName::RightWrist},
      {JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftHip,
       JointName::RightHip},
      {JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftElbow,
       JointName::RightElbow, JointName::LeftWrist, JointName::RightWrist,
       JointName::LeftHip, JointName::RightHip},
      0.6,
      0.25};
  static const RegionRule lower = {
      {JointName::LeftHip, JointName::RightHip, JointName::LeftKnee,
       JointName::RightKnee, JointName::LeftAnkle, JointName::RightAnkle},
      {JointName::LeftHip, JointName::RightHip, JointName::LeftAnkle,
       JointName::RightAnkle},
      {JointName::LeftHip, JointName::RightHip, JointName::LeftKnee,
       JointName::RightKnee, JointName::LeftAnkle, JointName::RightAnkle},
      0.5,
      0.2};
  return region == BodyRegion::UpperBody ? upper : lower;
}

}  // namespace detail

namespace detail {

/// Real-valued padded rectangle before clipping and rounding.
struct PaddedSpan {
  double x0, x1, y0, y1;
};

inline PaddedSpan padded_span(const Skeleton2D& skeleton, BodyRegion region, double k1,
                              double k2) {
  const RegionRule& rule = region_rule(region);

  for (JointName j : rule.required) {
    if (!skeleton.visible(j)) throw Error(ErrorKind::MissingJoint, joint_name(j));
  }

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  for (std::size_t i = 0; i < rule.horizontal.size(); ++i) {
    const double x = skeleton.joint(rule.horizontal[i]).x;
    if (i == 0) min_x = max_x = x;
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
  }
  for (std::size_t i = 0; i < rule.vertical.size(); ++i) {
    const double y = skeleton.joint(rule.vertical[i]).y;
    if (i == 0) min_y = max_y = y;
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }

  const double span_w = max_x - min_x;
  const double span_h = max_y - min_y;
  if (span_w <= 0.0 || span_h <= 0.0)
    throw Error(ErrorKind::ZeroSpan, "degenerate keypoint span");

  const double pad_x = k1 * span_w / 2.0;
  const double pad_y = k2 * span_h / 2.0;
  return {min_x - pad_x, max_x + pad_x, min_y - pad_y, max_y + pad_y};
}

}  // namespace detail

/// Keypoint span rectangle for the given body region, padded by the region's
/// (k1, k2) ratios: each side of the horizontal span grows by k1*width/2 and
/// each end of the vertical span by k2*height/2, then the rectangle is
/// clipped to the canvas and rounded outward (floor mins, ceil maxes).
inline RectMask keypoints_to_mask(const Skeleton2D& skeleton, BodyRegion region) {
  const detail::RegionRule& rule = detail::region_rule(region);
  const detail::PaddedSpan span = detail::padded_span(skeleton, region, rule.k1, rule.k2);

  const double x0 = std::max(0.0, span.x0);
  const double x1 = std::min(static_cast<double>(skeleton.image_width), span.x1);
  const double y0 = std::max(0.0, span.y0);
  const double y1 = std::min(static_cast<double>(skeleton.image_height), span.y1);

  RectMask rect;
  rect.x0 = static_cast<int>(std::floor(x0));
  rect.x1 = static_cast<int>(std::ceil(x1));
  rect.y0 = static_cast<int>(std::floor(y0));
  rect.y1 = static_cast<int>(std::ceil(y1));
  rect.image_width = skeleton.image_width;
  rect.image_height = skeleton.image_height;
  return rect;
}

// ------------------------------------------------------------- body height

namespace detail {

inline std::optional<double> mean_y(const Skeleton2D& s, JointName left, JointName right) {
  double sum = 0.0;
  int n = 0;
  if (s.visible(left)) {
    sum += s.joint(left).y;
    ++n;
  }
  if (s.visible(right)) {
    sum += s.joint(right).y;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace detail

/// Canonical body height in pixels: 3.2x torso height (mean-shoulder to
/// mean-hip) when the torso is measurable, otherwise 2.3x leg length
/// (mean-hip to mean-ankle).
inline double estimate_body_height(const Skeleton2D& skeleton) {
  const auto shoulder_y = detail::mean_y(skeleton, JointName::LeftShoulder, JointName::RightShoulder);
  const auto hip_y = detail::mean_y(skeleton, JointName::LeftHip, JointName::RightHip);
  const auto ankle_y = detail::mean_y(skeleton, JointName::LeftAnkle, JointName::RightAnkle);

  if (shoulder_y && hip_y) {
    const double torso = std::abs(*hip_y - *shoulder_y);
    if (torso > 0.0) return 3.2 * torso;
  }
  if (hip_y && ankle_y) {
    const double leg = std::abs(*ankle_y - *hip_y);
    if (leg > 0.0) return 2.3 * leg;
  }
  throw Error(ErrorKind::InsufficientJoints, "neither torso nor leg is measurable");
}

// -------------------------------------------------------------- dense pose

enum class Provenance { Synthesized, Intersected };

inline constexpr std::uint8_t kDpBackground = 0;
inline constexpr std::uint8_t kDpTorso = 1;
inline constexpr std::uint8_t kDpLeftArm = 2;
inline constexpr std::uint8_t kDpRightArm = 3;
inline constexpr std::uint8_t kDpLeftLeg = 4;
inline constexpr std::uint8_t kDpRightLeg = 5;

struct DensePoseMap {
  Image<std::uint8_t> labels;
  Provenance provenance = Provenance::Synthesized;
};

/// Joint-circle radii for one limb chain, proportional to body height.
struct LimbRadii {
  double root;  // shoulder or hip
  double mid;   // elbow or knee
  double tip;   // wrist or ankle
};

/// Arm circle diameters are (0.06, 0.048, 0.033) x body height.
inline LimbRadii arm_radii(double body_height) {
  return {0.06 * body_height / 2.0, 0.048 * body_height / 2.0, 0.033 * body_height / 2.0};
}

/// Leg circle diameters are (0.09, 0.055, 0.03) x body height.
inline LimbRadii leg_radii(double body_height) {
  return {0.09 * body_height / 2.0, 0.055 * body_height / 2.0, 0.03 * body_height / 2.0};
}

inline constexpr double kTorsoCapSagittaRatio = 0.15;

/// Standard-stature dense pose synthesized from keypoints alone. The torso is
/// the shoulder/hip quadrilateral with circular-segment caps at both chords;
/// limbs are tapered-capsule chains through the joint circles whose diameters
/// are fixed fractions of the estimated body height. Limbs whose joint chain
/// is not fully visible are omitted. Overlaps resolve torso > arms > legs.
inline DensePoseMap synthesize_densepose(const Skeleton2D& skeleton) {
  for (JointName j : {JointName::LeftShoulder, JointName::RightShoulder,
                      JointName::LeftHip, JointName::RightHip}) {
    if (!skeleton.visible(j)) throw Error(ErrorKind::MissingJoint, joint_name(j));
  }
  const double body_height = estimate_body_height(skeleton);
  const LimbRadii arm = arm_radii(body_height);
  const LimbRadii leg = leg_radii(body_height);

  DensePoseMap map;
  map.labels = Image<std::uint8_t>(skeleton.image_width, skeleton.image_height, kDpBackground);
  map.provenance = Provenance::Synthesized;

  const auto pos = [&](JointName j) {
    return Vec2{skeleton.joint(j).x, skeleton.joint(j).y};
  };
  const auto chain_visible = [&](JointName a, JointName b, JointName c) {
    return skeleton.visible(a) && skeleton.visible(b) && skeleton.visible(c);
  };

  // Paint order is the reverse of the part priority.
  if (chain_visible(JointName::LeftHip, JointName::LeftKnee, JointName::LeftAnkle)) {
    raster::paint_capsule(map.labels, pos(JointName::LeftHip), leg.root, pos(JointName::LeftKnee), leg.mid, kDpLeftLeg);
    raster::paint_capsule(map.labels, pos(JointName::LeftKnee), leg.mid, pos(JointName::LeftAnkle), leg.tip, kDpLeftLeg);
  }
  if (chain_visible(JointName::RightHip, JointName::RightKnee, JointName::RightAnkle)) {
    raster::paint_capsule(map.labels, pos(JointName::RightHip), leg.root, pos(JointName::RightKnee), leg.mid, kDpRightLeg);
    raster::paint_capsule(map.labels, pos(JointName::RightKnee), leg.mid, pos(JointName::RightAnkle), leg.tip, kDpRightLeg);
  }
  if (chain_visible(JointName::LeftShoulder, JointName::LeftElbow, JointName::LeftWrist)) {
    raster::paint_capsule(map.labels, pos(JointName::LeftShoulder), arm.root, pos(JointName::LeftElbow), arm.mid, kDpLeftArm);
    raster::paint_capsule(map.labels, pos(JointName::LeftElbow), arm.mid, pos(JointName::LeftWrist), arm.tip, kDpLeftArm);
  }
  if (chain_visible(JointName::RightShoulder, JointName::RightElbow, JointName::RightWrist)) {
    raster::paint_capsule(map.labels, pos(JointName::RightShoulder), arm.root, pos(JointName::RightElbow), arm.mid, kDpRightArm);
    raster::paint_capsule(map.labels, pos(JointName::RightElbow), arm.mid, pos(JointName::RightWrist), arm.tip, kDpRightArm);
  }

  const Vec2 ls = pos(JointName::LeftShoulder);
  const Vec2 rs = pos(JointName::RightShoulder);
  const Vec2 lh = pos(JointName::LeftHip);
  const Vec2 rh = pos(JointName::RightHip);
  const Vec2 shoulder_mid = (ls + rs) * 0.5;
  const Vec2 hip_mid = (lh + rh) * 0.5;

  const std::array<Vec2, 4> quad = {ls, rs, rh, lh};
  const auto cap_top = raster::make_cap(ls, rs, kTorsoCapSagittaRatio, hip_mid);
  const auto cap_bottom = raster::make_cap(lh, rh, kTorsoCapSagittaRatio, shoulder_mid);

  double bx0 = ls.x, by0 = ls.y, bx1 = ls.x, by1 = ls.y;
  for (Vec2 v : {rs, rh, lh}) {
    bx0 = std::min(bx0, v.x);
    by0 = std::min(by0, v.y);
    bx1 = std::max(bx1, v.x);
    by1 = std::max(by1, v.y);
  }
  const double cap_pad = kTorsoCapSagittaRatio * std::max(norm(rs - ls), norm(rh - lh));
  raster::paint(map.labels, bx0 - cap_pad, by0 - cap_pad, bx1 + cap_pad, by1 + cap_pad,
                kDpTorso, [&](Vec2 p) {
                  return raster::in_polygon(p, quad.data(), 4) || raster::in_cap(p, cap_top) ||
                         raster::in_cap(p, cap_bottom);
                });
  return map;
}

/// Pixelwise restriction of the synthesized map to the predicted foreground.
/// Surviving pixels keep the synthesized part label.
inline DensePoseMap intersect_densepose(const DensePoseMap& synth, const DensePoseMap& predicted) {
  if (synth.labels.width() != predicted.labels.width() ||
      synth.labels.height() != predicted.labels.height())
    throw Error(ErrorKind::DimensionMismatch, "dense pose maps differ in size");
  DensePoseMap out;
  out.labels = synth.labels;
  out.provenance = Provenance::Intersected;
  const auto& pred = predicted.labels.pixels();
  auto& dst = out.labels.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (pred[i] == kDpBackground) dst[i] = kDpBackground;
  return out;
}

}  // namespace fitbench
