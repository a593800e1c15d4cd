#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fitbench/geometry.hpp"
#include "fitbench/json_io.hpp"
#include "fitbench/raster.hpp"

using namespace fitbench;

namespace {

Skeleton2D blank_skeleton(int width, int height) {
  Skeleton2D s;
  s.image_width = width;
  s.image_height = height;
  return s;
}

/// Upper-body fixture from the padding-rule worked example: shoulder, elbow
/// and wrist x spread over {100..200}, shoulder y 80, hip y 300.
Skeleton2D upper_example() {
  Skeleton2D s = blank_skeleton(400, 500);
  s.set(JointName::LeftShoulder, 100, 80);
  s.set(JointName::RightShoulder, 200, 80);
  s.set(JointName::LeftElbow, 110, 150);
  s.set(JointName::RightElbow, 190, 150);
  s.set(JointName::LeftWrist, 120, 220);
  s.set(JointName::RightWrist, 180, 220);
  s.set(JointName::LeftHip, 130, 300);
  s.set(JointName::RightHip, 170, 300);
  return s;
}

/// Full standing figure on a 600x1100 canvas, vertical limbs, torso height
/// 250 so the estimated body height is exactly 800.
Skeleton2D standard_pose() {
  Skeleton2D s = blank_skeleton(600, 1100);
  s.set(JointName::LeftShoulder, 200, 150);
  s.set(JointName::RightShoulder, 400, 150);
  s.set(JointName::LeftElbow, 200, 330);
  s.set(JointName::RightElbow, 400, 330);
  s.set(JointName::LeftWrist, 200, 490);
  s.set(JointName::RightWrist, 400, 490);
  s.set(JointName::LeftHip, 230, 400);
  s.set(JointName::RightHip, 370, 400);
  s.set(JointName::LeftKnee, 230, 650);
  s.set(JointName::RightKnee, 370, 650);
  s.set(JointName::LeftAnkle, 230, 900);
  s.set(JointName::RightAnkle, 370, 900);
  return s;
}

/// Independent route to the mask rectangle: recompute the real padded span
/// directly from the rule, then scan integer candidates for the tightest
/// enclosing rectangle inside the canvas.
RectMask brute_force_mask(const Skeleton2D& s, BodyRegion region, double k1, double k2) {
  std::vector<JointName> horizontal, vertical;
  if (region == BodyRegion::UpperBody) {
    horizontal = {JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftElbow,
                  JointName::RightElbow,   JointName::LeftWrist,     JointName::RightWrist};
    vertical = {JointName::LeftShoulder, JointName::RightShoulder, JointName::LeftHip,
                JointName::RightHip};
  } else {
    horizontal = {JointName::LeftHip,  JointName::RightHip,   JointName::LeftKnee,
                  JointName::RightKnee, JointName::LeftAnkle, JointName::RightAnkle};
    vertical = {JointName::LeftHip, JointName::RightHip, JointName::LeftAnkle,
                JointName::RightAnkle};
  }
  double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
  for (JointName j : horizontal) {
    min_x = std::min(min_x, s.joint(j).x);
    max_x = std::max(max_x, s.joint(j).x);
  }
  for (JointName j : vertical) {
    min_y = std::min(min_y, s.joint(j).y);
    max_y = std::max(max_y, s.joint(j).y);
  }
  const double x0r = std::max(0.0, min_x - k1 * (max_x - min_x) / 2.0);
  const double x1r = std::min<double>(s.image_width, max_x + k1 * (max_x - min_x) / 2.0);
  const double y0r = std::max(0.0, min_y - k2 * (max_y - min_y) / 2.0);
  const double y1r = std::min<double>(s.image_height, max_y + k2 * (max_y - min_y) / 2.0);

  RectMask rect;
  rect.image_width = s.image_width;
  rect.image_height = s.image_height;
  for (int i = s.image_width; i >= 0; --i)
    if (i <= x0r) {
      rect.x0 = i;
      break;
    }
  for (int i = 0; i <= s.image_width; ++i)
    if (i >= x1r) {
      rect.x1 = i;
      break;
    }
  for (int i = s.image_height; i >= 0; --i)
    if (i <= y0r) {
      rect.y0 = i;
      break;
    }
  for (int i = 0; i <= s.image_height; ++i)
    if (i >= y1r) {
      rect.y1 = i;
      break;
    }
  return rect;
}

}  // namespace

TEST_CASE("upper-body mask matches the worked example") {
  const RectMask rect = keypoints_to_mask(upper_example(), BodyRegion::UpperBody);
  CHECK(rect.x0 == 70);
  CHECK(rect.x1 == 230);
  CHECK(rect.y0 == 52);
  CHECK(rect.y1 == 328);
  CHECK(rect == brute_force_mask(upper_example(), BodyRegion::UpperBody, 0.6, 0.25));
}

TEST_CASE("mask rasterization is 255 exactly inside the rectangle") {
  const RectMask rect = keypoints_to_mask(upper_example(), BodyRegion::UpperBody);
  const auto img = rect.rasterize();
  REQUIRE(img.width() == 400);
  REQUIRE(img.height() == 500);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const bool inside = x >= rect.x0 && x < rect.x1 && y >= rect.y0 && y < rect.y1;
      if (img.at(x, y) != (inside ? 255 : 0)) FAIL("pixel mismatch at " << x << "," << y);
    }
}

TEST_CASE("lower-body mask uses padding ratios (0.5, 0.2)") {
  Skeleton2D s = blank_skeleton(400, 600);
  s.set(JointName::LeftHip, 160, 250);
  s.set(JointName::RightHip, 240, 252);
  s.set(JointName::LeftKnee, 150, 400);
  s.set(JointName::RightKnee, 250, 398);
  s.set(JointName::LeftAnkle, 155, 550);
  s.set(JointName::RightAnkle, 245, 548);
  const RectMask rect = keypoints_to_mask(s, BodyRegion::LowerBody);
  CHECK(rect.x0 == 125);
  CHECK(rect.x1 == 275);
  CHECK(rect.y0 == 220);
  CHECK(rect.y1 == 580);
  CHECK(rect == brute_force_mask(s, BodyRegion::LowerBody, 0.5, 0.2));
}

TEST_CASE("mask agrees with the brute-force oracle on random skeletons") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    Skeleton2D s = blank_skeleton(640, 920);
    for (JointName j : kAllJoints)
      s.set(j, rng.uniform(5.0, 635.0), rng.uniform(5.0, 915.0));
    for (BodyRegion region : {BodyRegion::UpperBody, BodyRegion::LowerBody}) {
      const double k1 = region == BodyRegion::UpperBody ? 0.6 : 0.5;
      const double k2 = region == BodyRegion::UpperBody ? 0.25 : 0.2;
      CHECK(keypoints_to_mask(s, region) == brute_force_mask(s, region, k1, k2));
    }
  }
}

TEST_CASE("mask errors: missing joint and zero span") {
  Skeleton2D s = upper_example();
  s.joint(JointName::LeftWrist).visible = false;
  CHECK_THROWS_MATCHES(keypoints_to_mask(s, BodyRegion::UpperBody), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::MissingJoint;
                       }));

  Skeleton2D degenerate = blank_skeleton(100, 100);
  for (JointName j : kAllJoints) degenerate.set(j, 50, 50);
  CHECK_THROWS_MATCHES(keypoints_to_mask(degenerate, BodyRegion::UpperBody), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::ZeroSpan;
                       }));
}

TEST_CASE("horizontal joints sit strictly inside an unclipped mask") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    Skeleton2D s = blank_skeleton(1000, 1000);
    // Joints well away from the border so the padding never clips.
    for (JointName j : kAllJoints)
      s.set(j, rng.uniform(300.0, 700.0), rng.uniform(300.0, 700.0));
    for (BodyRegion region : {BodyRegion::UpperBody, BodyRegion::LowerBody}) {
      RectMask rect;
      try {
        rect = keypoints_to_mask(s, region);
      } catch (const Error&) {
        continue;  // zero-span draw
      }
      const auto& rule = detail::region_rule(region);
      for (JointName j : rule.horizontal) {
        CHECK(s.joint(j).x > rect.x0);
        CHECK(s.joint(j).x < rect.x1);
      }
    }
  }
}

TEST_CASE("padding is monotone in k1 and k2 before clipping") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Skeleton2D s = blank_skeleton(800, 800);
    for (JointName j : kAllJoints) s.set(j, rng.uniform(100.0, 700.0), rng.uniform(100.0, 700.0));
    const double k1 = rng.uniform(0.0, 1.0);
    const double k2 = rng.uniform(0.0, 1.0);
    const double dk = rng.uniform(0.01, 0.5);
    try {
      const auto base = detail::padded_span(s, BodyRegion::UpperBody, k1, k2);
      const auto wider = detail::padded_span(s, BodyRegion::UpperBody, k1 + dk, k2);
      const auto taller = detail::padded_span(s, BodyRegion::UpperBody, k1, k2 + dk);
      CHECK(wider.x0 <= base.x0);
      CHECK(wider.x1 >= base.x1);
      CHECK(taller.y0 <= base.y0);
      CHECK(taller.y1 >= base.y1);
    } catch (const Error&) {
      // zero-span draw
    }
  }
}

TEST_CASE("body height prefers 3.2x torso, falls back to 2.3x leg") {
  Skeleton2D s = blank_skeleton(400, 1000);
  s.set(JointName::LeftShoulder, 150, 100);
  s.set(JointName::RightShoulder, 250, 100);
  s.set(JointName::LeftHip, 170, 350);
  s.set(JointName::RightHip, 230, 350);
  CHECK(estimate_body_height(s) == Catch::Approx(800.0));  // torso 250

  Skeleton2D legs_only = blank_skeleton(400, 1000);
  legs_only.set(JointName::LeftHip, 170, 300);
  legs_only.set(JointName::RightHip, 230, 300);
  legs_only.set(JointName::LeftAnkle, 170, 500);
  legs_only.set(JointName::RightAnkle, 230, 500);
  CHECK(estimate_body_height(legs_only) == Catch::Approx(460.0));  // leg 200

  Skeleton2D nothing = blank_skeleton(400, 1000);
  nothing.set(JointName::LeftElbow, 100, 100);
  CHECK_THROWS_MATCHES(estimate_body_height(nothing), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::InsufficientJoints;
                       }));
}

TEST_CASE("uneven capsule membership matches a dense interpolation oracle") {
  // Oracle: the hull of two discs is the union of the linearly interpolated
  // discs; sample t densely and compare against the closed-form test away
  // from the decision boundary.
  Rng rng(4242);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec2 c1{rng.uniform(20.0, 80.0), rng.uniform(20.0, 80.0)};
    const Vec2 c2{rng.uniform(20.0, 80.0), rng.uniform(20.0, 80.0)};
    const double r1 = rng.uniform(2.0, 15.0);
    const double r2 = rng.uniform(2.0, 15.0);
    for (int k = 0; k < 60; ++k) {
      const Vec2 p{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
      double best = 1e30;
      for (int i = 0; i <= 4000; ++i) {
        const double t = i / 4000.0;
        const Vec2 c = c1 + (c2 - c1) * t;
        const double r = r1 + (r2 - r1) * t;
        best = std::min(best, norm(p - c) - r);
      }
      if (std::abs(best) < 1e-3) continue;  // too close to the boundary to call
      CHECK(raster::in_uneven_capsule(p, c1, r1, c2, r2) == (best < 0.0));
    }
  }
}

TEST_CASE("dense pose joint circles honor the diameter constants") {
  // Arms held out horizontally so neither limb chain shadows the other:
  // every joint circle is measurable along a clean row or column.
  Skeleton2D s = standard_pose();
  s.set(JointName::LeftElbow, 100, 150);
  s.set(JointName::RightElbow, 500, 150);
  s.set(JointName::LeftWrist, 20, 150);
  s.set(JointName::RightWrist, 580, 150);
  CHECK(estimate_body_height(s) == Catch::Approx(800.0));
  const DensePoseMap map = synthesize_densepose(s);
  REQUIRE(map.provenance == Provenance::Synthesized);

  const auto row_extent = [&](std::uint8_t label, int y, int anchor_x) {
    int min_x = map.labels.width(), max_x = -1;
    for (int x = 0; x < map.labels.width(); ++x)
      if (map.labels.at(x, y) == label) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
      }
    REQUIRE(max_x >= 0);
    return std::pair<int, int>{anchor_x - min_x, max_x - anchor_x};
  };
  const auto col_extent = [&](std::uint8_t label, int x, int anchor_y) {
    int min_y = map.labels.height(), max_y = -1;
    for (int y = 0; y < map.labels.height(); ++y)
      if (map.labels.at(x, y) == label) {
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
    REQUIRE(max_y >= 0);
    return std::pair<int, int>{anchor_y - min_y, max_y - anchor_y};
  };

  // Arm circles measured along the joint columns of the horizontal arm.
  const double H = 800.0;
  const auto shoulder = col_extent(kDpLeftArm, 200, 150);
  CHECK(std::abs((shoulder.first + shoulder.second) - 0.06 * H) <= 1.0);
  const auto elbow = col_extent(kDpLeftArm, 100, 150);
  CHECK(std::abs((elbow.first + elbow.second) - 0.048 * H) <= 1.0);
  const auto wrist = col_extent(kDpLeftArm, 20, 150);
  CHECK(std::abs((wrist.first + wrist.second) - 0.033 * H) <= 1.0);

  // Leg circles along the joint rows of the vertical leg. The torso covers
  // the inner half of the hip circle, so use its outward reach.
  CHECK(std::abs(row_extent(kDpLeftLeg, 400, 230).first * 2.0 - 0.09 * H) <= 1.0);
  const auto knee = row_extent(kDpLeftLeg, 650, 230);
  CHECK(std::abs((knee.first + knee.second) - 0.055 * H) <= 1.0);
  const auto ankle = row_extent(kDpLeftLeg, 900, 230);
  CHECK(std::abs((ankle.first + ankle.second) - 0.03 * H) <= 1.0);
}

TEST_CASE("straight arm stays within half the max diameter of its segment") {
  const Skeleton2D s = standard_pose();
  const DensePoseMap map = synthesize_densepose(s);
  const double max_r = arm_radii(800.0).root;
  // Left arm segment is the vertical line x=200, y in [150, 490].
  for (int y = 0; y < map.labels.height(); ++y)
    for (int x = 0; x < map.labels.width(); ++x) {
      if (map.labels.at(x, y) != kDpLeftArm) continue;
      const double cy = std::clamp<double>(y, 150.0, 490.0);
      const double d = std::hypot(x - 200.0, y - cy);
      if (d > max_r + 1e-9) FAIL("arm pixel escapes capsule at " << x << "," << y);
    }
}

TEST_CASE("torso label is present at the quadrilateral centroid") {
  const Skeleton2D s = standard_pose();
  const DensePoseMap map = synthesize_densepose(s);
  const int cx = (200 + 400 + 370 + 230) / 4;
  const int cy = (150 + 150 + 400 + 400) / 4;
  CHECK(map.labels.at(cx, cy) == kDpTorso);
}

TEST_CASE("torso caps bulge beyond the chords") {
  const Skeleton2D s = standard_pose();
  const DensePoseMap map = synthesize_densepose(s);
  // Mid-shoulder above the chord and mid-hip below it fall inside the caps
  // (sagitta is 0.15x the chord: 30px for the 200px shoulder line).
  CHECK(map.labels.at(300, 150 - 15) == kDpTorso);
  CHECK(map.labels.at(300, 400 + 10) == kDpTorso);
  // Beyond the sagitta the cap ends.
  CHECK(map.labels.at(300, 150 - 45) == kDpBackground);
}

TEST_CASE("part priority is torso over arms over legs") {
  // Crossed pose: pull the wrists onto the torso and the knees up over the
  // arms' reach to force overlaps.
  Skeleton2D s = standard_pose();
  s.set(JointName::LeftWrist, 300, 300);   // wrist inside the torso quad
  const DensePoseMap map = synthesize_densepose(s);
  CHECK(map.labels.at(300, 300) == kDpTorso);  // torso wins over the arm
}

TEST_CASE("synthesis requires shoulders and hips") {
  Skeleton2D s = standard_pose();
  s.joint(JointName::LeftHip).visible = false;
  CHECK_THROWS_MATCHES(synthesize_densepose(s), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::MissingJoint;
                       }));
}

TEST_CASE("translation equivariance of mask and dense pose") {
  const int dx = 37, dy = 23;
  Skeleton2D base = standard_pose();
  Skeleton2D moved = base;
  for (JointName j : kAllJoints) {
    moved.joint(j).x += dx;
    moved.joint(j).y += dy;
  }

  const RectMask r0 = keypoints_to_mask(base, BodyRegion::UpperBody);
  const RectMask r1 = keypoints_to_mask(moved, BodyRegion::UpperBody);
  CHECK(r1.x0 == r0.x0 + dx);
  CHECK(r1.x1 == r0.x1 + dx);
  CHECK(r1.y0 == r0.y0 + dy);
  CHECK(r1.y1 == r0.y1 + dy);

  const DensePoseMap m0 = synthesize_densepose(base);
  const DensePoseMap m1 = synthesize_densepose(moved);
  for (int y = 0; y < m0.labels.height(); ++y)
    for (int x = 0; x < m0.labels.width(); ++x) {
      if (!m0.labels.in_bounds(x + dx, y + dy)) continue;
      if (m0.labels.at(x, y) != m1.labels.at(x + dx, y + dy))
        FAIL("dense pose not equivariant at " << x << "," << y);
    }
}

TEST_CASE("intersection keeps synthesized labels on the common foreground") {
  const Skeleton2D s = standard_pose();
  const DensePoseMap synth = synthesize_densepose(s);

  DensePoseMap full;
  full.labels = Image<std::uint8_t>(600, 1100, kDpTorso);
  const DensePoseMap kept = intersect_densepose(synth, full);
  CHECK(kept.provenance == Provenance::Intersected);
  CHECK(kept.labels == synth.labels);

  DensePoseMap empty;
  empty.labels = Image<std::uint8_t>(600, 1100, kDpBackground);
  const DensePoseMap cleared = intersect_densepose(synth, empty);
  for (auto v : cleared.labels.pixels())
    if (v != kDpBackground) FAIL("pixel survived empty intersection");

  // Disjoint foregrounds: prediction only covers a corner the figure never
  // reaches, so nothing survives.
  DensePoseMap corner;
  corner.labels = Image<std::uint8_t>(600, 1100, kDpBackground);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) corner.labels.at(x, y) = kDpTorso;
  const DensePoseMap disjoint = intersect_densepose(synth, corner);
  for (auto v : disjoint.labels.pixels())
    if (v != kDpBackground) FAIL("pixel survived disjoint intersection");

  // Half-frame predicted foreground: the result is synth on that half,
  // background elsewhere -- and intersecting twice is a no-op.
  DensePoseMap half;
  half.labels = Image<std::uint8_t>(600, 1100, kDpBackground);
  for (int y = 0; y < 550; ++y)
    for (int x = 0; x < 600; ++x) half.labels.at(x, y) = kDpLeftArm;
  const DensePoseMap once = intersect_densepose(synth, half);
  const DensePoseMap twice = intersect_densepose(once, half);
  CHECK(once.labels == twice.labels);
  std::int64_t fg_synth = 0, fg_once = 0;
  for (auto v : synth.labels.pixels()) fg_synth += v != kDpBackground;
  for (auto v : once.labels.pixels()) fg_once += v != kDpBackground;
  CHECK(fg_once <= fg_synth);
  for (int y = 0; y < 1100; ++y)
    for (int x = 0; x < 600; ++x) {
      const std::uint8_t expect = y < 550 ? synth.labels.at(x, y) : kDpBackground;
      if (once.labels.at(x, y) != expect) FAIL("bad intersection at " << x << "," << y);
    }

  DensePoseMap small;
  small.labels = Image<std::uint8_t>(10, 10, 0);
  CHECK_THROWS_MATCHES(intersect_densepose(synth, small), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::DimensionMismatch;
                       }));
}

TEST_CASE("skeleton JSON round-trips and validates") {
  const Skeleton2D s = standard_pose();
  const Skeleton2D parsed = skeleton_from_json(skeleton_to_json(s));
  CHECK(parsed.image_width == s.image_width);
  for (JointName j : kAllJoints) {
    CHECK(parsed.joint(j).x == s.joint(j).x);
    CHECK(parsed.joint(j).y == s.joint(j).y);
    CHECK(parsed.joint(j).visible == s.joint(j).visible);
  }

  CHECK_THROWS_AS(skeleton_from_json("{not json"), Error);
  // Visible joint outside the canvas violates the skeleton invariant.
  CHECK_THROWS_AS(
      skeleton_from_json(R"({"image_width": 10, "image_height": 10,
                             "joints": {"left_shoulder": [20, 5, true]}})"),
      Error);
  // Unknown joints are ignored, visibility accepts 0/1 numbers.
  const Skeleton2D partial = skeleton_from_json(
      R"({"image_width": 100, "image_height": 100,
          "joints": {"nose": [1, 1, 1], "left_hip": [40, 60, 1], "right_hip": [60, 60, 0]}})");
  CHECK(partial.visible(JointName::LeftHip));
  CHECK_FALSE(partial.visible(JointName::RightHip));
}
