#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

#include "fitbench/cond_kernel.hpp"
#include "fitbench/core.hpp"
#include "fitbench/harness.hpp"
#include "fitbench/raster.hpp"
#include "fitbench/shape_metrics.hpp"

namespace fitbench {

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfTestOptions {
  std::uint32_t seed = 7u;
  int parallelism = 4;
  int diagonal_seeds = 30;     // seeds per fit family for the confusion check
  std::string inject_fault;    // test hook; "hu-perturb" skews the disk invariant
};

namespace selftest_detail {

inline Contour random_point_set(Rng& rng, int max_points, int coord_range) {
  const int n = rng.uniform_int(1, max_points);
  Contour points;
  points.reserve(n);
  for (int i = 0; i < n; ++i)
    points.push_back({rng.uniform_int(0, coord_range - 1), rng.uniform_int(0, coord_range - 1)});
  return points;
}

inline bool same_point_set(const Contour& a, const Contour& b) {
  std::set<std::pair<int, int>> sa, sb;
  for (auto p : a) sa.insert({p.x, p.y});
  for (auto p : b) sb.insert({p.x, p.y});
  return sa == sb;
}

/// Exact triangle inequality on squared Hausdorff values:
/// sqrt(ac) <= sqrt(ab) + sqrt(bc)  <=>  ac - ab - bc <= 2*sqrt(ab*bc),
/// checked in integer arithmetic.
inline bool triangle_holds(std::int64_t ac, std::int64_t ab, std::int64_t bc) {
  const std::int64_t lhs = ac - ab - bc;
  if (lhs <= 0) return true;
  const __int128 l2 = static_cast<__int128>(lhs) * lhs;
  const __int128 r2 = static_cast<__int128>(4) * ab * bc;
  return l2 <= r2;
}

}  // namespace selftest_detail

/// Built-in invariant suite: the checks a fresh build must pass before any
/// dataset run is trusted.
inline std::vector<SelfTestCheck> run_selftest(const SelfTestOptions& options = {}) {
  std::vector<SelfTestCheck> checks;

  // Disk Hu invariant: a solid disk has phi1 = 1/(2*pi) in the continuous
  // limit.
  {
    SelfTestCheck check{"hu_disk_phi1", false, ""};
    BinaryMask disk(256, 256, 0);
    raster::paint_disc(disk, {128.0, 128.0}, 100.0, 1);
    double phi1 = hu_vector(disk)[0];
    if (options.inject_fault == "hu-perturb") phi1 += 0.01;
    const double expected = 1.0 / (2.0 * 3.14159265358979323846);
    const double err = std::abs(phi1 - expected);
    check.passed = err < 1e-3;
    check.detail = "|phi1 - 1/(2pi)| = " + std::to_string(err);
    checks.push_back(check);
  }

  // Hausdorff metric axioms on random point sets, exact arithmetic.
  {
    SelfTestCheck check{"hausdorff_metric_axioms", true, ""};
    Rng rng(options.seed);
    for (int trial = 0; trial < 200 && check.passed; ++trial) {
      const Contour a = selftest_detail::random_point_set(rng, 24, 64);
      const Contour b = selftest_detail::random_point_set(rng, 24, 64);
      const Contour c = selftest_detail::random_point_set(rng, 24, 64);
      const std::int64_t ab = hausdorff_distance_sq(a, b);
      const std::int64_t ba = hausdorff_distance_sq(b, a);
      const std::int64_t bc = hausdorff_distance_sq(b, c);
      const std::int64_t ac = hausdorff_distance_sq(a, c);
      if (ab < 0 || hausdorff_distance_sq(a, a) != 0) check.passed = false;
      if (ab != ba) check.passed = false;
      if (ab == 0 && !selftest_detail::same_point_set(a, b)) check.passed = false;
      if (!selftest_detail::triangle_holds(ac, ab, bc)) check.passed = false;
    }
    check.detail = "200 random triples";
    checks.push_back(check);
  }

  // FiLM with gamma=1, beta=0 is a pure standardization. The fixture tensor
  // goes through the FCT1 container on the way in, so the self-test also
  // covers serialization.
  {
    SelfTestCheck check{"film_standardizes", true, ""};
    Rng rng(options.seed + 1);
    Tensor4 fixture(2, 6, 24, 24);
    for (float& v : fixture.data) v = static_cast<float>(rng.uniform(-3.0, 5.0));
    const auto path = std::filesystem::temp_directory_path() /
                      ("fitbench_selftest_" + std::to_string(::getpid()) + ".fct");
    write_tensor(path.string(), fixture);
    const Tensor4 h = read_tensor(path.string());
    std::filesystem::remove(path);
    if (!(h == fixture)) {
      check.passed = false;
      check.detail = "tensor container round-trip failed";
    } else {
      const Tensor4 out = film_modulate(h, FiLMParams::constant(6, 1.0f, 0.0f));
      double worst = 0.0;
      for (std::int64_t ch = 0; ch < out.c; ++ch) {
        double sum = 0.0, sum_sq = 0.0;
        const std::int64_t count = out.n * out.h * out.w;
        for (std::int64_t b = 0; b < out.n; ++b)
          for (std::int64_t y = 0; y < out.h; ++y)
            for (std::int64_t x = 0; x < out.w; ++x) {
              const double v = out.at(b, ch, y, x);
              sum += v;
              sum_sq += v * v;
            }
        const double mean = sum / count;
        const double var = sum_sq / count - mean * mean;
        worst = std::max({worst, std::abs(mean), std::abs(var - 1.0)});
      }
      check.passed = worst < 1e-5;
      check.detail = "max |mean|, |var-1| = " + std::to_string(worst);
    }
    checks.push_back(check);
  }

  // Zero-initialized projection injects exactly nothing.
  {
    SelfTestCheck check{"zero_init_contract", true, ""};
    Rng rng(options.seed + 2);
    ScaleBundle bundle;
    for (int s = 0; s < 2; ++s) {
      Tensor4 t(1, 4, 8 << s, 6 << s);
      for (float& v : t.data) v = static_cast<float>(rng.uniform(0.1, 1.0));
      bundle.scales.push_back({std::move(t), s});
    }
    std::vector<ScaleProjection> projections = {ScaleProjection::zeros(4, 4),
                                                ScaleProjection::zeros(4, 4)};
    const ScaleBundle injected = zero_init_project(bundle, projections);
    for (std::size_t s = 0; s < bundle.scales.size(); ++s) {
      for (std::size_t i = 0; i < injected.scales[s].features.data.size(); ++i) {
        const float inj = injected.scales[s].features.data[i];
        const float before = bundle.scales[s].features.data[i];
        const float after = before + inj;
        if (inj != 0.0f || std::memcmp(&before, &after, sizeof(float)) != 0) {
          check.passed = false;
          break;
        }
      }
    }
    check.detail = "injection is bitwise zero";
    checks.push_back(check);
  }

  // Synthetic confusion matrix is diagonal-minimal for both metrics.
  {
    SelfTestCheck check{"diagonal_minimal", true, ""};
    std::vector<LabeledLayout> family;
    const std::vector<FitClass> tops = {FitClass::Slim, FitClass::Regular, FitClass::Loose};
    for (FitClass fit : tops)
      for (int seed = 0; seed < options.diagonal_seeds; ++seed)
        family.push_back({synth_silhouette(fit, seed, 96, 72), fit, ""});
    ConfusionOptions conf;
    conf.parallelism = options.parallelism;
    const FitReport report = fit_confusion(family, family, conf);
    for (FitClass g : tops) {
      const FitCell* diag = report.find(g, g);
      for (FitClass s : tops) {
        if (s == g) continue;
        const FitCell* off = report.find(g, s);
        if (!diag || !off || diag->mean_hu >= off->mean_hu || diag->mean_hd >= off->mean_hd)
          check.passed = false;
      }
    }
    check.detail = std::to_string(options.diagonal_seeds) + " seeds per fit";
    checks.push_back(check);
  }

  return checks;
}

inline bool all_passed(const std::vector<SelfTestCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const SelfTestCheck& c) { return c.passed; });
}

}  // namespace fitbench
