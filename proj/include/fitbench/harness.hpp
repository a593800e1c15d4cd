#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fitbench/core.hpp"
#include "fitbench/raster.hpp"
#include "fitbench/shape_metrics.hpp"

namespace fitbench {

// -------------------------------------------------------------- fit classes

enum class FitClass : int { Slim = 0, Regular, Loose, Tapered, Straight };
enum class GarmentKind { Top, Bottom };

inline GarmentKind garment_kind(FitClass fit) {
  return (fit == FitClass::Tapered || fit == FitClass::Straight) ? GarmentKind::Bottom
                                                                 : GarmentKind::Top;
}

inline const char* fit_name(FitClass fit) {
  switch (fit) {
    case FitClass::Slim: return "slim";
    case FitClass::Regular: return "regular";
    case FitClass::Loose: return "loose";
    case FitClass::Tapered: return "tapered";
    case FitClass::Straight: return "straight";
  }
  return "unknown";
}

inline std::optional<FitClass> fit_from_name(std::string_view name) {
  for (FitClass f : {FitClass::Slim, FitClass::Regular, FitClass::Loose, FitClass::Tapered,
                     FitClass::Straight})
    if (name == fit_name(f)) return f;
  return std::nullopt;
}

inline std::vector<FitClass> fit_classes(GarmentKind kind) {
  if (kind == GarmentKind::Top) return {FitClass::Slim, FitClass::Regular, FitClass::Loose};
  return {FitClass::Tapered, FitClass::Straight};
}

// --------------------------------------------------------------- silhouette

/// Garment width factor range relative to body width, per fit.
inline std::pair<double, double> fit_width_range(FitClass fit) {
  switch (fit) {
    case FitClass::Slim: return {0.90, 1.00};
    case FitClass::Regular: return {1.05, 1.15};
    case FitClass::Loose: return {1.25, 1.40};
    default: return {1.0, 1.0};  // bottoms use the taper parameter instead
  }
}

/// Tapered trousers narrow the ankle to this fraction of the hip width.
inline std::pair<double, double> fit_taper_range() { return {0.50, 0.65}; }

/// Deterministic labeled silhouette: a fixed body plus a garment whose
/// torso/sleeve width (tops) or leg taper (bottoms) is driven by the fit
/// class, with small per-seed jitter on every boundary. The same (fit, seed,
/// canvas) always yields the same layout; only the fit-to-width mapping
/// differs across fits for one seed, so families are directly comparable.
///
/// Garments are deliberately chiral (unequal sleeves, slanted hem, unequal
/// trouser legs) the way posed photographs are: with a mirror-symmetric
/// silhouette the odd-order Hu invariants hover around zero where
/// rasterization noise flips their sign, and the sign-log distance turns
/// that into pure noise.
inline LayoutMap synth_silhouette(FitClass fit, int seed, int canvas_height, int canvas_width) {
  if (canvas_height < 64 || canvas_width < 48)
    throw Error(ErrorKind::CanvasTooSmall, "canvas must be at least 64x48");

  constexpr double kTau = 6.283185307179586;
  const double H = canvas_height;
  const double W = canvas_width;
  const double cx = W / 2.0;

  Rng rng(static_cast<std::uint32_t>(seed));
  const double u_width = rng.uniform();              // position in the fit width range
  const double j_hem = rng.uniform(-1.0, 1.0);       // hem height jitter
  const double j_sleeve_l = rng.uniform(-1.0, 1.0);  // sleeve length jitters
  const double j_sleeve_r = rng.uniform(-1.0, 1.0);
  const double wob_phase = rng.uniform(0.0, kTau);
  const double wob_freq = rng.uniform(1.5, 3.5);
  const double u_taper = rng.uniform();              // position in the taper range
  const double j_legw = rng.uniform(-1.0, 1.0);      // leg width jitter
  const double j_arm = rng.uniform(-1.0, 1.0);       // arm pose jitter

  LayoutMap layout(canvas_width, canvas_height, kLayoutBackground);

  // Body silhouette, shared by all fits.
  const double body_half = 0.115 * W;
  const Vec2 l_shoulder{cx - body_half, 0.19 * H};
  const Vec2 r_shoulder{cx + body_half, 0.19 * H};
  raster::paint_disc(layout, {cx, 0.09 * H}, 0.05 * H, kLayoutBody);
  raster::paint(layout, cx - 0.02 * W, 0.12 * H, cx + 0.02 * W, 0.17 * H, kLayoutBody,
                [](Vec2) { return true; });
  raster::paint(layout, cx - body_half, 0.17 * H, cx + body_half, 0.46 * H, kLayoutBody,
                [](Vec2) { return true; });
  const double wrist_dx = (0.115 + 0.09 + 0.012 * j_arm) * W;
  raster::paint_capsule(layout, l_shoulder, 0.030 * W, {cx - wrist_dx, 0.55 * H}, 0.024 * W,
                        kLayoutBody);
  raster::paint_capsule(layout, r_shoulder, 0.030 * W, {cx + wrist_dx, 0.55 * H}, 0.024 * W,
                        kLayoutBody);
  for (double side : {-1.0, 1.0}) {
    const double leg_cx = cx + side * 0.10 * W;
    raster::paint(layout, leg_cx - 0.05 * W, 0.46 * H, leg_cx + 0.05 * W, 0.93 * H, kLayoutBody,
                  [](Vec2) { return true; });
  }

  if (garment_kind(fit) == GarmentKind::Top) {
    const auto [lo, hi] = fit_width_range(fit);
    const double factor = lo + u_width * (hi - lo);
    const double top_y = 0.17 * H;
    // Hem slants down toward the left; the slant scales with the width
    // factor so wide fits stay as chiral as narrow ones.
    const double hem_right = (0.46 + 0.012 * j_hem) * H;
    const double hem_left = hem_right + factor * 0.22 * H;
    const int y0 = static_cast<int>(std::ceil(top_y));
    const int y1 = std::min(canvas_height - 1, static_cast<int>(std::floor(hem_left)));
    for (int y = y0; y <= y1; ++y) {
      const double t = (y - top_y) / (hem_left - top_y);
      const double hw =
          factor * body_half * (1.0 + 0.020 * std::sin(kTau * wob_freq * t + wob_phase));
      const int xa = std::max(0, static_cast<int>(std::ceil(cx - hw)));
      const int xb = std::min(canvas_width - 1, static_cast<int>(std::floor(cx + hw)));
      for (int x = xa; x <= xb; ++x) {
        const double u = xb > xa ? static_cast<double>(x - xa) / (xb - xa) : 0.0;
        const double hem = hem_left + (hem_right - hem_left) * u;
        if (y <= hem) layout.at(x, y) = kLayoutGarment;
      }
    }
    // Sleeves as tapered capsules off the garment shoulder line; the left
    // one runs much longer and thicker than the right, again scaling with
    // the width factor.
    const double sleeve_l_y = (0.20 + factor * (0.28 + 0.010 * j_sleeve_l)) * H;
    const double sleeve_r_y = (0.20 + factor * (0.06 + 0.010 * j_sleeve_r)) * H;
    const Vec2 l_root{cx - factor * body_half, 0.20 * H};
    const Vec2 r_root{cx + factor * body_half, 0.20 * H};
    raster::paint_capsule(layout, l_root, factor * 0.060 * W,
                          {cx - factor * (0.115 + 0.140) * W, sleeve_l_y}, factor * 0.050 * W,
                          kLayoutGarment);
    raster::paint_capsule(layout, r_root, factor * 0.042 * W,
                          {cx + factor * (0.115 + 0.050) * W, sleeve_r_y}, factor * 0.032 * W,
                          kLayoutGarment);
  } else {
    // Waistband with a bottom edge dipping toward the left.
    const double waist_half = 0.15 * W * (1.0 + 0.02 * j_legw);
    const int wy0 = static_cast<int>(std::ceil(0.46 * H));
    const int wy1 = std::min(canvas_height - 1, static_cast<int>(std::floor(0.54 * H)));
    const int wxa = std::max(0, static_cast<int>(std::ceil(cx - waist_half)));
    const int wxb = std::min(canvas_width - 1, static_cast<int>(std::floor(cx + waist_half)));
    for (int y = wy0; y <= wy1; ++y)
      for (int x = wxa; x <= wxb; ++x) {
        const double u = wxb > wxa ? static_cast<double>(x - wxa) / (wxb - wxa) : 0.0;
        const double bottom = (0.50 + 0.04 * (1.0 - u)) * H;
        if (y <= bottom) layout.at(x, y) = kLayoutGarment;
      }

    const double hip_y = 0.50 * H;
    const double taper =
        fit == FitClass::Tapered ? fit_taper_range().first + u_taper * (fit_taper_range().second -
                                                                        fit_taper_range().first)
                                 : 1.0;
    for (double side : {-1.0, 1.0}) {
      // Left leg cut wider and hanging lower than the right.
      const double w_top = (side < 0 ? 0.100 : 0.070) * W * (1.0 + 0.05 * j_legw);
      const double ankle_y = ((side < 0 ? 0.92 : 0.75) + 0.012 * j_hem) * H;
      const double leg_cx = cx + side * 0.12 * W;
      const int y0 = static_cast<int>(std::ceil(hip_y));
      const int y1 = std::min(canvas_height - 1, static_cast<int>(std::floor(ankle_y)));
      for (int y = y0; y <= y1; ++y) {
        const double t = (y - hip_y) / (ankle_y - hip_y);
        const double hw = w_top * (1.0 - t + t * taper);
        const int xa = std::max(0, static_cast<int>(std::ceil(leg_cx - hw)));
        const int xb = std::min(canvas_width - 1, static_cast<int>(std::floor(leg_cx + hw)));
        for (int x = xa; x <= xb; ++x) layout.at(x, y) = kLayoutGarment;
      }
    }
  }
  return layout;
}

// ------------------------------------------------------------ fit confusion

struct LabeledLayout {
  LayoutMap layout;
  FitClass fit = FitClass::Slim;
  std::string pair_id;  // optional; required for paired mode
};

enum class PairingMode { AllPairs, Paired };

struct FitCell {
  double mean_hu = 0.0;
  double mean_hd = 0.0;
  std::int64_t count = 0;
  bool operator==(const FitCell&) const = default;
};

struct PairRecord {
  std::int64_t generated_index = 0;
  std::int64_t source_index = 0;
  double hu = 0.0;
  double hd = 0.0;
  bool operator==(const PairRecord&) const = default;
};

/// Fit confusion structure: one cell of mean Hu / Hausdorff
/// distances per (generated fit, source fit) pair.
struct FitReport {
  GarmentKind kind = GarmentKind::Top;
  std::vector<std::tuple<FitClass, FitClass, FitCell>> cells;  // generated-major order
  std::vector<PairRecord> per_pair;

  bool operator==(const FitReport&) const = default;

  const FitCell* find(FitClass generated, FitClass source) const {
    for (const auto& [g, s, cell] : cells)
      if (g == generated && s == source) return &cell;
    return nullptr;
  }
};

struct ConfusionOptions {
  PairingMode pairing = PairingMode::AllPairs;
  int parallelism = 1;
  bool keep_pair_records = false;
  int hausdorff_stride = 1;
};

namespace detail {

struct ItemFeatures {
  HuVector hu{};
  Contour contour;
};

inline std::vector<ItemFeatures> compute_features(const std::vector<LabeledLayout>& items,
                                                  int parallelism) {
  std::vector<ItemFeatures> features(items.size());
  parallel_for(static_cast<std::int64_t>(items.size()), parallelism, [&](std::int64_t i) {
    // Contour first: a garment-free layout surfaces as EmptyClass.
    features[i].contour = extract_garment_contour(items[i].layout);
    features[i].hu = hu_vector(label_mask(items[i].layout, kLayoutGarment));
  });
  return features;
}

}  // namespace detail

/// Confusion protocol over labeled layout sets: every generated layout is
/// compared against source layouts (all of them within each cell, or its
/// designated pair_id counterpart in paired mode) and cell means of the Hu
/// and Hausdorff distances on garment contours are reported.
inline FitReport fit_confusion(const std::vector<LabeledLayout>& generated,
                               const std::vector<LabeledLayout>& sources,
                               const ConfusionOptions& options = {}) {
  if (generated.empty() || sources.empty())
    throw Error(ErrorKind::EmptyCell, "generated and source lists must be non-empty");

  const GarmentKind kind = garment_kind(generated.front().fit);
  for (const auto& item : generated)
    if (garment_kind(item.fit) != kind)
      throw Error(ErrorKind::MixedKinds, "generated list mixes tops and bottoms");
  for (const auto& item : sources)
    if (garment_kind(item.fit) != kind)
      throw Error(ErrorKind::MixedKinds, "source list mixes tops and bottoms");

  const std::vector<FitClass> classes = fit_classes(kind);
  for (FitClass cls : classes) {
    const auto has = [cls](const std::vector<LabeledLayout>& list) {
      for (const auto& item : list)
        if (item.fit == cls) return true;
      return false;
    };
    if (!has(generated) || !has(sources))
      throw Error(ErrorKind::EmptyCell, std::string("no samples for fit class ") + fit_name(cls));
  }

  const auto gen_features = detail::compute_features(generated, options.parallelism);
  const auto src_features = detail::compute_features(sources, options.parallelism);

  // Distances land in per-index slots so the sequential reduction below is
  // independent of the parallelism setting.
  std::vector<PairRecord> records;
  if (options.pairing == PairingMode::Paired) {
    std::map<std::string, std::int64_t> source_by_id;
    for (std::size_t j = 0; j < sources.size(); ++j) {
      if (sources[j].pair_id.empty())
        throw Error(ErrorKind::ParseError, "paired mode requires pair_id on every source");
      if (!source_by_id.emplace(sources[j].pair_id, static_cast<std::int64_t>(j)).second)
        throw Error(ErrorKind::ParseError, "duplicate source pair_id: " + sources[j].pair_id);
    }
    records.resize(generated.size());
    parallel_for(static_cast<std::int64_t>(generated.size()), options.parallelism,
                 [&](std::int64_t i) {
                   const auto it = source_by_id.find(generated[i].pair_id);
                   if (it == source_by_id.end())
                     throw Error(ErrorKind::ParseError,
                                 "no source with pair_id: " + generated[i].pair_id);
                   const std::int64_t j = it->second;
                   records[i] = {i, j, hu_distance(gen_features[i].hu, src_features[j].hu),
                                 hausdorff_distance(gen_features[i].contour,
                                                    src_features[j].contour,
                                                    options.hausdorff_stride)};
                 });
  } else {
    records.resize(generated.size() * sources.size());
    parallel_for(static_cast<std::int64_t>(generated.size()), options.parallelism,
                 [&](std::int64_t i) {
                   for (std::size_t j = 0; j < sources.size(); ++j) {
                     records[i * sources.size() + j] = {
                         i, static_cast<std::int64_t>(j),
                         hu_distance(gen_features[i].hu, src_features[j].hu),
                         hausdorff_distance(gen_features[i].contour, src_features[j].contour,
                                            options.hausdorff_stride)};
                   }
                 });
  }

  std::map<std::pair<int, int>, FitCell> cells;
  for (const PairRecord& rec : records) {
    const int g = static_cast<int>(generated[rec.generated_index].fit);
    const int s = static_cast<int>(sources[rec.source_index].fit);
    FitCell& cell = cells[{g, s}];
    cell.mean_hu += rec.hu;
    cell.mean_hd += rec.hd;
    ++cell.count;
  }

  FitReport report;
  report.kind = kind;
  for (FitClass g : classes) {
    for (FitClass s : classes) {
      const auto it = cells.find({static_cast<int>(g), static_cast<int>(s)});
      if (it == cells.end()) continue;
      FitCell cell = it->second;
      cell.mean_hu /= cell.count;
      cell.mean_hd /= cell.count;
      report.cells.emplace_back(g, s, cell);
    }
  }
  if (options.keep_pair_records) report.per_pair = std::move(records);
  return report;
}

// ---------------------------------------------------------------- rendering

enum class ReportFormat { Json, Csv, Markdown };

namespace detail {

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Deterministic serialization of a fit report. The markdown layout mirrors
/// the confusion table: one row per generated fit, Hu/Hd sub-columns per
/// source fit.
inline std::string render_report(const FitReport& report, ReportFormat format) {
  const std::vector<FitClass> classes = fit_classes(report.kind);

  if (format == ReportFormat::Json) {
    nlohmann::ordered_json doc;
    doc["kind"] = report.kind == GarmentKind::Top ? "top" : "bottom";
    doc["cells"] = nlohmann::ordered_json::array();
    for (const auto& [g, s, cell] : report.cells) {
      doc["cells"].push_back({{"generated", fit_name(g)},
                              {"source", fit_name(s)},
                              {"mean_hu", cell.mean_hu},
                              {"mean_hd", cell.mean_hd},
                              {"count", cell.count}});
    }
    if (!report.per_pair.empty()) {
      doc["per_pair"] = nlohmann::ordered_json::array();
      for (const PairRecord& rec : report.per_pair)
        doc["per_pair"].push_back({{"generated_index", rec.generated_index},
                                   {"source_index", rec.source_index},
                                   {"hu", rec.hu},
                                   {"hd", rec.hd}});
    }
    return doc.dump(2) + "\n";
  }

  if (format == ReportFormat::Csv) {
    std::string out = "generated,source,mean_hu,mean_hd,count\n";
    for (const auto& [g, s, cell] : report.cells) {
      out += fit_name(g);
      out += ',';
      out += fit_name(s);
      out += ',';
      out += detail::format_double(cell.mean_hu);
      out += ',';
      out += detail::format_double(cell.mean_hd);
      out += ',';
      out += std::to_string(cell.count);
      out += '\n';
    }
    return out;
  }

  // Markdown.
  std::string out = "| pd \\ gt |";
  for (FitClass s : classes) {
    out += " ";
    out += fit_name(s);
    out += " Hu | ";
    out += fit_name(s);
    out += " Hd |";
  }
  out += "\n|---|";
  for (std::size_t i = 0; i < classes.size() * 2; ++i) out += "---|";
  out += "\n";
  for (FitClass g : classes) {
    out += "| ";
    out += fit_name(g);
    out += " |";
    for (FitClass s : classes) {
      const FitCell* cell = report.find(g, s);
      if (cell) {
        out += " " + detail::format_fixed(cell->mean_hu, 4) + " | " +
               detail::format_fixed(cell->mean_hd, 4) + " |";
      } else {
        out += " - | - |";
      }
    }
    out += "\n";
  }
  return out;
}

/// Inverse of render_report for the JSON format.
inline FitReport parse_report(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report parse: ") + e.what());
  }
  FitReport report;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind != "top" && kind != "bottom")
    throw Error(ErrorKind::ParseError, "unknown garment kind: " + kind);
  report.kind = kind == "top" ? GarmentKind::Top : GarmentKind::Bottom;
  for (const auto& item : doc.at("cells")) {
    const auto g = fit_from_name(item.at("generated").get<std::string>());
    const auto s = fit_from_name(item.at("source").get<std::string>());
    if (!g || !s) throw Error(ErrorKind::ParseError, "unknown fit class in report");
    FitCell cell{item.at("mean_hu").get<double>(), item.at("mean_hd").get<double>(),
                 item.at("count").get<std::int64_t>()};
    report.cells.emplace_back(*g, *s, cell);
  }
  if (doc.contains("per_pair")) {
    for (const auto& item : doc.at("per_pair"))
      report.per_pair.push_back({item.at("generated_index").get<std::int64_t>(),
                                 item.at("source_index").get<std::int64_t>(),
                                 item.at("hu").get<double>(), item.at("hd").get<double>()});
  }
  return report;
}

// ----------------------------------------------------------------- manifest

/// One dataset manifest row: a layout image path, its fit label, and an
/// optional pairing id.
struct ManifestEntry {
  std::string layout_path;
  FitClass fit = FitClass::Slim;
  std::string pair_id;
};

inline std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                                 const std::string& origin = "<manifest>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::ParseError, origin + ": manifest must be a list");
  std::vector<ManifestEntry> entries;
  entries.reserve(doc.size());
  for (const auto& item : doc) {
    ManifestEntry entry;
    try {
      entry.layout_path = item.at("layout").get<std::string>();
      const std::string fit = item.at("fit").get<std::string>();
      const auto parsed = fit_from_name(fit);
      if (!parsed) throw Error(ErrorKind::ParseError, origin + ": unknown fit " + fit);
      entry.fit = *parsed;
      if (item.contains("pair_id")) entry.pair_id = item.at("pair_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, origin + ": " + e.what());
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace fitbench
