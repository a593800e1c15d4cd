// fitbench: batch preprocessing and fit-consistency evaluation for layout
// datasets. Subcommands: mask, densepose, contour, metrics, report, selftest.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fitbench/cond_kernel.hpp"
#include "fitbench/core.hpp"
#include "fitbench/geometry.hpp"
#include "fitbench/harness.hpp"
#include "fitbench/json_io.hpp"
#include "fitbench/png_io.hpp"
#include "fitbench/selftest.hpp"
#include "fitbench/shape_metrics.hpp"

namespace fs = std::filesystem;
using namespace fitbench;

namespace {

enum ExitStatus { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel g_log_level = LogLevel::Warn;

void init_logging() {
  const char* env = std::getenv("FITBENCH_LOG");
  if (!env) return;
  const std::string level(env);
  if (level == "error") g_log_level = LogLevel::Error;
  else if (level == "warn") g_log_level = LogLevel::Warn;
  else if (level == "info") g_log_level = LogLevel::Info;
  else if (level == "debug") g_log_level = LogLevel::Debug;
}

void log(LogLevel level, const std::string& message) {
  if (level > g_log_level) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

/// Sorted listing of files with the given extension.
std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir))
    throw Error(ErrorKind::IoError, "not a readable directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

struct FileStatus {
  bool failed = false;
  std::string message;
};

/// Runs fn over the files under a worker pool, then reports failures in
/// input order and maps them onto the exit-code policy: 0 clean, 1 any
/// per-file failure, warnings for an empty input set.
template <typename Fn>
int run_per_file(const std::vector<fs::path>& files, int parallelism, Fn&& fn) {
  if (files.empty()) {
    log(LogLevel::Warn, "no input files matched; nothing to do");
    return kExitOk;
  }
  std::vector<FileStatus> status(files.size());
  parallel_for(static_cast<std::int64_t>(files.size()), parallelism, [&](std::int64_t i) {
    try {
      fn(files[i]);
    } catch (const std::exception& e) {
      status[i] = {true, e.what()};
    }
  });
  int failures = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!status[i].failed) continue;
    ++failures;
    log(LogLevel::Error, files[i].string() + ": " + status[i].message);
  }
  if (failures > 0) {
    log(LogLevel::Warn, std::to_string(failures) + " of " + std::to_string(files.size()) +
                            " files failed");
    return kExitPartial;
  }
  log(LogLevel::Info, "processed " + std::to_string(files.size()) + " files");
  return kExitOk;
}

int cmd_mask(const std::string& in_dir, const std::string& out_dir, const std::string& region_name,
             int parallelism) {
  const BodyRegion region =
      region_name == "upper" ? BodyRegion::UpperBody : BodyRegion::LowerBody;
  const auto files = list_files(in_dir, ".json");
  fs::create_directories(out_dir);
  return run_per_file(files, parallelism, [&](const fs::path& path) {
    const Skeleton2D skeleton = skeleton_from_json(read_text_file(path.string()), path.string());
    const RectMask rect = keypoints_to_mask(skeleton, region);
    const fs::path out = fs::path(out_dir) / (path.stem().string() + "_mask.png");
    write_gray_png(out.string(), rect.rasterize());
  });
}

int cmd_densepose(const std::string& in_dir, const std::string& out_dir,
                  const std::string& predicted_dir, int parallelism) {
  const auto files = list_files(in_dir, ".json");
  fs::create_directories(out_dir);
  return run_per_file(files, parallelism, [&](const fs::path& path) {
    const Skeleton2D skeleton = skeleton_from_json(read_text_file(path.string()), path.string());
    DensePoseMap map = synthesize_densepose(skeleton);
    if (!predicted_dir.empty()) {
      const fs::path pred_path = fs::path(predicted_dir) / (path.stem().string() + ".png");
      DensePoseMap predicted;
      predicted.labels = read_label_png(pred_path.string());
      map = intersect_densepose(map, predicted);
    }
    const fs::path out = fs::path(out_dir) / (path.stem().string() + "_densepose.png");
    write_indexed_png(out.string(), map.labels, densepose_palette());
  });
}

int cmd_contour(const std::string& input, const std::string& out_dir, int parallelism) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    files = list_files(input, ".png");
  } else {
    const auto entries = parse_manifest(read_text_file(input), input);
    for (const auto& entry : entries) files.push_back(entry.layout_path);
  }
  fs::create_directories(out_dir);
  return run_per_file(files, parallelism, [&](const fs::path& path) {
    const LayoutMap layout = read_label_png(path.string());
    const Contour contour = extract_garment_contour(layout);
    const fs::path out = fs::path(out_dir) / (path.stem().string() + "_contour.json");
    write_text_file(out.string(), contour_to_json(contour));
  });
}

struct LoadedEntry {
  ManifestEntry manifest;
  std::optional<HuVector> hu;
  Contour contour;
  std::string error;  // non-empty when features could not be computed
};

std::vector<LoadedEntry> load_entries(const std::string& manifest_path, int parallelism) {
  const auto entries = parse_manifest(read_text_file(manifest_path), manifest_path);
  std::vector<LoadedEntry> loaded(entries.size());
  // Layout files must exist: a missing path is a configuration error, not a
  // per-pair failure.
  for (std::size_t i = 0; i < entries.size(); ++i) {
    loaded[i].manifest = entries[i];
    if (!fs::is_regular_file(entries[i].layout_path))
      throw Error(ErrorKind::IoError, "manifest references missing file: " + entries[i].layout_path);
  }
  parallel_for(static_cast<std::int64_t>(entries.size()), parallelism, [&](std::int64_t i) {
    try {
      const LayoutMap layout = read_label_png(loaded[i].manifest.layout_path);
      // Contour first: a garment-free layout surfaces as EmptyClass.
      loaded[i].contour = extract_garment_contour(layout);
      loaded[i].hu = hu_vector(label_mask(layout, kLayoutGarment));
    } catch (const std::exception& e) {
      loaded[i].error = e.what();
    }
  });
  return loaded;
}

int cmd_metrics(const std::string& generated_path, const std::string& sources_path,
                const std::string& out_path, const std::string& pairing, int parallelism) {
  const auto generated = load_entries(generated_path, parallelism);
  const auto sources = load_entries(sources_path, parallelism);

  struct Pair {
    std::size_t gen;
    std::size_t src;
  };
  std::vector<Pair> pairs;
  if (pairing == "paired") {
    const bool by_id = !generated.empty() && !generated.front().manifest.pair_id.empty();
    if (by_id) {
      std::map<std::string, std::size_t> source_by_id;
      for (std::size_t j = 0; j < sources.size(); ++j) {
        const std::string& id = sources[j].manifest.pair_id;
        if (id.empty())
          throw Error(ErrorKind::ParseError, "paired mode: source entry missing pair_id");
        if (!source_by_id.emplace(id, j).second)
          throw Error(ErrorKind::ParseError, "paired mode: duplicate pair_id " + id);
      }
      for (std::size_t i = 0; i < generated.size(); ++i) {
        const auto it = source_by_id.find(generated[i].manifest.pair_id);
        if (it == source_by_id.end())
          throw Error(ErrorKind::ParseError,
                      "paired mode: no source with pair_id " + generated[i].manifest.pair_id);
        pairs.push_back({i, it->second});
      }
    } else {
      if (generated.size() != sources.size())
        throw Error(ErrorKind::ParseError,
                    "paired mode without pair_id requires equal manifest lengths");
      for (std::size_t i = 0; i < generated.size(); ++i) pairs.push_back({i, i});
    }
  } else {
    for (std::size_t i = 0; i < generated.size(); ++i)
      for (std::size_t j = 0; j < sources.size(); ++j) pairs.push_back({i, j});
  }

  struct Line {
    bool skipped = false;
    std::string text;
    std::string error;
  };
  std::vector<Line> lines(pairs.size());
  parallel_for(static_cast<std::int64_t>(pairs.size()), parallelism, [&](std::int64_t k) {
    const LoadedEntry& g = generated[pairs[k].gen];
    const LoadedEntry& s = sources[pairs[k].src];
    if (!g.error.empty() || !s.error.empty()) {
      lines[k].skipped = true;
      lines[k].error = !g.error.empty() ? g.error : s.error;
      return;
    }
    nlohmann::ordered_json line;
    line["generated"] = g.manifest.layout_path;
    line["source"] = s.manifest.layout_path;
    line["hu"] = hu_distance(*g.hu, *s.hu);
    line["hd"] = hausdorff_distance(g.contour, s.contour);
    lines[k].text = line.dump();
  });

  std::string output;
  int skipped = 0;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].skipped) {
      ++skipped;
      log(LogLevel::Error, "skipping pair (" + generated[pairs[k].gen].manifest.layout_path +
                               ", " + sources[pairs[k].src].manifest.layout_path +
                               "): " + lines[k].error);
      continue;
    }
    output += lines[k].text;
    output += '\n';
  }
  if (out_path.empty() || out_path == "-")
    std::cout << output;
  else
    write_text_file(out_path, output);
  if (skipped > 0) {
    log(LogLevel::Warn, std::to_string(skipped) + " pairs skipped");
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_report(const std::string& generated_path, const std::string& sources_path,
               const std::string& out_path, const std::string& format_name,
               const std::string& pairing, int parallelism) {
  const auto to_labeled = [parallelism](const std::string& manifest_path) {
    const auto entries = parse_manifest(read_text_file(manifest_path), manifest_path);
    std::vector<LabeledLayout> items(entries.size());
    parallel_for(static_cast<std::int64_t>(entries.size()), parallelism, [&](std::int64_t i) {
      if (!fs::is_regular_file(entries[i].layout_path))
        throw Error(ErrorKind::IoError,
                    "manifest references missing file: " + entries[i].layout_path);
      items[i] = {read_label_png(entries[i].layout_path), entries[i].fit, entries[i].pair_id};
    });
    return items;
  };
  const auto generated = to_labeled(generated_path);
  const auto sources = to_labeled(sources_path);

  ConfusionOptions options;
  options.pairing = pairing == "paired" ? PairingMode::Paired : PairingMode::AllPairs;
  options.parallelism = parallelism;
  const FitReport report = fit_confusion(generated, sources, options);

  ReportFormat format = ReportFormat::Json;
  if (format_name == "csv") format = ReportFormat::Csv;
  else if (format_name == "markdown") format = ReportFormat::Markdown;

  const std::string text = render_report(report, format);
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    write_text_file(out_path, text);
  return kExitOk;
}

int cmd_selftest(std::uint32_t seed, int parallelism, const std::string& inject_fault) {
  SelfTestOptions options;
  options.seed = seed;
  options.parallelism = parallelism;
  options.inject_fault = inject_fault;
  const auto checks = run_selftest(options);
  std::size_t widest = 0;
  for (const auto& check : checks) widest = std::max(widest, check.name.size());
  for (const auto& check : checks) {
    std::string line = check.name;
    line.resize(widest + 2, ' ');
    line += check.passed ? "PASS" : "FAIL";
    if (!check.detail.empty()) line += "  (" + check.detail + ")";
    std::cout << line << "\n";
  }
  return all_passed(checks) ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();

  CLI::App app{"fit-aware try-on preprocessing and evaluation toolkit"};
  app.require_subcommand(1);

  std::string in_path, out_path, region = "upper", predicted_dir;
  std::string generated_path, sources_path, pairing = "paired", format = "json";
  std::string inject_fault;
  int parallelism = 1;
  std::uint32_t seed = 7;

  auto* mask = app.add_subcommand("mask", "rectangular garment-agnostic masks from keypoints");
  mask->add_option("--in", in_path, "directory of keypoint JSON files")->required();
  mask->add_option("--out", out_path, "output directory")->required();
  mask->add_option("--region", region, "upper|lower")
      ->check(CLI::IsMember({"upper", "lower"}));
  mask->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);

  auto* densepose = app.add_subcommand("densepose", "standard-stature dense poses from keypoints");
  densepose->add_option("--in", in_path, "directory of keypoint JSON files")->required();
  densepose->add_option("--out", out_path, "output directory")->required();
  densepose->add_option("--predicted", predicted_dir,
                        "directory of predicted dense-pose PNGs to intersect with");
  densepose->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);

  auto* contour = app.add_subcommand("contour", "garment contours from layout maps");
  contour->add_option("--in", in_path, "directory of layout PNGs or a manifest JSON")->required();
  contour->add_option("--out", out_path, "output directory")->required();
  contour->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);

  auto* metrics = app.add_subcommand("metrics", "per-pair Hu and Hausdorff distances");
  metrics->add_option("--generated", generated_path, "generated-set manifest")->required();
  metrics->add_option("--sources", sources_path, "source-set manifest")->required();
  metrics->add_option("--out", out_path, "output JSONL file (default stdout)");
  metrics->add_option("--pairing", pairing, "paired|all-pairs")
      ->check(CLI::IsMember({"paired", "all-pairs"}));
  metrics->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "fit confusion matrix over labeled manifests");
  report->add_option("--generated", generated_path, "generated-set manifest")->required();
  report->add_option("--sources", sources_path, "source-set manifest")->required();
  report->add_option("--out", out_path, "output file (default stdout)");
  report->add_option("--format", format, "json|csv|markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown"}));
  report->add_option("--pairing", pairing, "paired|all-pairs")
      ->check(CLI::IsMember({"paired", "all-pairs"}));
  report->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);

  auto* selftest = app.add_subcommand("selftest", "built-in invariant suite");
  selftest->add_option("--seed", seed, "seed for the randomized checks");
  selftest->add_option("--parallelism", parallelism, "worker count")->check(CLI::PositiveNumber);
  selftest->add_option("--inject-fault", inject_fault, "test hook")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (mask->parsed()) return cmd_mask(in_path, out_path, region, parallelism);
    if (densepose->parsed()) return cmd_densepose(in_path, out_path, predicted_dir, parallelism);
    if (contour->parsed()) return cmd_contour(in_path, out_path, parallelism);
    if (metrics->parsed())
      return cmd_metrics(generated_path, sources_path, out_path, pairing, parallelism);
    if (report->parsed()) {
      // reports default to all-pairs cell means; metrics default to paired
      if (report->get_option("--pairing")->count() == 0) pairing = "all-pairs";
      return cmd_report(generated_path, sources_path, out_path, format, pairing, parallelism);
    }
    if (selftest->parsed()) return cmd_selftest(seed, parallelism, inject_fault);
  } catch (const Error& e) {
    log(LogLevel::Error, e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
