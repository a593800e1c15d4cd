#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fitbench {

enum class ErrorKind {
  MissingJoint,
  ZeroSpan,
  InsufficientJoints,
  DimensionMismatch,
  EmptyClass,
  EmptyMask,
  OrderTooLow,
  EmptyContour,
  ShapeMismatch,
  CanvasTooSmall,
  EmptyCell,
  MixedKinds,
  ParseError,
  IoError,
};

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingJoint: return "MissingJoint";
    case ErrorKind::ZeroSpan: return "ZeroSpan";
    case ErrorKind::InsufficientJoints: return "InsufficientJoints";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::OrderTooLow: return "OrderTooLow";
    case ErrorKind::EmptyContour: return "EmptyContour";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::CanvasTooSmall: return "CanvasTooSmall";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::MixedKinds: return "MixedKinds";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error kind next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Row-major single-channel raster.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width <= 0 || height <= 0)
      throw Error(ErrorKind::DimensionMismatch, "image dimensions must be positive");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::vector<T>& pixels() noexcept { return pixels_; }
  const std::vector<T>& pixels() const noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Deterministic uniform source. Draws come straight from mt19937 words, so a
/// given seed yields the same sequence on every platform (std distributions
/// do not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return gen_() * (1.0 / 4294967296.0); }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>((static_cast<std::uint64_t>(gen_()) * span) >> 32);
  }

 private:
  std::mt19937 gen_;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Callers that
/// need determinism should write results into per-index slots and reduce
/// sequentially afterwards.
template <typename Fn>
void parallel_for(std::int64_t count, int workers, Fn&& fn) {
  if (count <= 0) return;
  workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(workers, count)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fitbench
