#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fitbench/core.hpp"

namespace fitbench {

// ------------------------------------------------------------------ tensors

/// Dense row-major real array with shape (batch, channels, height, width).
struct Tensor4 {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(std::int64_t n_, std::int64_t c_, std::int64_t h_, std::int64_t w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_) {
    if (n < 1 || c < 1 || h < 1 || w < 1)
      throw Error(ErrorKind::ShapeMismatch, "tensor dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(n * c * h * w), fill);
  }

  std::int64_t size() const { return n * c * h * w; }

  float& at(std::int64_t b, std::int64_t ch, std::int64_t y, std::int64_t x) {
    return data[static_cast<std::size_t>(((b * c + ch) * h + y) * w + x)];
  }
  float at(std::int64_t b, std::int64_t ch, std::int64_t y, std::int64_t x) const {
    return data[static_cast<std::size_t>(((b * c + ch) * h + y) * w + x)];
  }

  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  bool operator==(const Tensor4&) const = default;
};

/// Contiguous channel/row window copied out of a tensor.
inline Tensor4 slice(const Tensor4& t, std::int64_t c0, std::int64_t c1, std::int64_t y0,
                     std::int64_t y1) {
  if (c0 < 0 || c1 > t.c || c0 >= c1 || y0 < 0 || y1 > t.h || y0 >= y1)
    throw Error(ErrorKind::ShapeMismatch, "slice window out of range");
  Tensor4 out(t.n, c1 - c0, y1 - y0, t.w);
  for (std::int64_t b = 0; b < t.n; ++b)
    for (std::int64_t ch = c0; ch < c1; ++ch)
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = 0; x < t.w; ++x)
          out.at(b, ch - c0, y - y0, x) = t.at(b, ch, y, x);
  return out;
}

/// Stacks `top` above `bottom` along the height axis.
inline Tensor4 stack_height(const Tensor4& top, const Tensor4& bottom) {
  if (top.n != bottom.n || top.c != bottom.c || top.w != bottom.w || top.h != bottom.h)
    throw Error(ErrorKind::ShapeMismatch, "height stack needs matching blocks");
  Tensor4 out(top.n, top.c, top.h + bottom.h, top.w);
  for (std::int64_t b = 0; b < top.n; ++b)
    for (std::int64_t ch = 0; ch < top.c; ++ch)
      for (std::int64_t y = 0; y < out.h; ++y)
        for (std::int64_t x = 0; x < top.w; ++x)
          out.at(b, ch, y, x) =
              y < top.h ? top.at(b, ch, y, x) : bottom.at(b, ch, y - top.h, x);
  return out;
}

// ---------------------------------------------------------------- fit label

inline constexpr std::array<const char*, 5> kFitVocabulary = {"slim", "regular", "loose",
                                                              "tapered", "straight"};

/// One-hot fit prompt over {slim, regular, loose, tapered, straight}.
struct FitLabel {
  std::array<float, 5> one_hot{};

  static FitLabel from_index(int index) {
    if (index < 0 || index >= 5)
      throw Error(ErrorKind::ShapeMismatch, "fit label index out of range");
    FitLabel l;
    l.one_hot[index] = 1.0f;
    return l;
  }

  void validate() const {
    int ones = 0;
    for (float v : one_hot) {
      if (v != 0.0f && v != 1.0f)
        throw Error(ErrorKind::ParseError, "fit label entries must be 0 or 1");
      if (v == 1.0f) ++ones;
    }
    if (ones != 1) throw Error(ErrorKind::ParseError, "fit label must have exactly one hot entry");
  }
};

// ------------------------------------------------------------- composition

/// 13-channel generator input: [z_T || (m + 0) || (x_m + x_g) || (x_d + 0)]
/// where + stacks person block above garment/zero block along height and ||
/// concatenates channels. Latents carry 4 channels each, the mask one; the
/// output is (batch, 13, 2*height, width) and every block is recoverable by
/// slicing.
inline Tensor4 compose_input(const Tensor4& noise, const Tensor4& mask,
                             const Tensor4& masked_person_latent, const Tensor4& garment_latent,
                             const Tensor4& densepose_latent) {
  const auto check = [&](const Tensor4& t, std::int64_t channels, const char* name) {
    if (t.c != channels || t.n != noise.n || t.h != noise.h || t.w != noise.w)
      throw Error(ErrorKind::ShapeMismatch, std::string("compose_input: bad shape for ") + name);
  };
  check(noise, 4, "noise");
  check(mask, 1, "mask");
  check(masked_person_latent, 4, "masked_person_latent");
  check(garment_latent, 4, "garment_latent");
  check(densepose_latent, 4, "densepose_latent");

  const std::int64_t h = noise.h;
  Tensor4 out(noise.n, 13, 2 * h, noise.w);
  const auto put = [&](const Tensor4& src, std::int64_t c0, bool bottom) {
    for (std::int64_t b = 0; b < src.n; ++b)
      for (std::int64_t ch = 0; ch < src.c; ++ch)
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < src.w; ++x)
            out.at(b, c0 + ch, bottom ? h + y : y, x) = src.at(b, ch, y, x);
  };
  put(noise, 0, false);
  put(mask, 4, false);
  put(masked_person_latent, 5, false);
  put(garment_latent, 5, true);
  put(densepose_latent, 9, false);
  return out;
}

// --------------------------------------------------------------------- film

/// Per-channel modulation parameters; lengths must equal the channel count
/// of the tensor being modulated.
struct FiLMParams {
  std::vector<float> gamma;
  std::vector<float> beta;

  static FiLMParams constant(std::int64_t channels, float g, float b) {
    FiLMParams p;
    p.gamma.assign(static_cast<std::size_t>(channels), g);
    p.beta.assign(static_cast<std::size_t>(channels), b);
    return p;
  }
};

inline constexpr double kFilmSigmaFloor = 1e-5;

/// FiLM: gamma * (h - mu) / sigma + beta per channel, with mu and sigma the
/// feature-wise statistics of h over (batch, height, width). sigma is
/// floored at 1e-5.
inline Tensor4 film_modulate(const Tensor4& input, const FiLMParams& params) {
  if (static_cast<std::int64_t>(params.gamma.size()) != input.c ||
      static_cast<std::int64_t>(params.beta.size()) != input.c)
    throw Error(ErrorKind::ShapeMismatch, "film params do not match channel count");

  Tensor4 out(input.n, input.c, input.h, input.w);
  const std::int64_t per_channel = input.n * input.h * input.w;
  for (std::int64_t ch = 0; ch < input.c; ++ch) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t b = 0; b < input.n; ++b)
      for (std::int64_t y = 0; y < input.h; ++y)
        for (std::int64_t x = 0; x < input.w; ++x) {
          const double v = input.at(b, ch, y, x);
          sum += v;
          sum_sq += v * v;
        }
    const double mu = sum / per_channel;
    const double var = std::max(0.0, sum_sq / per_channel - mu * mu);
    const double sigma = std::max(std::sqrt(var), kFilmSigmaFloor);
    const double g = params.gamma[ch];
    const double b_ = params.beta[ch];
    for (std::int64_t b = 0; b < input.n; ++b)
      for (std::int64_t y = 0; y < input.h; ++y)
        for (std::int64_t x = 0; x < input.w; ++x)
          out.at(b, ch, y, x) =
              static_cast<float>(g * ((input.at(b, ch, y, x) - mu) / sigma) + b_);
  }
  return out;
}

// ------------------------------------------------------------ scale bundle

/// Multi-scale layout features, ordered coarse to fine.
struct ScaleBundle {
  struct Entry {
    Tensor4 features;
    int scale_id = 0;
  };
  std::vector<Entry> scales;

  void validate() const {
    for (std::size_t i = 1; i < scales.size(); ++i) {
      const Tensor4& prev = scales[i - 1].features;
      const Tensor4& cur = scales[i].features;
      const bool doubles = cur.h == 2 * prev.h && cur.w == 2 * prev.w;
      const bool equal = cur.h == prev.h && cur.w == prev.w;
      if (!doubles && !equal)
        throw Error(ErrorKind::ShapeMismatch,
                    "bundle scales must be ordered coarse to fine with consistent doubling");
    }
  }
};

/// U-Net route: keep the person half of each scale (top rows). Every scale's
/// height must be exactly twice the corresponding target height.
inline ScaleBundle align_unet(const ScaleBundle& bundle,
                              const std::vector<std::pair<std::int64_t, std::int64_t>>& target_scales) {
  if (bundle.scales.size() != target_scales.size())
    throw Error(ErrorKind::ShapeMismatch, "target scale count does not match bundle");
  ScaleBundle out;
  out.scales.reserve(bundle.scales.size());
  for (std::size_t i = 0; i < bundle.scales.size(); ++i) {
    const Tensor4& t = bundle.scales[i].features;
    const auto [th, tw] = target_scales[i];
    if (t.h != 2 * th || t.w != tw)
      throw Error(ErrorKind::ShapeMismatch, "scale is not a stacked person/garment pair");
    out.scales.push_back({slice(t, 0, t.c, 0, th), bundle.scales[i].scale_id});
  }
  return out;
}

/// Flattened token sequence (batch, tokens, channels).
struct TokenSequence {
  std::int64_t n = 0;
  std::int64_t tokens = 0;
  std::int64_t c = 0;
  std::vector<float> data;

  float& at(std::int64_t b, std::int64_t t, std::int64_t ch) {
    return data[static_cast<std::size_t>((b * tokens + t) * c + ch)];
  }
  float at(std::int64_t b, std::int64_t t, std::int64_t ch) const {
    return data[static_cast<std::size_t>((b * tokens + t) * c + ch)];
  }
};

/// Bilinear resize to (out_h, out_w). Sampling uses half-pixel centers
/// (corner-aligned sampling disabled) with edge clamping.
inline Tensor4 bilinear_resize(const Tensor4& t, std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1)
    throw Error(ErrorKind::ShapeMismatch, "resize target must be positive");
  Tensor4 out(t.n, t.c, out_h, out_w);
  const double sy = static_cast<double>(t.h) / out_h;
  const double sx = static_cast<double>(t.w) / out_w;
  for (std::int64_t y = 0; y < out_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    const std::int64_t y0 = static_cast<std::int64_t>(std::floor(src_y));
    const double fy = src_y - y0;
    const std::int64_t ya = std::clamp<std::int64_t>(y0, 0, t.h - 1);
    const std::int64_t yb = std::clamp<std::int64_t>(y0 + 1, 0, t.h - 1);
    for (std::int64_t x = 0; x < out_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const std::int64_t x0 = static_cast<std::int64_t>(std::floor(src_x));
      const double fx = src_x - x0;
      const std::int64_t xa = std::clamp<std::int64_t>(x0, 0, t.w - 1);
      const std::int64_t xb = std::clamp<std::int64_t>(x0 + 1, 0, t.w - 1);
      for (std::int64_t b = 0; b < t.n; ++b)
        for (std::int64_t ch = 0; ch < t.c; ++ch) {
          const double top = (1.0 - fx) * t.at(b, ch, ya, xa) + fx * t.at(b, ch, ya, xb);
          const double bot = (1.0 - fx) * t.at(b, ch, yb, xa) + fx * t.at(b, ch, yb, xb);
          out.at(b, ch, y, x) = static_cast<float>((1.0 - fy) * top + fy * bot);
        }
    }
  }
  return out;
}

/// DiT route: interpolate every scale to a uniform token grid, concatenate
/// along channels, flatten spatial dims row-major into tokens.
inline TokenSequence align_dit(const ScaleBundle& bundle,
                               std::pair<std::int64_t, std::int64_t> token_hw) {
  const auto [th, tw] = token_hw;
  if (th < 1 || tw < 1) throw Error(ErrorKind::ShapeMismatch, "token grid must be positive");
  if (bundle.scales.empty()) throw Error(ErrorKind::ShapeMismatch, "empty scale bundle");

  std::int64_t total_c = 0;
  const std::int64_t batch = bundle.scales.front().features.n;
  for (const auto& entry : bundle.scales) {
    if (entry.features.n != batch)
      throw Error(ErrorKind::ShapeMismatch, "bundle batch sizes differ");
    total_c += entry.features.c;
  }

  TokenSequence seq;
  seq.n = batch;
  seq.tokens = th * tw;
  seq.c = total_c;
  seq.data.assign(static_cast<std::size_t>(batch * seq.tokens * total_c), 0.0f);

  std::int64_t c_base = 0;
  for (const auto& entry : bundle.scales) {
    const Tensor4 resized = bilinear_resize(entry.features, th, tw);
    for (std::int64_t b = 0; b < batch; ++b)
      for (std::int64_t ch = 0; ch < resized.c; ++ch)
        for (std::int64_t y = 0; y < th; ++y)
          for (std::int64_t x = 0; x < tw; ++x)
            seq.at(b, y * tw + x, c_base + ch) = resized.at(b, ch, y, x);
    c_base += entry.features.c;
  }
  return seq;
}

// ------------------------------------------------------------- projections

/// 1x1 convolution weights for one scale, row-major (out, in).
struct ScaleProjection {
  std::int64_t out_channels = 0;
  std::int64_t in_channels = 0;
  std::vector<float> weight;

  static ScaleProjection zeros(std::int64_t out_c, std::int64_t in_c) {
    ScaleProjection p;
    p.out_channels = out_c;
    p.in_channels = in_c;
    p.weight.assign(static_cast<std::size_t>(out_c * in_c), 0.0f);
    return p;
  }

  static ScaleProjection identity(std::int64_t channels) {
    ScaleProjection p = zeros(channels, channels);
    for (std::int64_t i = 0; i < channels; ++i)
      p.weight[static_cast<std::size_t>(i * channels + i)] = 1.0f;
    return p;
  }

  float at(std::int64_t out_c, std::int64_t in_c) const {
    return weight[static_cast<std::size_t>(out_c * in_channels + in_c)];
  }
};

/// Per-scale 1x1 linear projection. With zero-initialized weights the output
/// is exactly zero everywhere, so injecting it leaves any downstream
/// function bit-unchanged at initialization.
inline ScaleBundle zero_init_project(const ScaleBundle& bundle,
                                     const std::vector<ScaleProjection>& weights) {
  if (bundle.scales.size() != weights.size())
    throw Error(ErrorKind::ShapeMismatch, "projection count does not match bundle");
  ScaleBundle out;
  out.scales.reserve(bundle.scales.size());
  for (std::size_t i = 0; i < bundle.scales.size(); ++i) {
    const Tensor4& t = bundle.scales[i].features;
    const ScaleProjection& p = weights[i];
    if (p.in_channels != t.c)
      throw Error(ErrorKind::ShapeMismatch, "projection input channels do not match scale");
    Tensor4 projected(t.n, p.out_channels, t.h, t.w);
    for (std::int64_t b = 0; b < t.n; ++b)
      for (std::int64_t oc = 0; oc < p.out_channels; ++oc)
        for (std::int64_t y = 0; y < t.h; ++y)
          for (std::int64_t x = 0; x < t.w; ++x) {
            float acc = 0.0f;
            for (std::int64_t ic = 0; ic < t.c; ++ic)
              acc += p.at(oc, ic) * t.at(b, ic, y, x);
            projected.at(b, oc, y, x) = acc;
          }
    out.scales.push_back({std::move(projected), bundle.scales[i].scale_id});
  }
  return out;
}

// -------------------------------------------------------------------- loss

/// Mean squared error over all elements.
inline double injection_loss(const Tensor4& pred_noise, const Tensor4& true_noise) {
  if (!pred_noise.same_shape(true_noise))
    throw Error(ErrorKind::ShapeMismatch, "loss operands differ in shape");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_noise.data.size(); ++i) {
    const double d = static_cast<double>(pred_noise.data[i]) - true_noise.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred_noise.size());
}

// ----------------------------------------------------------- serialization

// Flat binary container: magic "FCT1", uint32 dtype code (0 = float32),
// four uint64 dims, then row-major float32 data. All little-endian.

inline void write_tensor(std::ostream& os, const Tensor4& t) {
  os.write("FCT1", 4);
  const std::uint32_t dtype = 0;
  os.write(reinterpret_cast<const char*>(&dtype), sizeof(dtype));
  const std::uint64_t dims[4] = {static_cast<std::uint64_t>(t.n), static_cast<std::uint64_t>(t.c),
                                 static_cast<std::uint64_t>(t.h), static_cast<std::uint64_t>(t.w)};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!os) throw Error(ErrorKind::IoError, "tensor write failed");
}

inline void write_tensor(const std::string& path, const Tensor4& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot open for writing: " + path);
  write_tensor(os, t);
}

inline Tensor4 read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FCT1", 4) != 0)
    throw Error(ErrorKind::ParseError, "bad tensor magic");
  std::uint32_t dtype = 0;
  is.read(reinterpret_cast<char*>(&dtype), sizeof(dtype));
  if (!is || dtype != 0) throw Error(ErrorKind::ParseError, "unsupported tensor dtype");
  std::uint64_t dims[4];
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!is) throw Error(ErrorKind::ParseError, "truncated tensor header");
  Tensor4 t(static_cast<std::int64_t>(dims[0]), static_cast<std::int64_t>(dims[1]),
            static_cast<std::int64_t>(dims[2]), static_cast<std::int64_t>(dims[3]));
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!is) throw Error(ErrorKind::ParseError, "truncated tensor data");
  return t;
}

inline Tensor4 read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open for reading: " + path);
  return read_tensor(is);
}

}  // namespace fitbench
