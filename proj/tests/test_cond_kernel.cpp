#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "fitbench/cond_kernel.hpp"

using namespace fitbench;

namespace {

Tensor4 random_tensor(Rng& rng, std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                      double lo = -1.0, double hi = 1.0) {
  Tensor4 t(n, c, h, w);
  for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

TEST_CASE("compose_input builds the 13-channel stacked tensor") {
  Rng rng(21);
  const Tensor4 noise = random_tensor(rng, 2, 4, 64, 48);
  const Tensor4 mask = random_tensor(rng, 2, 1, 64, 48);
  const Tensor4 person = random_tensor(rng, 2, 4, 64, 48);
  const Tensor4 garment = random_tensor(rng, 2, 4, 64, 48);
  const Tensor4 densepose = random_tensor(rng, 2, 4, 64, 48);

  const Tensor4 composed = compose_input(noise, mask, person, garment, densepose);
  CHECK(composed.n == 2);
  CHECK(composed.c == 13);
  CHECK(composed.h == 128);
  CHECK(composed.w == 48);

  // Lossless block recovery: every input comes back by slicing.
  CHECK(slice(composed, 0, 4, 0, 64) == noise);
  CHECK(slice(composed, 4, 5, 0, 64) == mask);
  CHECK(slice(composed, 5, 9, 0, 64) == person);
  CHECK(slice(composed, 5, 9, 64, 128) == garment);
  CHECK(slice(composed, 9, 13, 0, 64) == densepose);

  // Alignment zeros fill the garment half of the noise, mask and dense-pose
  // blocks.
  for (std::int64_t ch : {0, 1, 2, 3, 4, 9, 10, 11, 12})
    for (std::int64_t y = 64; y < 128; ++y)
      for (std::int64_t x = 0; x < 48; ++x)
        if (composed.at(0, ch, y, x) != 0.0f) FAIL("zero block polluted");

  const Tensor4 zero4(2, 4, 64, 48);
  const Tensor4 zero1(2, 1, 64, 48);
  const Tensor4 all_zero = compose_input(zero4, zero1, zero4, zero4, zero4);
  for (float v : all_zero.data)
    if (v != 0.0f) FAIL("nonzero output from zero inputs");

  const Tensor4 bad(2, 4, 32, 48);
  CHECK_THROWS_MATCHES(compose_input(noise, mask, bad, garment, densepose), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == ErrorKind::ShapeMismatch; }));
}

TEST_CASE("film with unit gamma and zero beta standardizes features") {
  Rng rng(22);
  const Tensor4 h = random_tensor(rng, 2, 5, 20, 20, -4.0, 7.0);
  const Tensor4 out = film_modulate(h, FiLMParams::constant(5, 1.0f, 0.0f));
  for (std::int64_t ch = 0; ch < out.c; ++ch) {
    double sum = 0.0, sum_sq = 0.0;
    const double count = out.n * out.h * out.w;
    for (std::int64_t b = 0; b < out.n; ++b)
      for (std::int64_t y = 0; y < out.h; ++y)
        for (std::int64_t x = 0; x < out.w; ++x) {
          sum += out.at(b, ch, y, x);
          sum_sq += static_cast<double>(out.at(b, ch, y, x)) * out.at(b, ch, y, x);
        }
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-5);
  }
}

TEST_CASE("film with zero gamma collapses each channel to beta") {
  Rng rng(23);
  const Tensor4 h = random_tensor(rng, 1, 3, 8, 8);
  FiLMParams params = FiLMParams::constant(3, 0.0f, 0.0f);
  params.beta = {1.5f, -2.0f, 0.25f};
  const Tensor4 out = film_modulate(h, params);
  for (std::int64_t ch = 0; ch < 3; ++ch)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 0; x < 8; ++x)
        CHECK(out.at(0, ch, y, x) == params.beta[ch]);
}

TEST_CASE("film maps standard normal samples to the target moments") {
  Rng rng(24);
  Tensor4 h(1, 1, 100, 100);  // 10^4 samples
  for (float& v : h.data) v = static_cast<float>(gaussian(rng));
  const Tensor4 out = film_modulate(h, FiLMParams::constant(1, 2.0f, 3.0f));
  double sum = 0.0, sum_sq = 0.0;
  for (float v : out.data) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  const double mean = sum / out.size();
  const double sd = std::sqrt(sum_sq / out.size() - mean * mean);
  CHECK(std::abs(mean - 3.0) < 0.15);  // 5% of the beta shift scale
  CHECK(std::abs(sd - 2.0) < 0.10);
}

TEST_CASE("film is invariant to per-channel affine rescaling of its input") {
  Rng rng(25);
  const Tensor4 h = random_tensor(rng, 2, 4, 12, 12);
  FiLMParams params;
  for (int i = 0; i < 4; ++i) {
    params.gamma.push_back(static_cast<float>(rng.uniform(0.5, 2.0)));
    params.beta.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
  }
  Tensor4 rescaled = h;
  const double scale[4] = {2.0, 0.5, 7.0, 1.25};
  const double shift[4] = {-3.0, 0.0, 10.0, 0.125};
  for (std::int64_t b = 0; b < h.n; ++b)
    for (std::int64_t ch = 0; ch < h.c; ++ch)
      for (std::int64_t y = 0; y < h.h; ++y)
        for (std::int64_t x = 0; x < h.w; ++x)
          rescaled.at(b, ch, y, x) =
              static_cast<float>(scale[ch] * h.at(b, ch, y, x) + shift[ch]);

  const Tensor4 a = film_modulate(h, params);
  const Tensor4 b = film_modulate(rescaled, params);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (std::abs(a.data[i] - b.data[i]) >= 1e-4) FAIL("affine invariance violated");
}

TEST_CASE("align_unet keeps the person half and rejects re-alignment") {
  Rng rng(26);
  const Tensor4 person = random_tensor(rng, 1, 3, 64, 48);
  const Tensor4 garment = random_tensor(rng, 1, 3, 64, 48);
  ScaleBundle bundle;
  bundle.scales.push_back({stack_height(person, garment), 0});
  bundle.validate();

  const ScaleBundle aligned = align_unet(bundle, {{64, 48}});
  CHECK(aligned.scales[0].features == person);  // bit-identical round trip

  CHECK_THROWS_MATCHES(align_unet(aligned, {{64, 48}}), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == ErrorKind::ShapeMismatch; }));
}

TEST_CASE("align_dit shapes, constants, and ramp interpolation") {
  Rng rng(27);
  ScaleBundle bundle;
  bundle.scales.push_back({random_tensor(rng, 2, 3, 8, 6), 0});
  bundle.scales.push_back({random_tensor(rng, 2, 3, 16, 12), 1});
  const TokenSequence seq = align_dit(bundle, {16, 12});
  CHECK(seq.n == 2);
  CHECK(seq.tokens == 192);
  CHECK(seq.c == 6);

  // Constant maps stay constant through interpolation.
  ScaleBundle constant;
  Tensor4 flat(1, 2, 4, 4);
  for (std::int64_t i = 0; i < flat.size(); ++i)
    flat.data[static_cast<std::size_t>(i)] = (i < 16) ? 2.5f : -1.25f;
  constant.scales.push_back({flat, 0});
  const TokenSequence const_seq = align_dit(constant, {8, 8});
  for (std::int64_t t = 0; t < const_seq.tokens; ++t) {
    CHECK(std::abs(const_seq.at(0, t, 0) - 2.5f) < 1e-6);
    CHECK(std::abs(const_seq.at(0, t, 1) + 1.25f) < 1e-6);
  }

  // A 2x upsampled linear ramp reproduces the line at every interior sample:
  // adjacent output pairs average to the midpoint of the input samples.
  Tensor4 ramp(1, 1, 1, 8);
  for (int x = 0; x < 8; ++x) ramp.at(0, 0, 0, x) = static_cast<float>(x);
  ScaleBundle ramp_bundle;
  ramp_bundle.scales.push_back({ramp, 0});
  const TokenSequence up = align_dit(ramp_bundle, {1, 16});
  for (int i = 0; i + 1 < 8; ++i) {
    const double pair_mean = (up.at(0, 2 * i + 1, 0) + up.at(0, 2 * i + 2, 0)) / 2.0;
    CHECK(std::abs(pair_mean - (i + 0.5)) < 1e-6);
  }
  for (int t = 1; t < 15; ++t) {
    const double src = (t + 0.5) * 0.5 - 0.5;
    CHECK(std::abs(up.at(0, t, 0) - src) < 1e-6);
  }
}

TEST_CASE("zero-init projection: zero, identity, and the matmul oracle") {
  Rng rng(28);
  ScaleBundle bundle;
  bundle.scales.push_back({random_tensor(rng, 2, 5, 10, 8), 0});
  bundle.scales.push_back({random_tensor(rng, 2, 5, 20, 16), 1});

  const ScaleBundle zeroed =
      zero_init_project(bundle, {ScaleProjection::zeros(7, 5), ScaleProjection::zeros(7, 5)});
  for (const auto& entry : zeroed.scales)
    for (float v : entry.features.data)
      if (v != 0.0f) FAIL("zero projection produced a nonzero value");

  const ScaleBundle same =
      zero_init_project(bundle, {ScaleProjection::identity(5), ScaleProjection::identity(5)});
  CHECK(same.scales[0].features == bundle.scales[0].features);
  CHECK(same.scales[1].features == bundle.scales[1].features);

  // Independent per-pixel dense product in double precision.
  ScaleProjection proj = ScaleProjection::zeros(3, 5);
  for (float& w : proj.weight) w = static_cast<float>(rng.uniform(-1.0, 1.0));
  const ScaleBundle projected = zero_init_project(bundle, {proj, proj});
  for (std::size_t s = 0; s < bundle.scales.size(); ++s) {
    const Tensor4& x = bundle.scales[s].features;
    const Tensor4& y = projected.scales[s].features;
    for (std::int64_t b = 0; b < x.n; ++b)
      for (std::int64_t oc = 0; oc < 3; ++oc)
        for (std::int64_t py = 0; py < x.h; ++py)
          for (std::int64_t px = 0; px < x.w; ++px) {
            double acc = 0.0;
            for (std::int64_t ic = 0; ic < 5; ++ic)
              acc += static_cast<double>(proj.at(oc, ic)) * x.at(b, ic, py, px);
            if (std::abs(acc - y.at(b, oc, py, px)) >= 1e-6) FAIL("projection mismatch");
          }
  }

  CHECK_THROWS_MATCHES(zero_init_project(bundle, {ScaleProjection::zeros(3, 4),
                                                  ScaleProjection::zeros(3, 4)}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::ShapeMismatch;
                       }));
}

TEST_CASE("zero-init injection leaves downstream inputs bit-unchanged") {
  Rng rng(29);
  ScaleBundle bundle;
  bundle.scales.push_back({random_tensor(rng, 1, 4, 16, 12, 0.1, 1.0), 0});
  const ScaleBundle injected = zero_init_project(bundle, {ScaleProjection::zeros(4, 4)});

  const Tensor4& x = bundle.scales[0].features;
  const Tensor4& inj = injected.scales[0].features;
  Tensor4 sum = x;
  for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += inj.data[i];
  CHECK(std::memcmp(sum.data.data(), x.data.data(), x.data.size() * sizeof(float)) == 0);
}

TEST_CASE("injection loss is an elementwise MSE") {
  Rng rng(30);
  const Tensor4 a = random_tensor(rng, 2, 3, 9, 7);
  CHECK(injection_loss(a, a) == 0.0);

  Tensor4 shifted = a;
  for (float& v : shifted.data) v += 1.0f;
  CHECK(injection_loss(shifted, a) == Catch::Approx(1.0));

  const Tensor4 b = random_tensor(rng, 2, 3, 9, 7);
  double oracle = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    oracle += d * d;
  }
  oracle /= static_cast<double>(a.size());
  CHECK(std::abs(injection_loss(a, b) - oracle) < 1e-9);
  CHECK(injection_loss(a, b) == Catch::Approx(injection_loss(b, a)));

  const Tensor4 other(1, 1, 2, 2);
  CHECK_THROWS_AS(injection_loss(a, other), Error);
}

TEST_CASE("fit labels are one-hot over the five-fit vocabulary") {
  const FitLabel l = FitLabel::from_index(2);
  l.validate();
  CHECK(l.one_hot[2] == 1.0f);
  FitLabel bad;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.one_hot[0] = 1.0f;
  bad.one_hot[3] = 1.0f;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(FitLabel::from_index(5), Error);
}

TEST_CASE("tensor container round-trips through the FCT1 format") {
  Rng rng(31);
  const Tensor4 t = random_tensor(rng, 2, 3, 5, 7);
  std::stringstream buffer;
  write_tensor(buffer, t);
  const Tensor4 back = read_tensor(buffer);
  CHECK(back == t);

  std::stringstream bad("nope");
  CHECK_THROWS_MATCHES(read_tensor(bad), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == ErrorKind::ParseError; }));

  // Header layout is pinned: magic, dtype, dims, then payload.
  const std::string bytes = buffer.str();
  REQUIRE(bytes.size() == 4 + 4 + 32 + t.data.size() * sizeof(float));
  CHECK(bytes.substr(0, 4) == "FCT1");
  std::uint64_t dim0 = 0;
  std::memcpy(&dim0, bytes.data() + 8, sizeof(dim0));
  CHECK(dim0 == 2);
}
