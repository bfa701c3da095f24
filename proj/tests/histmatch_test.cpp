#include <gtest/gtest.h>

#include <cmath>

#include "psr/error.hpp"
#include "psr/histmatch.hpp"
#include "support.hpp"

namespace psr {
namespace {

std::pair<double, double> moments(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

// Direct loop over every window origin with explicit accumulation (stride 1).
Field naive_local(const Field& pan, const Field& target, int window) {
  const std::size_t w = pan.width(), h = pan.height();
  std::vector<double> sum(w * h, 0.0), count(w * h, 0.0);
  const std::size_t side = static_cast<std::size_t>(window);
  for (std::size_t oy = 0; oy + side <= h; ++oy)
    for (std::size_t ox = 0; ox + side <= w; ++ox) {
      std::vector<double> p, t;
      for (std::size_t y = oy; y < oy + side; ++y)
        for (std::size_t x = ox; x < ox + side; ++x) {
          p.push_back(pan(x, y));
          t.push_back(target(x, y));
        }
      const auto [mp, sp] = moments(p);
      const auto [mt, st] = moments(t);
      for (std::size_t y = oy; y < oy + side; ++y)
        for (std::size_t x = ox; x < ox + side; ++x) {
          sum[y * w + x] += st / sp * (pan(x, y) - mp) + mt;
          count[y * w + x] += 1.0;
        }
    }
  for (std::size_t i = 0; i < w * h; ++i) sum[i] /= count[i];
  return Field(w, h, sum);
}

TEST(HistMatch, GlobalFixedPointAndAffineInvariance) {
  std::mt19937_64 rng(1);
  const Field t = test::random_field(9, 7, rng);
  const Field same = match_global(t, t);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(same[i], t[i], 1e-14);
  Field affine = t;
  for (double& v : affine.values()) v = 2.0 * v + 5.0;
  const Field back = match_global(affine, t);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(back[i], t[i], 1e-12);
}

TEST(HistMatch, GlobalMoments) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Field pan = test::random_field(16, 12, rng, -5, 40);
    const Field t = test::random_field(16, 12, rng, 100, 300);
    const Field out = match_global(pan, t);
    const auto [mo, so] = moments(out.values());
    const auto [mt, st] = moments(t.values());
    EXPECT_NEAR(mo, mt, 1e-10 * std::abs(mt));
    EXPECT_NEAR(so, st, 1e-10 * st);
    const Field again = match_global(out, t);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(again[i], out[i], 1e-10 * std::abs(out[i]));
    Field scaled = pan;
    for (double& v : scaled.values()) v = 3.5 * v - 7.0;
    const Field inv = match_global(scaled, t);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(inv[i], out[i], 1e-9 * std::abs(out[i]));
  }
}

TEST(HistMatch, GlobalRejectsConstantPan) {
  EXPECT_THROW(match_global(Field(4, 4, 1.0), Field(4, 4, 2.0)), DegenerateInput);
  EXPECT_THROW(match_global(Field(4, 4, 1.0), Field(3, 4, 2.0)), DimensionMismatch);
}

TEST(HistMatch, LocalFixedPoint) {
  std::mt19937_64 rng(3);
  const Field t = test::random_field(20, 18, rng);
  const Field out = match_local(t, t, MatchParams{5, 2});
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(out[i], t[i], 1e-10);
}

TEST(HistMatch, FullWindowEqualsGlobalExactly) {
  std::mt19937_64 rng(4);
  const Field pan = test::random_field(15, 15, rng);
  const Field t = test::random_field(15, 15, rng, 3, 4);
  EXPECT_EQ(match_local(pan, t, MatchParams{15, 1}), match_global(pan, t));
  EXPECT_EQ(match_local(pan, t, MatchParams{15, 4}), match_global(pan, t));
  const Field wide = test::random_field(11, 9, rng);
  const Field wt = test::random_field(11, 9, rng);
  EXPECT_EQ(match_local(wide, wt, MatchParams{15, 1}), match_global(wide, wt));
}

TEST(HistMatch, LocalMatchesNaiveLoop) {
  Field ramp(9, 9), target(9, 9);
  for (std::size_t y = 0; y < 9; ++y)
    for (std::size_t x = 0; x < 9; ++x) {
      ramp(x, y) = static_cast<double>(x) + 0.5 * static_cast<double>(y);
      target(x, y) = (x < 4 ? 1.0 : 3.0) + (y < 5 ? 0.0 : 2.5) + 0.1 * static_cast<double>(x * y % 3);
    }
  const Field out = match_local(ramp, target, MatchParams{3, 1});
  const Field ref = naive_local(ramp, target, 3);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);

  std::mt19937_64 rng(5);
  const Field pan = test::random_field(12, 10, rng);
  const Field t = test::random_field(12, 10, rng);
  const Field a = match_local(pan, t, MatchParams{5, 1});
  const Field b = naive_local(pan, t, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(HistMatch, FlatPatchesFallBackToTargetMean) {
  Field pan(6, 6, 2.0);
  std::mt19937_64 rng(6);
  const Field t = test::random_field(6, 6, rng);
  const Field out = match_local(pan, t, MatchParams{3, 3});
  // Patches tile the image exactly; each pixel gets its patch's target mean.
  for (std::size_t py = 0; py < 2; ++py)
    for (std::size_t px = 0; px < 2; ++px) {
      double m = 0.0;
      for (std::size_t y = 3 * py; y < 3 * py + 3; ++y)
        for (std::size_t x = 3 * px; x < 3 * px + 3; ++x) m += t(x, y) / 9.0;
      for (std::size_t y = 3 * py; y < 3 * py + 3; ++y)
        for (std::size_t x = 3 * px; x < 3 * px + 3; ++x) EXPECT_NEAR(out(x, y), m, 1e-14);
    }
}

TEST(HistMatch, StrideCoversEveryPixel) {
  std::mt19937_64 rng(7);
  const Field pan = test::random_field(17, 13, rng);
  const Field t = test::random_field(17, 13, rng);
  for (int stride : {1, 2, 5, 7, 40}) {
    const Field out = match_local(pan, t, MatchParams{5, stride});
    for (double v : out.values()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(HistMatch, ParamValidation) {
  EXPECT_THROW((MatchParams{4, 1}).validate(), InvalidArgument);
  EXPECT_THROW((MatchParams{0, 1}).validate(), InvalidArgument);
  EXPECT_THROW((MatchParams{5, 0}).validate(), InvalidArgument);
}

}  // namespace
}  // namespace psr
