#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "ptzlm/metrics.hpp"
#include "test_support.hpp"

namespace ptzlm {
namespace {

constexpr AngularRect kA{0, 1, 0, 1};
constexpr AngularRect kB{2, 3, 0, 1};
const std::vector<AngularRect> kNone;

TEST(Iou, WorkedValues) {
  EXPECT_DOUBLE_EQ(iou(kA, kA), 1.0);
  EXPECT_DOUBLE_EQ(iou(kA, kB), 0.0);
  EXPECT_NEAR(iou({0, 10, 0, 10}, {5, 15, 0, 10}), 50.0 / 150.0, 1e-12);
  EXPECT_NEAR(oracle::raster_iou({0, 10, 0, 10}, {5, 15, 0, 10}), 50.0 / 150.0, 1e-3);
}

TEST(Iou, AgreesWithFormulaAndIsSymmetric) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto a = oracle::random_rect(rng), b = oracle::random_rect(rng);
    EXPECT_NEAR(iou(a, b), oracle::formula_iou(a, b), 1e-12);
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
  }
}

TEST(UnionArea, WorkedValues) {
  EXPECT_EQ(union_area(std::vector<AngularRect>{}), 0.0);
  EXPECT_NEAR(union_area({{0, 2, 0, 2}, {1, 3, 1, 3}}), 7.0, 1e-12);
  EXPECT_NEAR(oracle::raster_union_area({{0, 2, 0, 2}, {1, 3, 1, 3}}), 7.0, 0.01);
  EXPECT_EQ(union_area({{0, 2, 0, 2}, {0, 2, 0, 2}}), union_area({{0, 2, 0, 2}}));
}

TEST(UnionArea, AgreesWithRasterOracle) {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    std::vector<AngularRect> rects(rng.between(1, 20));
    for (auto& r : rects) r = oracle::random_rect(rng);
    const double exact = union_area(rects), approx = oracle::raster_union_area(rects, 1000);
    EXPECT_NEAR(exact, approx, std::max(0.01 * exact, 0.005));
  }
}

TEST(UnionArea, BoundsAndPermutation) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<AngularRect> rects(rng.between(1, 12));
    double max_area = 0, sum = 0;
    for (auto& r : rects) {
      r = oracle::random_rect(rng);
      max_area = std::max(max_area, r.area());
      sum += r.area();
    }
    const double u = union_area(rects);
    EXPECT_GE(u, max_area - 1e-9);
    EXPECT_LE(u, sum + 1e-9);
    std::reverse(rects.begin(), rects.end());
    EXPECT_EQ(union_area(rects), u);
  }
}

TEST(Bma, WorkedValues) {
  EXPECT_EQ(bma({kA}, {kA}), 1.0);
  EXPECT_NEAR(bma({kA, kB}, {kA}), 0.5, 1e-12);
  EXPECT_NEAR(oracle::brute_bma({kA, kB}, {kA}, oracle::formula_iou), 0.5, 1e-12);
  EXPECT_EQ(bma(kNone, {kA}), 0.0);
  EXPECT_EQ(bma({kA}, kNone), 0.0);
  EXPECT_EQ(bma(kNone, kNone), 1.0);
}

TEST(Bma, AgreesWithBruteForceDefinition) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<AngularRect> m(rng.below(8)), e(rng.below(8));
    for (auto& r : m) r = oracle::random_rect(rng);
    for (auto& r : e) r = oracle::random_rect(rng);
    EXPECT_NEAR(bma(m, e), oracle::brute_bma(m, e, oracle::formula_iou), 1e-12);
  }
}

TEST(Aa, WorkedValues) {
  EXPECT_NEAR(aa({kA}, {kA, kB}), 0.5, 1e-12);
  EXPECT_EQ(aa({kA}, {kB}), 0.0);
  EXPECT_EQ(aa({kA, kB}, {kB, kA}), 1.0);
  EXPECT_EQ(aa(kNone, kNone), 1.0);
  EXPECT_EQ(aa(kNone, {kA}), 0.0);
  // Overlapping coverage: model [0,2]^2, expert [1,3]^2 -> 1 / 7.
  EXPECT_NEAR(aa({{0, 2, 0, 2}}, {{1, 3, 1, 3}}), 1.0 / 7.0, 1e-12);
}

TEST(Metrics, IdentityAndPermutation) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto s = generate_scene("urban", rng.next(), 5);
    const auto frames = simulate(s, kHomeState, testing::random_sequence(s, rng, 2, 6)).viewports();
    EXPECT_EQ(bma(frames, frames), 1.0);
    EXPECT_EQ(aa(frames, frames), 1.0);
    auto shuffled = frames;
    for (std::size_t k = shuffled.size(); k > 1; --k) std::swap(shuffled[k - 1], shuffled[rng.below(k)]);
    EXPECT_EQ(aa(shuffled, frames), 1.0);
    EXPECT_GE(bma(shuffled, frames), 0.0);
    EXPECT_LE(bma(shuffled, frames), 1.0);
  }
}

}  // namespace
}  // namespace ptzlm
