#include <gtest/gtest.h>

#include <random>

#include "ortho/geometry.hpp"

using namespace ortho;

TEST(SegmentIntersectsBox, BelowBoxIsClear) {
  EXPECT_FALSE(segment_intersects_box({{0, 0}, {10, 0}}, {{5, 5}, 2}));
}

TEST(SegmentIntersectsBox, ThroughInterior) {
  EXPECT_TRUE(segment_intersects_box({{0, 0}, {10, 0}}, {{5, 0}, 2}));
}

TEST(SegmentIntersectsBox, AlongBoundaryIsClear) {
  EXPECT_FALSE(segment_intersects_box({{0, 2}, {10, 2}}, {{5, 0}, 2}));
  EXPECT_FALSE(segment_intersects_box({{3, -5}, {3, 5}}, {{5, 0}, 2}));
}

TEST(SegmentIntersectsBox, EndingOnBoundaryIsClear) {
  EXPECT_FALSE(segment_intersects_box({{0, 0}, {3, 0}}, {{5, 0}, 2}));
  EXPECT_TRUE(segment_intersects_box({{0, 0}, {3.5, 0}}, {{5, 0}, 2}));
}

TEST(SegmentIntersectsBox, DegenerateSegmentInsideBox) {
  EXPECT_TRUE(segment_intersects_box({{5, 0}, {5, 0}}, {{5, 0}, 2}));
  EXPECT_FALSE(segment_intersects_box({{7, 0}, {7, 0}}, {{5, 0}, 2}));
}

// Brute-force oracle: sample interior points of the segment against strict box inequalities.
static bool sampled_intersection(const Segment& s, const AABox& b) {
  for (int i = 1; i <= 1000; ++i) {
    const double t = i / 1001.0;
    const double x = s.a.x + t * (s.b.x - s.a.x);
    const double y = s.a.y + t * (s.b.y - s.a.y);
    if (x > b.min_x() && x < b.max_x() && y > b.min_y() && y < b.max_y()) return true;
  }
  return false;
}

TEST(SegmentIntersectsBox, AgreesWithSamplingOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-50, 50);
  std::uniform_real_distribution<double> half(0.5, 15);
  int checked = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const AABox box{{coord(rng), coord(rng)}, half(rng)};
    Segment seg;
    seg.a = {coord(rng), coord(rng)};
    seg.b = (trial % 2) ? Point{coord(rng), seg.a.y} : Point{seg.a.x, coord(rng)};
    // Keep away from boundary coincidence where sampling cannot decide.
    const double fixed = (trial % 2) ? seg.a.y : seg.a.x;
    const double lo = (trial % 2) ? box.min_y() : box.min_x();
    const double hi = (trial % 2) ? box.max_y() : box.max_x();
    if (std::abs(fixed - lo) < 1e-3 || std::abs(fixed - hi) < 1e-3) continue;
    const double along_lo = (trial % 2) ? box.min_x() : box.min_y();
    const double along_hi = (trial % 2) ? box.max_x() : box.max_y();
    const double s0 = (trial % 2) ? std::min(seg.a.x, seg.b.x) : std::min(seg.a.y, seg.b.y);
    const double s1 = (trial % 2) ? std::max(seg.a.x, seg.b.x) : std::max(seg.a.y, seg.b.y);
    const double overlap = std::min(s1, along_hi) - std::max(s0, along_lo);
    if (overlap > -0.5 && overlap < 0.5) continue;
    ++checked;
    ASSERT_EQ(segment_intersects_box(seg, box), sampled_intersection(seg, box)) << trial;
  }
  EXPECT_GT(checked, 5000);
}

TEST(OrthoRoute, NormalizationMergesAndDrops) {
  const OrthoRoute r{{0, 0}, {0, 0}, {0, 1}, {0, 2}, {3, 2}, {7, 2}};
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.points()[1], (Point{0, 2}));
  EXPECT_EQ(r.back(), (Point{7, 2}));
}

TEST(OrthoRoute, RejectsDiagonalSegment) {
  EXPECT_THROW((OrthoRoute{{0, 0}, {1, 1}}), Error);
}

TEST(OrthoRoute, LengthExamples) {
  EXPECT_DOUBLE_EQ(polyline_length({{0, 0}, {0, 2}, {7, 2}}), 9.0);
  EXPECT_DOUBLE_EQ(polyline_length({{0, 0}, {10, 0}}), 10.0);
  EXPECT_DOUBLE_EQ(polyline_length({{0, 0}, {0, 2}, {7, 2}, {7, 0}, {10, 0}}), 14.0);
}

TEST(OrthoRoute, BendExamples) {
  EXPECT_EQ(count_bends({{0, 0}, {10, 0}}), 0);
  EXPECT_EQ(count_bends({{0, 0}, {0, 2}, {7, 2}}), 1);
  EXPECT_EQ(count_bends({{0, 0}, {0, 2}, {7, 2}, {7, 0}, {10, 0}}), 3);
}

TEST(OrthoRoute, TranslateExamples) {
  EXPECT_EQ(translate_route({{0, 0}, {5, 0}}, 1, 1), (OrthoRoute{{1, 1}, {6, 1}}));
  const OrthoRoute r{{0, 0}, {0, 2}, {7, 2}};
  EXPECT_EQ(translate_route(r, 0, 0), r);
  EXPECT_EQ(translate_route(r, 0.5, -0.5), (OrthoRoute{{0.5, -0.5}, {0.5, 1.5}, {7.5, 1.5}}));
}

TEST(OrthoRoute, TranslationPreservesLengthAndBends) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> step(-20, 20);
  std::uniform_real_distribution<double> off(-5, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Point> pts{{0, 0}};
    for (int i = 0; i < 6; ++i) {
      Point p = pts.back();
      (i % 2 ? p.x : p.y) += step(rng);
      pts.push_back(p);
    }
    const OrthoRoute r(pts);
    const OrthoRoute t = translate_route(r, off(rng), off(rng));
    EXPECT_NEAR(polyline_length(t), polyline_length(r), 1e-9);
    EXPECT_EQ(count_bends(t), count_bends(r));
  }
}
