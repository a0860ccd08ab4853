#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ifsc/geometry.hpp"
#include "support.hpp"

using namespace ifsc;
using ifsc::testkit::Rng;

TEST(Point, DimensionAndArithmetic) {
  const Point a{1.0, 2.0}, b{3.0, -1.0};
  EXPECT_EQ(a.dim(), 2u);
  EXPECT_EQ(a + b, (Point{4.0, 1.0}));
  EXPECT_EQ(b - a, (Point{2.0, -3.0}));
  EXPECT_DOUBLE_EQ(distance(Point{0.0, 0.0}, Point{3.0, 4.0}), 5.0);
  EXPECT_THROW(distance(Point{0.0, 0.0}, Point{0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW((Point{0.0, std::nan("")}), std::domain_error);
}

TEST(Polar, Examples) {
  EXPECT_EQ(polar_to_cartesian(0.0, 0.7), (Point{0.0, 0.0}));
  EXPECT_EQ(polar_to_cartesian(1.0, 0.0), (Point{1.0, 0.0}));
  // 30-digit reference: cos(1/2)/2, sin(1/2)/2.
  const Point p = polar_to_cartesian(0.5, 0.5);
  EXPECT_NEAR(p[0], 0.438791280945186358, 1e-15);
  EXPECT_NEAR(p[1], 0.239712769302101500, 1e-15);
  EXPECT_THROW(polar_to_cartesian(-1e-9, 0.0), std::domain_error);
  EXPECT_THROW(polar_to_cartesian(1.0, INFINITY), std::domain_error);
}

TEST(Polar, NormEqualsRadius) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double r = testkit::uniform(rng, 0.0, 10.0);
    const double t = testkit::uniform(rng, -20.0, 20.0);
    EXPECT_NEAR(polar_to_cartesian(r, t).norm(), r, 1e-12 * std::max(1.0, r));
  }
}

TEST(Polar, RoundTrip) {
  const auto [r, t] = cartesian_to_polar(polar_to_cartesian(0.25, 0.3));
  EXPECT_NEAR(r, 0.25, 1e-15);
  EXPECT_NEAR(t, 0.3, 1e-14);
}

TEST(PolylineLength, Examples) {
  EXPECT_DOUBLE_EQ(polyline_length(Polyline{{Point{0.0, 0.0}, Point{1.0, 0.0}}}), 1.0);
  EXPECT_DOUBLE_EQ(polyline_length(Polyline{{Point{0.0, 0.0}, Point{1.0, 0.0}, Point{1.0, 1.0}}}), 2.0);
  EXPECT_THROW(polyline_length(Polyline{{Point{0.0, 0.0}}}), std::invalid_argument);
  EXPECT_THROW(polyline_length(Polyline{{Point{0.0, 0.0}, Point{0.0, 0.0}}}), std::invalid_argument);
}

TEST(PolylineLength, RigidMotionInvariance) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Polyline l = testkit::random_walk(rng, 50);
    const MapSpec m = testkit::rigid_motion(testkit::uniform(rng, 0, 7), testkit::uniform(rng, -5, 5),
                                            testkit::uniform(rng, -5, 5));
    const double a = polyline_length(l), b = polyline_length(testkit::apply(m, l));
    EXPECT_LT(std::abs(a - b) / a, 1e-12);
  }
}

TEST(PolylineLength, AdditiveUnderConcatenation) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Polyline a = testkit::random_walk(rng, 20);
    Polyline b = testkit::random_walk(rng, 20);
    b.vertices.front() = a.vertices.back();
    Polyline ab = a;
    ab.vertices.insert(ab.vertices.end(), b.vertices.begin() + 1, b.vertices.end());
    EXPECT_NEAR(polyline_length(ab), polyline_length(a) + polyline_length(b), 1e-12);
  }
}

TEST(SamplePolyline, SegmentContainsHalves) {
  const PointCloud c = sample_polyline(Polyline{{Point{0.0, 0.0}, Point{1.0, 0.0}}}, 0.5);
  auto has = [&](const Point& p) {
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.point(i) == p) return true;
    return false;
  };
  EXPECT_TRUE(has(Point{0.0, 0.0}));
  EXPECT_TRUE(has(Point{0.5, 0.0}));
  EXPECT_TRUE(has(Point{1.0, 0.0}));
  EXPECT_THROW(sample_polyline(Polyline{{Point{0.0, 0.0}, Point{1.0, 0.0}}}, 0.0), std::domain_error);
  EXPECT_THROW(sample_polyline(Polyline{{Point{0.0, 0.0}, Point{1.0, 0.0}}}, -1.0), std::domain_error);
}

TEST(SamplePolyline, PitchContract) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Polyline l = testkit::random_walk(rng, 10);
    const double delta = testkit::uniform(rng, 1e-3, 0.2);
    const PointCloud c = sample_polyline(l, delta);
    EXPECT_GE(c.size(), static_cast<std::size_t>(std::ceil(polyline_length(l) / delta)) + 1);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(distance(c[i - 1], c[i]), delta * (1 + 1e-12));
    std::size_t v = 0;
    for (std::size_t i = 0; i < c.size() && v < l.vertices.size(); ++i)
      if (c.point(i) == l.vertices[v]) ++v;
    EXPECT_EQ(v, l.vertices.size());
  }
}

TEST(SampleGraphCurve, ConstantIsCollinear) {
  const GraphCurve zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
  const PointCloud c = sample_graph_curve(zero, 0.5, 1.0, 0.1);
  EXPECT_GE(c.size(), 6u);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i][1], 0.0);
  EXPECT_EQ(c[c.size() - 1][0], 1.0);
}

TEST(SampleGraphCurve, NeedleZeroAtInversePi) {
  EXPECT_NEAR(needle_profile(1.0 / std::numbers::pi), 0.0, 1e-15);
  EXPECT_EQ(needle_profile(0.0), 0.0);
}

TEST(SampleGraphCurve, ArcLengthMatchesQuadrature) {
  const Polyline l = sample_graph_polyline(needle_graph(), 0.05, 1.0, 1e-3);
  const double oracle = testkit::needle_arc_length(0.05);
  EXPECT_NEAR(polyline_length(l), oracle, 0.02 * oracle);
}

TEST(SampleGraphCurve, PitchContractNearSingularity) {
  const double delta = 1e-3;
  const PointCloud c = sample_graph_curve(needle_graph(), 0.01, 1.0, delta);
  for (std::size_t i = 1; i < c.size(); ++i) ASSERT_LE(distance(c[i - 1], c[i]), delta);
}

TEST(SampleGraphCurve, RejectsBadInterval) {
  EXPECT_THROW(sample_graph_curve(needle_graph(), 0.0, 1.0, 0.1), std::domain_error);
  EXPECT_THROW(sample_graph_curve(needle_graph(), -0.5, 1.0, 0.1), std::domain_error);
  EXPECT_THROW(sample_graph_curve(needle_graph(), 0.5, 0.5, 0.1), std::domain_error);
}

TEST(ContinuumModel, MarkedAndRefine) {
  const ContinuumModel m = segment_model(Point{0.0, 0.0}, Point{1.0, 0.0});
  EXPECT_EQ(m.mark("a"), (Point{0.0, 0.0}));
  EXPECT_EQ(m.mark("b"), (Point{1.0, 0.0}));
  EXPECT_THROW(m.mark("zz"), std::invalid_argument);
  const PointCloud c = m.refine(0.1);
  EXPECT_GE(c.size(), 11u);
  EXPECT_DOUBLE_EQ(c.pitch(), 0.1);
}
