#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ifsc/continua.hpp"
#include "ifsc/intersect.hpp"
#include "support.hpp"

using namespace ifsc;
using ifsc::testkit::Rng;

namespace {

Polyline reversed(Polyline l) {
  std::reverse(l.vertices.begin(), l.vertices.end());
  return l;
}

// Archimedean spiral: simple, with many vertices and close neighbouring turns.
Polyline spiral(std::size_t n, double turns) {
  Polyline l;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = turns * 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    const double r = 0.1 + t;
    l.vertices.push_back(Point{r * std::cos(t), r * std::sin(t)});
  }
  return l;
}

}  // namespace

TEST(SelfIntersects, Examples) {
  const Polyline square{{Point{0.0, 0.0}, Point{1.0, 0.0}, Point{1.0, 1.0}, Point{0.0, 1.0}}};
  EXPECT_FALSE(self_intersects(square, 0.0).intersects);
  const Polyline bowtie{{Point{0.0, 0.0}, Point{2.0, 2.0}, Point{2.0, 0.0}, Point{0.0, 2.0}}};
  const auto r = self_intersects(bowtie, 0.0);
  EXPECT_TRUE(r.intersects);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(*r.witness, std::make_pair(std::size_t{0}, std::size_t{2}));
}

TEST(SelfIntersects, TouchingAtAVertexCounts) {
  const Polyline l{{Point{0.0, 0.0}, Point{2.0, 0.0}, Point{2.0, 1.0}, Point{1.0, 0.0}}};
  EXPECT_TRUE(self_intersects(l, 0.0).intersects);
}

TEST(SelfIntersects, ToleranceCatchesNearMiss) {
  const Polyline l{{Point{0.0, 0.0}, Point{2.0, 0.0}, Point{2.0, 1.0}, Point{1.0, 1e-6}}};
  EXPECT_FALSE(self_intersects(l, 0.0).intersects);
  EXPECT_TRUE(self_intersects(l, 2e-6).intersects);
}

TEST(SelfIntersects, ZigzagSixIsSimple) {
  const Polyline l = build_zigzag_ln(6);
  EXPECT_GT(l.vertices.size(), 10000u);
  EXPECT_FALSE(self_intersects(l, 0.0).intersects);
}

TEST(SelfIntersects, SymmetricInSegmentOrder) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const Polyline l = testkit::random_walk(rng, 12);
    EXPECT_EQ(self_intersects(l, 0.0).intersects, self_intersects(reversed(l), 0.0).intersects);
  }
}

TEST(SelfIntersects, MonotoneInTolerance) {
  Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const Polyline l = testkit::random_walk(rng, 8);
    const double t1 = testkit::uniform(rng, 0.0, 0.05), t2 = t1 + testkit::uniform(rng, 0.0, 0.05);
    if (self_intersects(l, t1).intersects) EXPECT_TRUE(self_intersects(l, t2).intersects);
  }
}

TEST(SelfIntersects, SweepAgreesWithAllPairs) {
  Rng rng(23);
  int hits = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Polyline l = testkit::random_walk(rng, 3 + trial % 40);
    const bool brute = detail::self_intersects_brute(l, 0.0).intersects;
    EXPECT_EQ(detail::self_intersects_sweep(l, 0.0).intersects, brute) << "trial " << trial;
    EXPECT_EQ(detail::self_intersects_prune(l, 0.0).intersects, brute) << "trial " << trial;
    hits += brute;
  }
  EXPECT_GT(hits, 50);
  EXPECT_LT(hits, 400);
}

TEST(SelfIntersects, LargeSpiralUsesSweep) {
  Polyline l = spiral(40000, 30.0);
  EXPECT_FALSE(self_intersects(l, 0.0).intersects);
  // Pull one vertex across the neighbouring turn.
  l.vertices[20000] = 0.5 * l.vertices[20000];
  EXPECT_TRUE(self_intersects(l, 0.0).intersects);
}

TEST(SelfIntersects, LargeNonPlanarPolyline) {
  Polyline l;
  for (int i = 0; i < 12000; ++i) {
    const double t = 0.01 * i;
    l.vertices.push_back(Point{std::cos(t), std::sin(t), 0.001 * t});
  }
  EXPECT_FALSE(self_intersects(l, 0.0).intersects);
  l.vertices.push_back(l.vertices[10]);
  EXPECT_TRUE(self_intersects(l, 0.0).intersects);
}

TEST(SelfIntersects, DefaultTolerance) {
  const Polyline l{{Point{0.0, 0.0}, Point{3.0, 4.0}}};
  EXPECT_DOUBLE_EQ(default_intersection_tol(l), 5e-12);
}

TEST(SegmentDistance, Basics) {
  const Point a{0.0, 0.0}, b{1.0, 0.0}, c{0.5, 2.0}, d{0.5, 1.0};
  EXPECT_NEAR(segment_distance2(a.coords(), b.coords(), c.coords(), d.coords()), 1.0, 1e-15);
  const Point e{2.0, 1.0}, f{3.0, 1.0};
  EXPECT_NEAR(segment_distance2(a.coords(), b.coords(), e.coords(), f.coords()), 2.0, 1e-15);
}
