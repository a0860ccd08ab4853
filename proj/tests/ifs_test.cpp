#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ifsc/continua.hpp"
#include "ifsc/ifs.hpp"
#include "support.hpp"

using namespace ifsc;
using ifsc::testkit::Rng;

namespace {

IfsSpec interval_ifs() {
  IfsSpec F;
  F.maps = {scaling_map(0.5, Point{0.0, 0.0}), scaling_map(0.5, Point{0.5, 0.0})};
  return F;
}

double sup_distance(const Point& a, const Point& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST(EvalMap, NeedleExamples) {
  const MapSpec h1 = needle_h1_map(2);
  const Point y = eval_map(h1, Point{1.0, 1.0});
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 0.01);
  const MapSpec h = compose({needle_h1_map(2), needle_h2_map(2)});
  const Point z = eval_map(h, Point{1.0, 1.0});
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  // sin(1) + 1/100
  EXPECT_NEAR(z[1], 0.85147098480789650665, 1e-15);
  EXPECT_EQ(eval_map(h, Point{0.0, 0.7}), (Point{0.0, 0.0}));
}

TEST(EvalMap, AffineAndClosedForms) {
  const MapSpec f = affine_map(2, {0.0, -1.0, 1.0, 0.0}, {1.0, 2.0});
  EXPECT_EQ(eval_map(f, Point{1.0, 0.0}), (Point{1.0, 3.0}));
  EXPECT_EQ(eval_map(scaling_map(0.5, Point{0.5, 0.0}), Point{1.0, 1.0}), (Point{1.0, 0.5}));
  EXPECT_EQ(eval_map(identity_map(3), Point{1.0, 2.0, 3.0}), (Point{1.0, 2.0, 3.0}));
  EXPECT_EQ(eval_map(constant_map(Point{4.0, 5.0}), Point{1.0, 2.0}), (Point{4.0, 5.0}));
  const Point hv = eval_map(needle_halving_map(), Point{0.5, needle_profile(0.5)});
  EXPECT_DOUBLE_EQ(hv[0], 0.25);
  EXPECT_DOUBLE_EQ(hv[1], needle_profile(0.25));
}

TEST(EvalMap, Errors) {
  EXPECT_THROW(eval_map(needle_h1_map(2), Point{1.0, 2.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(eval_map(needle_h1_map(2), Point{1.5, 0.0}), std::domain_error);
  EXPECT_THROW(eval_map(needle_h2_map(2), Point{-0.1, 0.0}), std::domain_error);
  EXPECT_THROW(affine_map(2, {1.0, 0.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(compose({}), std::invalid_argument);
  EXPECT_THROW(compose({identity_map(2), identity_map(3)}), std::invalid_argument);
}

TEST(CertifiedLipschitz, FormulaBounds) {
  const MapSpec half = scaling_map(0.5, Point{0.0, 0.0});
  ASSERT_TRUE(half.lip_certified);
  EXPECT_NEAR(*half.lip_bound, 0.5, 1e-14);
  EXPECT_GE(*half.lip_bound, 0.5);
  EXPECT_EQ(*identity_map(2).lip_bound, 1.0);
  EXPECT_EQ(*constant_map(Point{1.0, 1.0}).lip_bound, 0.0);
  const MapSpec h1 = needle_h1_map(2);
  ASSERT_TRUE(h1.lip_certified);
  EXPECT_NEAR(*h1.lip_bound, 1.01, 1e-15);
  EXPECT_FALSE(needle_h2_map(2).lip_bound.has_value());
  EXPECT_FALSE(needle_halving_map().lip_certified);
  const MapSpec c = compose({half, scaling_map(0.5, Point{1.0, 0.0})});
  EXPECT_NEAR(*c.lip_bound, 0.25, 1e-14);
  EXPECT_FALSE(compose({half, needle_h2_map(2)}).lip_bound.has_value());
}

TEST(CertifiedLipschitz, RandomAffineNeverExceeded) {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + trial % 4;
    const MapSpec f = testkit::random_affine(rng, dim, testkit::uniform(rng, 0.1, 2.0));
    for (int s = 0; s < 100; ++s) {
      const Point x = testkit::random_point(rng, dim), y = testkit::random_point(rng, dim);
      EXPECT_LE(distance(eval_map(f, x), eval_map(f, y)), *f.lip_bound * distance(x, y) + 1e-15);
    }
  }
}

TEST(LipschitzEstimate, HalvingIsCertified) {
  const auto est = lipschitz_estimate(scaling_map(0.5, Point{0.0, 0.0}), needle_box(2), 1000, 1);
  ASSERT_TRUE(est.certified_upper.has_value());
  EXPECT_NEAR(*est.certified_upper, 0.5, 1e-14);
  EXPECT_NEAR(est.lower, 0.5, 1e-12);
}

TEST(LipschitzEstimate, NeedleFlatteningRatios) {
  const auto est = lipschitz_estimate(needle_h1_map(2), needle_box(2), 200000, 7);
  ASSERT_TRUE(est.certified_upper.has_value());
  EXPECT_LE(est.lower, *est.certified_upper);
  // The Jacobian's largest singular value on the box is at most sqrt(1 + 1e-4).
  EXPECT_LE(est.lower, std::sqrt(1.0 + 1e-4) * (1 + 1e-12));
  EXPECT_GT(est.lower, 0.99);
  EXPECT_THROW(lipschitz_estimate(needle_h1_map(2), needle_box(2), 1, 7), std::invalid_argument);
  EXPECT_THROW(lipschitz_estimate(needle_h1_map(2), needle_box(3), 10, 7), std::invalid_argument);
}

TEST(NeedleFlattening, SupNormNonExpansion) {
  Rng rng(42);
  const MapSpec h1 = needle_h1_map(2);
  for (int s = 0; s < 100000; ++s) {
    const Point x{testkit::uniform(rng, 0, 1), testkit::uniform(rng, -1, 1)};
    const Point y{testkit::uniform(rng, 0, 1), testkit::uniform(rng, -1, 1)};
    ASSERT_LE(sup_distance(eval_map(h1, x), eval_map(h1, y)), sup_distance(x, y) * (1 + 1e-15));
  }
}

TEST(ClassifyContraction, Classes) {
  const PointCloud domain = testkit::circle_cloud(1e-2);
  EXPECT_EQ(classify_contraction(scaling_map(0.5, Point{0.0, 0.0}), domain, 1000, 1).kind,
            ContractionClass::strict);
  EXPECT_EQ(classify_contraction(identity_map(2), domain, 1000, 1).kind, ContractionClass::boundary);
  EXPECT_EQ(classify_contraction(testkit::rigid_motion(1.0, 2.0, 3.0), domain, 1000, 1).kind,
            ContractionClass::boundary);

  const PointCloud needle = needle_image_cloud(default_needle_base(), 100.0, 1e-3);
  const auto rep = classify_contraction(needle_halving_map(), needle, 200000, 1);
  EXPECT_EQ(rep.kind, ContractionClass::expansion_witness);
  EXPECT_GT(rep.max_ratio, 1.0);
  const double direct = distance(eval_map(needle_halving_map(), rep.witness_x),
                                 eval_map(needle_halving_map(), rep.witness_y)) /
                        distance(rep.witness_x, rep.witness_y);
  EXPECT_NEAR(direct, rep.max_ratio, 1e-12 * rep.max_ratio);
}

TEST(ClassifyContraction, WeakCandidate) {
  PointCloud domain(2, 1e-3);
  for (int i = 0; i <= 1000; ++i) domain.push_back(Point{i / 1000.0, 0.0});
  EXPECT_EQ(classify_contraction(scaling_map(1.0 - 1e-12, Point{0.0, 0.0}), domain, 1000, 3).kind,
            ContractionClass::boundary);
  // Isometric along x, halving along y.
  PointCloud mixed(2, 1.0);
  mixed.push_back(Point{0.0, 0.0});
  mixed.push_back(Point{1.0, 0.0});
  mixed.push_back(Point{0.0, 1.0});
  const MapSpec squash = affine_map(2, {1.0, 0.0, 0.0, 0.5}, {0.0, 0.0});
  EXPECT_EQ(classify_contraction(squash, mixed, 1000, 3).kind, ContractionClass::weak_candidate);
}

TEST(ClassifyContraction, Errors) {
  PointCloud single(2, 1.0);
  single.push_back(Point{0.0, 0.0});
  single.push_back(Point{0.0, 0.0});
  EXPECT_THROW(classify_contraction(identity_map(2), single, 10, 1), std::invalid_argument);
  EXPECT_THROW(classify_contraction(identity_map(3), testkit::circle_cloud(0.1), 10, 1),
               std::invalid_argument);
  EXPECT_THROW(classify_contraction(identity_map(2), testkit::circle_cloud(0.1), 0, 1),
               std::invalid_argument);
}

TEST(Hutchinson, IntervalExample) {
  PointCloud seg(2, 0.5);
  seg.push_back(Point{0.0, 0.0});
  seg.push_back(Point{1.0, 0.0});
  const PointCloud img = hutchinson(interval_ifs(), seg, 0.0);
  EXPECT_EQ(img.size(), 3u);
  EXPECT_NEAR(img.pitch(), 0.25, 1e-14);
  EXPECT_THROW(hutchinson(IfsSpec{}, seg), std::invalid_argument);
  PointCloud bad(3, 1.0);
  bad.push_back(Point{0.0, 0.0, 0.0});
  EXPECT_THROW(hutchinson(interval_ifs(), bad), std::invalid_argument);
}

TEST(Hutchinson, MonotoneUnderInclusion) {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    IfsSpec F;
    for (int k = 0; k < 3; ++k) F.maps.push_back(testkit::random_affine(rng, 2, 0.6));
    const PointCloud b = testkit::random_cloud(rng, 100, 2);
    PointCloud a(2, 1.0);
    for (std::size_t i = 0; i < b.size(); i += 2) a.push_back(b.point(i));
    EXPECT_TRUE(is_subset(hutchinson(F, a, 0.0), hutchinson(F, b, 0.0)));
  }
}

TEST(Hutchinson, ContractsHausdorffDistance) {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    IfsSpec F;
    const double lam = testkit::uniform(rng, 0.2, 0.9);
    for (int k = 0; k < 2 + trial % 3; ++k) F.maps.push_back(testkit::random_affine(rng, 2, lam));
    const PointCloud a = testkit::random_cloud(rng, 60, 2);
    const PointCloud b = testkit::random_cloud(rng, 80, 2);
    const double before = hausdorff(a, b);
    const double after = hausdorff(hutchinson(F, a, 0.0), hutchinson(F, b, 0.0));
    EXPECT_LE(after, F.max_lipschitz() * before * (1 + 1e-12));
  }
}

TEST(Attractor, IntervalConverges) {
  PointCloud seed(2, 1.0);
  seed.push_back(Point{0.3, 0.0});
  const auto res = attractor(interval_ifs(), seed, 1e-4, 40);
  EXPECT_TRUE(res.converged);
  PointCloud unit(2, 1e-4);
  for (int i = 0; i <= 10000; ++i) unit.push_back(Point{i / 10000.0, 0.0});
  EXPECT_LT(hausdorff(res.cloud, unit), 1e-3);
  EXPECT_NEAR(res.lambda, 0.5, 1e-14);
  for (std::size_t k = 1; k < res.steps.size(); ++k) EXPECT_LE(res.steps[k], res.steps[k - 1] * 0.5 * (1 + 1e-9));
}

TEST(Attractor, RefusesWeakModeAndBadArguments) {
  IfsSpec weak = interval_ifs();
  weak.mode = IfsMode::weak;
  PointCloud seed(2, 1.0);
  seed.push_back(Point{0.0, 0.0});
  EXPECT_THROW(attractor(weak, seed, 1e-3, 10), std::invalid_argument);
  IfsSpec unbounded;
  unbounded.maps = {needle_h2_map(2)};
  EXPECT_THROW(attractor(unbounded, seed, 1e-3, 10), std::invalid_argument);
  EXPECT_THROW(attractor(interval_ifs(), seed, 0.0, 10), std::domain_error);
  EXPECT_THROW(attractor(interval_ifs(), seed, 1e-3, 0), std::domain_error);
}

TEST(IfsText, RoundTrip) {
  const std::string text =
      "# needle test\n"
      "dim 2\n"
      "mode weak\n"
      "affine 0.5 0 0 0.5 0.25 0   # halving\n"
      "needle_halving lip 2\n"
      "compose\n"
      "begin\n"
      "  needle_h1 100\n"
      "  needle_h2\n"
      "end\n"
      "constant 0 0\n"
      "identity\n";
  const IfsSpec F = parse_ifs(text);
  ASSERT_EQ(F.maps.size(), 5u);
  EXPECT_EQ(F.mode, IfsMode::weak);
  EXPECT_EQ(*F.maps[1].lip_bound, 2.0);
  EXPECT_FALSE(F.maps[1].lip_certified);
  const std::string again = to_text(F);
  EXPECT_EQ(to_text(parse_ifs(again)), again);
  Rng rng(45);
  for (int s = 0; s < 100; ++s) {
    const Point x{testkit::uniform(rng, 0, 1), testkit::uniform(rng, -1, 1)};
    const IfsSpec G = parse_ifs(again);
    for (std::size_t i = 0; i < F.maps.size(); ++i) EXPECT_EQ(eval_map(F.maps[i], x), eval_map(G.maps[i], x));
  }
}

TEST(IfsText, Errors) {
  EXPECT_THROW(parse_ifs(""), std::invalid_argument);
  EXPECT_THROW(parse_ifs("affine 1 2 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("bogus\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("identity\ndim 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("compose\nbegin\nidentity\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("end\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("mode lazy\n"), std::invalid_argument);
  EXPECT_THROW(parse_ifs("affine 1 0 0 1 0 x\n"), std::invalid_argument);
  try {
    parse_ifs("identity\n\nbogus 1\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}
