#include <gtest/gtest.h>

#include <random>

#include "kamest/covering.hpp"

using namespace kamest;

namespace {

RVec r(std::initializer_list<double> v) {
  RVec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST(Covering, UnitSquare) {
  const auto cov = cover_box(r({0, 0}), r({1, 1}), 0.3);
  EXPECT_LE(cov.N(), 16u);
  EXPECT_EQ(cov.cardinality_bound(), 16.0);
  EXPECT_LT(cov.edge, 0.3);
  for (const RVec& c : cov.centers) EXPECT_TRUE((c.array() >= 0.0).all() && (c.array() <= 1.0).all());
}

TEST(Covering, SinglePoint) {
  const auto cov = cover_points({r({0.4, 0.7})}, 0.01);
  EXPECT_EQ(cov.N(), 1u);
  EXPECT_TRUE(cov.covers(r({0.4, 0.7})));
  const auto box = cover_box(r({0.4, 0.7}), r({0.4, 0.7}), 0.01);
  EXPECT_EQ(box.N(), 1u);
}

TEST(Covering, PointCloudInThreeDimensions) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RVec> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(r({u(gen), u(gen), u(gen)}));
  const auto cov = cover_points(pts, 0.5);
  EXPECT_LE(cov.N(), 27u);
  EXPECT_LE(static_cast<double>(cov.N()), cov.cardinality_bound());
  for (const RVec& p : pts) EXPECT_TRUE(cov.covers(p));
}

TEST(Covering, CertificateRadii) {
  // r_hat = 1/128 on [0, 1]^2 and on [0, 1]^2 with r_hat = 0.6
  const auto fine = cover_box(r({0, 0}), r({1, 1}), 1.0 / 128.0);
  EXPECT_LE(fine.N(), 16641u);
  EXPECT_EQ(fine.cardinality_bound(), 16641.0);
  const auto coarse = cover_box(r({0, 0}), r({1, 1}), 0.6);
  EXPECT_LE(coarse.N(), 4u);
}

TEST(Covering, SampledCoverageOfBoxes) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    RVec lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo(i) = u(gen) - 0.5;
      hi(i) = lo(i) + 0.1 + 2.0 * u(gen);
    }
    const double rad = 0.05 + 0.5 * u(gen);
    const auto cov = cover_box(lo, hi, rad);
    EXPECT_LE(static_cast<double>(cov.N()), cov.cardinality_bound());
    for (int a = 0; a < 2000; ++a) {
      RVec x(n);
      for (int i = 0; i < n; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * u(gen);
      ASSERT_TRUE(cov.covers(x));
    }
    for (int i = 0; i < n; ++i) EXPECT_TRUE(cov.covers(hi));
  }
}

TEST(Covering, Deterministic) {
  std::vector<RVec> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(r({std::sin(i * 1.3), std::cos(i * 0.7)}));
  const auto a = cover_points(pts, 0.2);
  const auto b = cover_points(pts, 0.2);
  ASSERT_EQ(a.N(), b.N());
  for (std::size_t i = 0; i < a.N(); ++i) EXPECT_EQ(a.centers[i], b.centers[i]);
}

TEST(Covering, BadRadius) {
  EXPECT_THROW(cover_box(r({0, 0}), r({1, 1}), 0.0), Error);
  EXPECT_THROW(cover_box(r({0, 0}), r({1, 1}), -1.0), Error);
  EXPECT_THROW(cover_points({}, 0.1), Error);
}

TEST(Covering, ForCertificate) {
  const auto D = DomainSpec::make_box({{0, 1}, {0, 1}}, 1.0, 1.0, 1.5);
  Certificate c;
  c.r_hat = 1.0 / 128.0;
  c.N_bound = 16641.0;
  const auto cov = cover_for_certificate(D, c);
  EXPECT_EQ(cov.radius, c.r_hat);
  c.N_bound = 100.0;
  EXPECT_THROW(cover_for_certificate(D, c), ConsistencyError);
}
