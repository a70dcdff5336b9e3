#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/rng.hpp"
#include "support.hpp"

using namespace stacklab;

TEST(QTransform, LogitIsZeroAtOneHalf) { EXPECT_DOUBLE_EQ(q_eval(QTransform::logit(), 0.5), 0.0); }

TEST(QTransform, LogitAtPointTwo) {
  const double expected = -std::log(1.0 / 0.2 - 1.0);
  EXPECT_NEAR(q_eval(QTransform::logit(), 0.2), expected, 1e-12);
  EXPECT_NEAR(q_eval(QTransform::logit(), 0.2), -1.3863, 1e-4);
}

TEST(QTransform, StrictlyIncreasingOnRandomPairs) {
  RngStream rng(7);
  for (const auto& q : {QTransform::logit(), QTransform::identity()}) {
    for (int k = 0; k < 1000; ++k) {
      double a = rng.uniform(), b = rng.uniform();
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      EXPECT_LT(q(a), q(b));
    }
  }
}

TEST(QTransform, LogitRoundTrip) {
  const QTransform q = QTransform::logit();
  for (double p : {1e-6, 1e-3, 0.1, 0.37, 0.5, 0.9, 1 - 1e-6}) {
    EXPECT_NEAR(q.inverse(q(p)), p, 1e-12) << p;
  }
}

TEST(QTransform, RejectsNaN) {
  EXPECT_THROW(q_eval(QTransform::logit(), std::numeric_limits<double>::quiet_NaN()), std::domain_error);
}

TEST(QTransform, ClampsTheEndpoints) {
  const QTransform q = QTransform::logit();
  EXPECT_TRUE(std::isfinite(q(0.0)));
  EXPECT_TRUE(std::isfinite(q(1.0)));
  EXPECT_NEAR(q(0.0), stacklab::test_support::logit(kProbFloor), 1e-6);
}

TEST(QTransform, CustomMap) {
  const QTransform q = QTransform::custom([](double p) { return 3 * p; }, [](double v) { return v / 3; });
  EXPECT_DOUBLE_EQ(q(0.25), 0.75);
  EXPECT_DOUBLE_EQ(q.inverse(0.75), 0.25);
}

TEST(RngStream, SameLabelSameDraws) {
  const RngStream root(42);
  RngStream a = root.derive(Purpose::kUser, 3, 7);
  RngStream b = root.derive(Purpose::kUser, 3, 7);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a.next(), b.next());
}

TEST(RngStream, NeighbouringLabelsAreUncorrelated) {
  const RngStream root(42);
  RngStream a = root.derive(Purpose::kUser, 3, 7);
  RngStream b = root.derive(Purpose::kUser, 3, 8);
  const int n = 10000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int k = 0; k < n; ++k) {
    const double x = a.uniform(), y = b.uniform();
    sa += x, sb += y, saa += x * x, sbb += y * y, sab += x * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double r = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::fabs(r), 0.05);
}

TEST(RngStream, RootSeedMatters) {
  RngStream a = RngStream(1).derive(Purpose::kUser, 3, 7);
  RngStream b = RngStream(2).derive(Purpose::kUser, 3, 7);
  int same = 0;
  for (int k = 0; k < 100; ++k) same += a.next() == b.next();
  EXPECT_LT(same, 2);
}

TEST(RngStream, PurposeSeparatesStreams) {
  RngStream a = RngStream(1).derive(Purpose::kOutcome, 0, 0);
  RngStream b = RngStream(1).derive(Purpose::kPopulation, 0, 0);
  EXPECT_NE(a.next(), b.next());
}

TEST(RngStream, UniformAndBelowRanges) {
  RngStream r(5);
  for (int k = 0; k < 10000; ++k) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7u);
  }
}

TEST(RngStream, NormalMoments) {
  RngStream r(9);
  const int n = 100000;
  double s = 0, ss = 0;
  for (int k = 0; k < n; ++k) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 3 * 1.0 / std::sqrt(n));
  EXPECT_NEAR(ss / n, 1.0, 3 * std::sqrt(2.0 / n));
}

TEST(Schema, ReportsViolations) {
  const Schema s({{"a", VarKind::kInteger, 0, 9}, {"b", VarKind::kBinary, 0, 1}, {"c", VarKind::kReal, -1, 1}});
  EXPECT_TRUE(s.conforms(std::vector<double>{3, 1, 0.5}));
  EXPECT_FALSE(s.conforms(std::vector<double>{3.5, 1, 0.5}));
  EXPECT_FALSE(s.conforms(std::vector<double>{3, 0.5, 0.5}));
  EXPECT_FALSE(s.conforms(std::vector<double>{3, 1, 2.0}));
}

TEST(CovariateVector, SetEnforcesKindAndBounds) {
  auto schema = std::make_shared<const Schema>(
      std::vector<Dimension>{{"a", VarKind::kInteger, 0, 9}, {"b", VarKind::kBinary, 0, 1}});
  CovariateVector x(schema, {1, 0});
  x.set(0, 4);
  EXPECT_EQ(x[0], 4);
  EXPECT_THROW(x.set(0, 4.5), std::invalid_argument);
  EXPECT_THROW(x.set(0, 10), std::invalid_argument);
  EXPECT_THROW(x.set(1, 0.3), std::invalid_argument);
}

TEST(CovariateVector, WithValuesCoerces) {
  auto schema = std::make_shared<const Schema>(
      std::vector<Dimension>{{"a", VarKind::kInteger, 0, 9}, {"c", VarKind::kReal, 0, 10}});
  const CovariateVector x(schema, {1, 1});
  const CovariateVector y = x.with_values({3.6, 12.0});
  EXPECT_EQ(y[0], 4);
  EXPECT_EQ(y[1], 10);
}

TEST(EpochClock, TicksByOne) {
  EpochClock c(10);
  EXPECT_EQ(c.epoch(), 0u);
  c.tick();
  c.tick();
  EXPECT_EQ(c.epoch(), 2u);
  EXPECT_EQ(c.samples_per_epoch(), 10u);
}
