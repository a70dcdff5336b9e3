#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "stacklab/estimators.hpp"
#include "support.hpp"

using namespace stacklab;
using stacklab::test_support::logistic_truth;
using stacklab::test_support::make_g;
using K = InterventionModel::Kind;

namespace {

TrainingSet simulate(const std::vector<double>& beta, double intercept, std::size_t n, std::uint64_t seed) {
  const auto f = logistic_truth(beta, intercept);
  TrainingSet d;
  d.dimension = beta.size();
  RngStream rng(seed);
  std::vector<double> x(beta.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.normal();
    d.add(x, draw_outcome(f, 0, x, rng).y);
  }
  return d;
}

}  // namespace

TEST(Oracle, EmptyStackIsTheTruth) {
  const auto f = logistic_truth({0.4, -0.6, 0.9});
  const auto g = make_g(K::kUniformNoiseCbrt, 0.2);
  const std::vector<double> x{0.5, 1.0, -0.2};
  EXPECT_EQ(oracle_predict(f, 0, {}, g, x, 1000, RngStream(1)), clamp_probability(f.eval(0, x)));
}

TEST(Oracle, DepthOneDeterministicChain) {
  const auto f = logistic_truth({0.4, -0.6, 0.9});
  const auto g = make_g(K::kDeterministicCbrt, 0.2);
  const std::vector<double> x{0.5, 1.0, -0.2};
  const double s0 = f.eval(0, x);
  std::vector<double> moved = x;
  for (auto& v : moved) v -= std::cbrt(s0 - 0.2);
  const double expected = f.eval(0, moved);
  const std::vector<double> scores{s0};
  EXPECT_DOUBLE_EQ(oracle_predict(f, 0, scores, g, x, 1, RngStream(1)), expected);
  EXPECT_DOUBLE_EQ(oracle_predict(f, 0, scores, g, x, 5000, RngStream(2)), expected);
}

TEST(Oracle, ReplicateCountsAgreeWithinMonteCarloError) {
  const auto f = logistic_truth({0.8, 0.3});
  const auto g = make_g(K::kUniformNoiseCbrt, 0.2);
  const std::vector<double> x{1.0, 0.5};
  const std::vector<double> scores{0.7, 0.5};

  // Spread of one chain, measured independently of oracle_predict.
  RngStream rng(99);
  double sum = 0.0, sum2 = 0.0;
  const int m = 20000;
  for (int k = 0; k < m; ++k) {
    std::vector<double> v = x;
    for (double s : scores) g.apply_inplace(s, v, rng);
    const double p = f.eval(0, v);
    sum += p;
    sum2 += p * p;
  }
  const double sd = std::sqrt(sum2 / m - (sum / m) * (sum / m));

  const double a = oracle_predict(f, 0, scores, g, x, 10000, RngStream(3));
  const double b = oracle_predict(f, 0, scores, g, x, 100000, RngStream(4));
  EXPECT_LE(std::fabs(a - b), 3.0 * sd * std::sqrt(1.0 / 10000 + 1.0 / 100000));
  EXPECT_NEAR(a, sum / m, 3.0 * sd * std::sqrt(1.0 / 10000 + 1.0 / m));
}

TEST(Oracle, ScoreMatchesOraclePredict) {
  auto ctx = std::make_shared<OracleContext>();
  ctx->truth = logistic_truth({0.5, 0.5});
  ctx->g = make_g(K::kDeterministicCbrt, 0.2);
  const RiskScore s0 = make_oracle_score(ctx, 0, 2, 1, false);
  const std::vector<double> x{0.3, 0.4};
  EXPECT_DOUBLE_EQ(predict(s0, x), clamp_probability(ctx->truth.eval(0, x)));
}

TEST(Logistic, RecoversGeneratingCoefficients) {
  const std::vector<double> beta{0.8, -0.5, 0.3};
  const TrainingSet d = simulate(beta, -0.4, 100000, 17);
  const LogisticFit fit = fit_logistic(d);
  ASSERT_TRUE(fit.score.converged);
  EXPECT_NEAR(fit.score.coef[0], -0.4, 0.05);
  for (std::size_t j = 0; j < beta.size(); ++j) EXPECT_NEAR(fit.score.coef[j + 1], beta[j], 0.05);
  EXPECT_FALSE(fit.separated);
  EXPECT_FALSE(fit.single_class);
}

TEST(Logistic, AllZeroLabelsGiveClampedConstant) {
  TrainingSet d;
  d.dimension = 2;
  RngStream rng(1);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    d.add(x, 0);
  }
  const RiskScore s = make_logistic_score(d);
  EXPECT_TRUE(s.flags.single_class);
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    EXPECT_NEAR(predict(s, x), 1e-9, 1e-15);
  }
}

TEST(Logistic, DuplicatedRowsGiveTheSameFit) {
  const TrainingSet d = simulate({0.6, -0.2}, 0.1, 2000, 5);
  TrainingSet dd = d;
  for (std::size_t i = 0; i < d.size(); ++i) dd.add(d.row(i), d.y[i]);
  const auto a = fit_logistic(d).score.coef;
  const auto b = fit_logistic(dd).score.coef;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
}

TEST(Logistic, PredictsOneHalfOnTheDecisionBoundary) {
  const TrainingSet d = simulate({1.0, 0.5}, 0.2, 5000, 6);
  const RiskScore s = make_logistic_score(d);
  const auto& c = std::get<LogisticScore>(s.model).coef;
  const std::vector<double> x{-c[0] / c[1], 0.0};
  EXPECT_NEAR(predict(s, x), 0.5, 1e-12);
}

TEST(Forest, ConstantLabelsPredictTheConstant) {
  TrainingSet d;
  d.dimension = 2;
  RngStream rng(2);
  for (int i = 0; i < 300; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    d.add(x, 1);
  }
  ForestOptions opt;
  opt.n_trees = 20;
  const RiskScore s = make_forest_score(d, opt, RngStream(1));
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    EXPECT_EQ(predict(s, x), 1.0);
  }
}

TEST(Forest, SingleStumpOnBinaryFeatureGivesClassMeans) {
  TrainingSet d;
  d.dimension = 1;
  // x = 0: 10 rows with 3 positives; x = 1: 10 rows with 8 positives.
  for (int i = 0; i < 10; ++i) d.add(std::vector<double>{0.0}, i < 3 ? 1 : 0);
  for (int i = 0; i < 10; ++i) d.add(std::vector<double>{1.0}, i < 8 ? 1 : 0);
  ForestOptions opt;
  opt.n_trees = 1;
  opt.max_depth = 1;
  opt.min_leaf = 1;
  opt.bootstrap = false;
  const ForestScore f = fit_forest(d, opt, RngStream(1));
  EXPECT_EQ(f.trees[0].depth(), 1u);
  EXPECT_DOUBLE_EQ(f.predict(std::vector<double>{0.0}), 0.3);
  EXPECT_DOUBLE_EQ(f.predict(std::vector<double>{1.0}), 0.8);
}

TEST(Forest, SameSeedIsBitIdenticalAcrossExecModes) {
  const TrainingSet d = simulate({0.7, -0.7, 0.2}, 0.0, 1500, 8);
  ForestOptions opt;
  opt.n_trees = 25;
  opt.max_depth = 6;
  const ForestScore a = fit_forest(d, opt, RngStream(42), Exec::kSerial);
  const int saved_threads = thread_count();
  set_thread_count(4);
  const ForestScore b = fit_forest(d, opt, RngStream(42), Exec::kParallel);
  set_thread_count(saved_threads);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    EXPECT_EQ(a.trees[t].feature, b.trees[t].feature);
    EXPECT_EQ(a.trees[t].threshold, b.trees[t].threshold);
    EXPECT_EQ(a.trees[t].value, b.trees[t].value);
  }
  EXPECT_EQ(a.oob_mse, b.oob_mse);
}

TEST(Forest, PredictionsLieWithinLeafRange) {
  const TrainingSet d = simulate({1.2, -0.4}, 0.3, 1000, 9);
  ForestOptions opt;
  opt.n_trees = 30;
  opt.max_depth = 5;
  const ForestScore f = fit_forest(d, opt, RngStream(3));
  double lo = 1.0, hi = 0.0;
  for (const auto& t : f.trees) {
    for (std::size_t k = 0; k < t.node_count(); ++k) {
      if (t.feature[k] < 0) lo = std::min(lo, t.value[k]), hi = std::max(hi, t.value[k]);
    }
  }
  RngStream rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{rng.normal(0, 2), rng.normal(0, 2)};
    const double p = f.predict(x);
    EXPECT_GE(p, lo);
    EXPECT_LE(p, hi);
  }
}

TEST(Forest, OutOfBagErrorBeatsConstantPredictor) {
  const TrainingSet d = simulate({2.0, -1.5}, 0.0, 3000, 10);
  ForestOptions opt;
  opt.n_trees = 60;
  opt.max_depth = 6;
  const ForestScore f = fit_forest(d, opt, RngStream(5));
  EXPECT_GT(f.oob_rows, 2900u);
  EXPECT_LT(f.oob_mse, f.label_variance);
  ASSERT_EQ(f.oob_prediction.size(), d.size());
}

TEST(Predict, DimensionMismatchThrows) {
  const TrainingSet d = simulate({1.0, 0.5}, 0.0, 500, 11);
  const RiskScore s = make_logistic_score(d);
  EXPECT_THROW(predict(s, std::vector<double>{1.0}), std::invalid_argument);
}
