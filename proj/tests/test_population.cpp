#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "stacklab/population.hpp"
#include "support.hpp"

using namespace stacklab;

namespace {

HealthcareConfig smoke_config() {
  HealthcareConfig c;
  c.individuals = 500;
  c.epochs = 20;
  c.truth_replicates = 200;
  c.tracked = 10;
  c.forest.n_trees = 50;
  return c;
}

}  // namespace

TEST(Population, DeprivationLevelsAreUniform) {
  RngStream rng(1);
  const int n = 100000;
  std::array<int, 6> counts{};
  for (int k = 0; k < n; ++k) {
    const auto x = sample_individual(default_drug_prevalence(), rng);
    ++counts[static_cast<std::size_t>(x[health::kDeprivation])];
  }
  const double sigma = std::sqrt(0.2 * 0.8 / n);
  EXPECT_EQ(counts[0], 0);
  for (int level = 1; level <= 5; ++level) {
    EXPECT_NEAR(static_cast<double>(counts[level]) / n, 0.2, 3.0 * sigma) << "level " << level;
  }
}

TEST(Population, AgeDensityEndpointRatio) {
  // P(age = a) is proportional to 1 - 0.008 a, so P(0)/P(99) = 1 / 0.208.
  const double expected = 1.0 / (1.0 - 0.8 * 0.99);
  RngStream rng(2);
  const int n = 1000000;
  double c0 = 0, c99 = 0;
  for (int k = 0; k < n; ++k) {
    const auto x = sample_individual(default_drug_prevalence(), rng);
    if (x[health::kAge] == 0.0) ++c0;
    if (x[health::kAge] == 99.0) ++c99;
  }
  const double ratio = c0 / c99;
  // Delta-method relative error of a ratio of two Poisson-like counts.
  const double rel = std::sqrt(1.0 / c0 + 1.0 / c99);
  EXPECT_NEAR(ratio, expected, 3.0 * rel * expected);
  EXPECT_NEAR(expected, 4.8077, 1e-4);
}

TEST(Population, SmokingPrevalence) {
  RngStream rng(3);
  const int n = 100000;
  int s = 0;
  for (int k = 0; k < n; ++k) s += sample_individual(default_drug_prevalence(), rng)[health::kSmoking] > 0.5;
  EXPECT_NEAR(static_cast<double>(s) / n, 0.3, 3.0 * std::sqrt(0.21 / n));
}

TEST(Population, IndividualsConformToSchema) {
  RngStream rng(4);
  for (int k = 0; k < 2000; ++k) {
    const auto x = sample_individual(default_drug_prevalence(), rng);
    ASSERT_TRUE(health_schema()->conforms(x.values()));
  }
  EXPECT_THROW(sample_individual({0.1, 0.2}, rng), std::invalid_argument);
}

TEST(HealthTruth, FixedCoefficients) {
  RngStream rng(5);
  const auto f = build_health_truth(rng);
  const auto& b = f.base().beta;
  ASSERT_EQ(b.size(), health::kDimension);
  const std::vector<double> fixed{5e-3, 0.25, 0.1, 0.05, 0.2, 0.1, 0.2};
  for (std::size_t j = 0; j < fixed.size(); ++j) EXPECT_EQ(b[j], fixed[j]);
  EXPECT_EQ(f.base().intercept, -3.32);
}

TEST(HealthTruth, DrugCoefficientSpread) {
  RngStream root(6);
  std::vector<double> draws;
  for (int k = 0; k < 10000; ++k) {
    RngStream rng = root.derive(Purpose::kUser, 0, static_cast<std::uint64_t>(k));
    const auto f = build_health_truth(rng);
    draws.push_back(f.base().beta[health::kFirstDrug]);
  }
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  double ss = 0;
  for (double v : draws) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (draws.size() - 1));
  // Standard error of a normal sample s.d. is sigma / sqrt(2(n-1)).
  EXPECT_NEAR(sd, 0.1, 3.0 * 0.1 / std::sqrt(2.0 * (draws.size() - 1)));
}

TEST(Cohorts, AgeCutsSplitTheDensityIntoThirds) {
  const auto cuts = age_tercile_cuts();
  EXPECT_EQ(cuts[0], 22);
  EXPECT_EQ(cuts[1], 50);
  double total = 0, first = 0, second = 0;
  for (int a = 0; a < 100; ++a) {
    const double w = 1.0 - 0.008 * a;
    total += w;
    if (a < cuts[0]) first += w;
    else if (a < cuts[1]) second += w;
  }
  EXPECT_NEAR(first / total, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(second / total, 1.0 / 3.0, 0.01);
}

TEST(Cohorts, PartitionCoversEveryAgeAndHistory) {
  const CohortSpec spec;
  std::array<int, 9> hits{};
  std::vector<double> x(health::kDimension, 0.0);
  for (int a = 0; a < 100; ++a) {
    for (int h = 1; h <= 10; ++h) {
      x[health::kAge] = a;
      x[health::kHistory] = h;
      const auto c = spec.cohort_of(x);
      ASSERT_LT(c, 9u);
      ++hits[c];
      const std::size_t band = a < spec.age_cuts[0] ? 0 : a < spec.age_cuts[1] ? 1 : 2;
      const std::size_t hband = h < 4 ? 0 : h < 7 ? 1 : 2;
      EXPECT_EQ(c, band * 3 + hband);
    }
  }
  for (int k : hits) EXPECT_GT(k, 0);
  EXPECT_EQ(spec.label(0), "age 0-21, history 1-3");
  EXPECT_EQ(spec.label(8), "age 50-99, history 7-10");
  EXPECT_EQ(spec.rho_eq_of(0), 0.05);
  EXPECT_EQ(spec.rho_eq_of(8), 0.35);
}

TEST(Cohorts, ValidationRejectsBadSpecs) {
  CohortSpec spec;
  spec.age_cuts = {50, 22};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = CohortSpec{};
  spec.rho_eq[1][1] = 1.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Healthcare, ZeroEpochsLeavesRisksUnchanged) {
  HealthcareConfig c = smoke_config();
  c.individuals = 200;
  c.epochs = 0;
  c.forest.n_trees = 10;
  const auto r = run_healthcare(c, 1);
  EXPECT_EQ(r.risk_pre, r.risk_post);
  ASSERT_EQ(r.fairness.cohorts.size(), 9u);
  for (const auto& co : r.fairness.cohorts) {
    if (co.empty) continue;
    EXPECT_EQ(co.pre.mean, co.post.mean);
    EXPECT_EQ(co.pre.variance, co.post.variance);
  }
}

TEST(Healthcare, TimelineHasEverySnapshot) {
  HealthcareConfig c = smoke_config();
  c.individuals = 150;
  c.epochs = 3;
  c.forest.n_trees = 10;
  c.truth_replicates = 20;
  const auto r = run_healthcare(c, 2);
  EXPECT_EQ(r.fairness.timeline.size(), 9u * 4u);
  EXPECT_EQ(r.forest_oob_mse.size(), 4u);
  EXPECT_EQ(r.cohort.size(), 150u);
  std::size_t members = 0;
  for (const auto& co : r.fairness.cohorts) members += co.members;
  EXPECT_EQ(members, 150u);
}

TEST(Healthcare, SmokeRunReducesVariance) {
  const auto r = run_healthcare(smoke_config(), 1);
  EXPECT_TRUE(r.fairness.all_variance_reduced());
  // Before any intervention the risk spread is widest, so the first forest
  // must beat the constant predictor out of bag. Later fits chase a nearly
  // flat risk surface and need not.
  EXPECT_LT(r.forest_oob_mse[0], r.label_variance[0]);
}

TEST(Healthcare, SerialAndParallelAgree) {
  HealthcareConfig c = smoke_config();
  c.individuals = 120;
  c.epochs = 2;
  c.forest.n_trees = 8;
  c.truth_replicates = 20;
  const auto a = run_healthcare(c, 9, Exec::kSerial);
  const int saved_threads = thread_count();
  set_thread_count(4);
  const auto b = run_healthcare(c, 9, Exec::kParallel);
  set_thread_count(saved_threads);
  EXPECT_EQ(a.risk_post, b.risk_post);
  EXPECT_EQ(a.forest_oob_mse, b.forest_oob_mse);
}

TEST(Healthcare, InvalidConfigThrows) {
  HealthcareConfig c = smoke_config();
  c.individuals = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = smoke_config();
  c.drug_prevalence[0] = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
