#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/forest.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/interventions.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

namespace health {
inline constexpr std::size_t kAge = 0;
inline constexpr std::size_t kSex = 1;
inline constexpr std::size_t kDeprivation = 2;
inline constexpr std::size_t kHistory = 3;
inline constexpr std::size_t kSmoking = 4;
inline constexpr std::size_t kDiet = 5;
inline constexpr std::size_t kAlcohol = 6;
inline constexpr std::size_t kFirstDrug = 7;
inline constexpr std::size_t kDrugs = 10;
inline constexpr std::size_t kDimension = 17;
}  // namespace health

/// age, sex, deprivation, history, smoking, diet, alcohol, drug1..drug10.
std::shared_ptr<const Schema> health_schema();

/// Smoking and diet/alcohol/drugs are modifiable; the rest are fixed.
HealthcareRules health_rules();

/// P(drug i = 1) = 0.05 i.
std::vector<double> default_drug_prevalence();

/// Independent draws per dimension. Age has density proportional to
/// 1 - 0.8 a / 100 on {0..99}.
CovariateVector sample_individual(const std::vector<double>& drug_prevalence, RngStream& rng);

/// Logistic truth with the fixed coefficients, drug coefficients drawn
/// N(0, 0.1^2) from rng and intercept -3.32.
GroundTruthModel build_health_truth(RngStream& rng);

/// Age cut points that split the age density into three equal-mass bands.
std::array<int, 2> age_tercile_cuts();

/// 3x3 partition by age band and history band. A cut c means "value >= c
/// belongs to the next band".
struct CohortSpec {
  std::array<int, 2> age_cuts = age_tercile_cuts();
  std::array<int, 2> history_cuts = {4, 7};
  /// rho_eq[age band][history band].
  std::array<std::array<double, 3>, 3> rho_eq = {{{0.05, 0.125, 0.2},
                                                  {0.125, 0.2, 0.275},
                                                  {0.2, 0.275, 0.35}}};

  std::size_t cohort_of(std::span<const double> x) const;
  double rho_eq_of(std::size_t cohort) const { return rho_eq[cohort / 3][cohort % 3]; }
  std::string label(std::size_t cohort) const;
  /// Throws std::invalid_argument on non-increasing cuts or rho_eq outside (0,1).
  void validate() const;
};

struct HealthcareConfig {
  std::size_t individuals = 10000;
  std::size_t epochs = 20;
  /// Monte-Carlo chains per individual for the true risk.
  std::size_t truth_replicates = 200;
  /// Individuals whose trajectories go into the TrajectoryRecord rows.
  std::size_t tracked = 50;
  ForestOptions forest;
  /// Score each individual with the trees that did not see their row, so a
  /// score never encodes the individual's own realised outcome. Rows that
  /// were in every bag fall back to the full forest.
  bool out_of_bag_scores = true;
  CohortSpec cohorts;
  std::vector<double> drug_prevalence = default_drug_prevalence();
  HealthcareRules rules = health_rules();

  void validate() const;
};

struct CohortSnapshot {
  std::size_t cohort = 0;
  std::size_t epoch = 0;
  std::size_t members = 0;
  double mean = 0.0;
  double variance = 0.0;
  double rho_eq = 0.0;
  double distance() const;
};

struct CohortOutcome {
  std::size_t cohort = 0;
  std::string label;
  double rho_eq = 0.0;
  std::size_t members = 0;
  bool empty = false;  // metrics omitted
  CohortSnapshot pre;
  CohortSnapshot post;
  bool variance_reduced() const { return !empty && post.variance < pre.variance; }
  bool mean_attracted() const { return !empty && post.distance() < pre.distance(); }
};

struct FairnessReport {
  std::vector<CohortOutcome> cohorts;
  /// Every (cohort, epoch) snapshot, epochs 0..E.
  std::vector<CohortSnapshot> timeline;
  bool all_variance_reduced() const;
  bool all_means_attracted() const;
};

struct HealthcareResult {
  FairnessReport fairness;
  TrajectoryRecord record;
  std::vector<std::size_t> cohort;     // per individual
  std::vector<double> risk_pre;        // true risk at epoch 0
  std::vector<double> risk_post;       // true risk at epoch E
  std::vector<double> forest_oob_mse;  // per fit
  std::vector<double> label_variance;  // per fit
  double seconds = 0.0;
};

/// A fixed population re-observed every epoch. Epoch e applies the stacked
/// scores rho_0..rho_{e-1} (each evaluated at the individual's own
/// covariates) with fresh intervention randomness, draws outcomes, and refits
/// a forest on (x, y). True risk is the mean of f over independent chains.
HealthcareResult run_healthcare(const HealthcareConfig& config, std::uint64_t seed,
                                Exec exec = Exec::kParallel,
                                const std::function<void(const EpochSummary&)>& on_epoch = {});

}  // namespace stacklab
