#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/estimators.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/interventions.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

struct UpdatePolicy {
  enum class Kind { kStacked, kNaive, kHoldout, kNone };
  Kind kind = Kind::kStacked;
  double holdout_fraction = 0.2;
};

std::string to_string(UpdatePolicy::Kind kind);
UpdatePolicy::Kind policy_kind_from_string(const std::string& name);

/// I.i.d. draws per coordinate.
struct CovariateSampler {
  enum class Kind { kNormal, kUniform };
  Kind kind = Kind::kNormal;
  double a = 0.0;  // mean or lower bound
  double b = 1.0;  // sd or upper bound
  std::size_t dimension = 3;

  std::vector<double> sample(RngStream& rng) const;
};

/// Ordered risk scores rho_0 .. rho_{E-1} and the intervention they drive.
struct ScoreStack {
  std::vector<RiskScore> scores;
  InterventionModel g;

  std::size_t size() const { return scores.size(); }
  bool empty() const { return scores.empty(); }
  /// predict(rho_k, x) for every score, in order.
  std::vector<double> values_at(std::span<const double> x) const;
};

/// chi_0 = x; chi_k = g(predict(rho_{k-1}, x), chi_{k-1}); returns chi_E.
/// Every score is evaluated at the original x. `epoch` selects g for
/// truth-dependent interventions (defaults to the stack length).
CovariateVector compose_stack(const ScoreStack& stack, const CovariateVector& x, RngStream& rng,
                              const GroundTruthModel* truth = nullptr);

struct EngineSpec {
  GroundTruthModel truth;
  InterventionModel g;
  RiskScore::Kind estimator = RiskScore::Kind::kOracle;
  std::size_t score_replicates = 1000;
  std::size_t truth_replicates = 2000;
  LogisticFitOptions logistic;
  ForestOptions forest;
  UpdatePolicy policy;
  CovariateSampler population;
  std::size_t population_size = 0;
  std::vector<std::vector<double>> tracked;
  PostClamp clamp;
  /// Epochs at which the first coordinate of every true chain is kept.
  std::vector<std::size_t> trace_epochs;
};

struct TrajectoryRow {
  std::size_t epoch = 0;
  std::size_t sample = 0;
  double rho_true = 0.0;
  double rho_est = 0.0;
  int y = 0;
  std::vector<double> x_post;
};

struct EpochSummary {
  std::size_t epoch = 0;
  std::size_t training_rows = 0;
  std::size_t holdout_rows = 0;
  /// Holdout rows whose post-intervention covariates differ from their
  /// pre-intervention ones (must stay 0).
  std::size_t holdout_changed = 0;
  double population_outcome_rate = 0.0;
  double mean_rho_true = 0.0;
  FitFlags flags;
  std::size_t stack_size = 0;
};

struct TrajectoryRecord {
  std::size_t dimension = 0;
  std::size_t samples = 0;
  std::vector<TrajectoryRow> rows;
  std::vector<EpochSummary> epochs;
  /// trace[epoch][sample] = first coordinate of every true chain.
  std::map<std::size_t, std::vector<std::vector<double>>> trace;

  /// rho_true (or rho_est) of one sample across epochs.
  std::vector<double> series(std::size_t sample, bool estimated = false) const;
  std::size_t epoch_count() const { return epochs.size(); }
};

class Engine {
 public:
  Engine(EngineSpec spec, std::uint64_t seed, Exec exec = Exec::kParallel);

  /// One pass of the epoch loop: draw X_e(0), intervene, draw Y_e, refit,
  /// log the tracked samples. Appends to `record`.
  EpochSummary run_epoch(TrajectoryRecord& record);

  /// Redirects the training-data streams (population, holdout, outcomes,
  /// fits) to an independent replicate while tracked chains keep theirs.
  void set_data_replicate(std::uint64_t replicate);

  std::size_t epoch() const { return clock_.epoch(); }
  const ScoreStack& stack() const { return stack_; }
  const EngineSpec& spec() const { return spec_; }
  /// Score values currently held for tracked sample i (evaluated at its x).
  const std::vector<double>& tracked_scores(std::size_t i) const { return tracked_[i].values; }
  /// Last population drawn (rows, labels, holdout mask).
  const TrainingSet& last_population() const { return last_population_; }
  const std::vector<std::uint8_t>& last_holdout_mask() const { return last_holdout_; }

 private:
  struct TrackedState {
    std::vector<double> x0;
    std::vector<double> values;
    std::vector<double> true_chains;
    std::vector<double> est_chains;
  };

  bool oracle_like() const;
  OracleChain oracle_chain() const;
  /// Score values that drive the intervention for a sample at this epoch.
  std::vector<double> active_values(std::span<const double> all, bool holdout_row) const;
  void advance_chains(std::vector<double>& chains, std::span<const double> x0,
                      std::span<const double> all_values, const InterventionModel& ge,
                      RngStream& rng) const;
  double mean_truth(const std::vector<double>& chains, const EpochLink& f) const;
  RiskScore fit_score(const TrainingSet& data);

  EngineSpec spec_;
  RngStream root_;
  RngStream data_root_;
  Exec exec_;
  EpochClock clock_;
  ScoreStack stack_;
  std::shared_ptr<OracleContext> oracle_ctx_;
  std::vector<TrackedState> tracked_;
  TrainingSet last_population_;
  std::vector<std::uint8_t> last_holdout_;
};

/// Runs epochs 0..epochs (inclusive) and returns the full record.
/// `on_epoch` (optional) sees each summary as it completes.
TrajectoryRecord run_experiment(const EngineSpec& spec, std::size_t epochs, std::uint64_t seed,
                                Exec exec = Exec::kParallel,
                                const std::function<void(const EpochSummary&)>& on_epoch = {},
                                ScoreStack* final_stack = nullptr);

}  // namespace stacklab
