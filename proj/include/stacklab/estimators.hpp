#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/forest.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/interventions.hpp"
#include "stacklab/logistic.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

/// Rows of (X_e(0), Y_e), row-major.
struct TrainingSet {
  std::size_t dimension = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  std::size_t epoch = 0;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dimension, dimension}; }
  void add(std::span<const double> row, int label);
  double positive_rate() const;
};

/// Optional clamp applied to post-intervention covariates before f is
/// evaluated on them.
struct PostClamp {
  bool enabled = false;
  double lower = -5.0;
  double upper = 5.0;

  void apply(std::span<double> x) const;
};

/// How the risk-score history feeds the intervention when oracle scores are
/// evaluated away from the tracked samples.
enum class OracleChain {
  kStacked,     // every score in fitting order
  kLatestOnly,  // the last score only (naive updating)
  kUntreated,   // scores are fitted on unintervened rows (holdout)
  kFrozen,      // only the epoch-0 score exists (no updating)
};

struct OracleContext {
  GroundTruthModel truth;
  InterventionModel g;
  OracleChain chain = OracleChain::kStacked;
  PostClamp clamp;
  RngStream stream{0};
};

/// Score defined as E f_e(G_e(x)) under the context; `replicates` Monte-Carlo
/// chains when g is stochastic, exact otherwise.
struct OracleScore {
  std::size_t replicates = 1;
  std::shared_ptr<const OracleContext> context;
};

struct FitFlags {
  bool separated = false;
  bool single_class = false;
  bool degenerate() const { return separated || single_class; }
};

struct RiskScore {
  enum class Kind { kOracle, kMcEmpirical, kLogistic, kForest };

  Kind kind = Kind::kLogistic;
  std::size_t epoch = 0;
  std::size_t dimension = 0;
  FitFlags flags;
  std::variant<OracleScore, LogisticScore, ForestScore> model;
};

std::string to_string(RiskScore::Kind kind);
RiskScore::Kind score_kind_from_string(const std::string& name);

/// E f_epoch(chi) with chi = g(s_{k-1}, ... g(s_0, x)) for the supplied score
/// values s_0..s_{k-1} evaluated at x. `replicates` is ignored for
/// deterministic g.
double oracle_predict(const GroundTruthModel& truth, std::size_t epoch,
                      std::span<const double> score_values, const InterventionModel& g,
                      std::span<const double> x, std::size_t replicates, RngStream rng,
                      const PostClamp& clamp = {});

/// rho_0(x) .. rho_upto(x) for an oracle score history, built with
/// incremental replicate chains.
std::vector<double> oracle_score_values(const OracleContext& ctx, std::span<const double> x,
                                        std::size_t upto, std::size_t replicates);

/// Pure in x. Value in [0,1]. Throws std::invalid_argument on a dimension
/// mismatch.
double predict(const RiskScore& score, std::span<const double> x);

RiskScore make_logistic_score(const TrainingSet& data, const LogisticFitOptions& options = {});
RiskScore make_forest_score(const TrainingSet& data, const ForestOptions& options,
                            const RngStream& rng, Exec exec = Exec::kParallel);
RiskScore make_oracle_score(std::shared_ptr<const OracleContext> ctx, std::size_t epoch,
                            std::size_t dimension, std::size_t replicates, bool empirical);

}  // namespace stacklab
