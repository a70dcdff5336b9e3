#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

/// Which covariates the healthcare intervention touches. Continuous
/// dimensions are redrawn uniformly and clamped; binary ones are redrawn
/// Bernoulli; everything else is left alone.
struct HealthcareRules {
  std::vector<std::size_t> continuous;
  std::vector<std::size_t> binary;
  double lower = 0.0;
  double upper = 10.0;
  /// New value ~ U(x - down*(rho-rho_eq), x + up*(rho-rho_eq)).
  double down = 3.5;
  double up = 0.5;
};

/// g(rho, x): the response of whoever acts on the score.
struct InterventionModel {
  enum class Kind {
    kIdentity,
    kDeterministicCbrt,
    kUniformNoiseCbrt,
    kUniformNoiseLinear,
    kClampedSignedCbrt,
    kHealthcare,
  };

  Kind kind = Kind::kIdentity;
  double rho_eq = 0.5;
  double scale = 1.0;
  /// kClampedSignedCbrt: per-dimension sign of the push; empty means +1.
  std::vector<double> sign;
  /// kClampedSignedCbrt: take `sign` from the truth segment in force.
  bool sign_follows_truth = false;
  double clamp_lower = -4.0;
  double clamp_upper = 4.0;
  HealthcareRules rules;
  QTransform q = QTransform::logit();
  /// Optional per-sample rho_eq (cohorts). Must depend only on dimensions
  /// the intervention never changes.
  std::function<double(std::span<const double>)> rho_eq_map;

  bool stochastic() const;
  double rho_eq_for(std::span<const double> x) const {
    return rho_eq_map ? rho_eq_map(x) : rho_eq;
  }

  /// In-place g(rho, x). Deterministic kinds never touch rng.
  void apply_inplace(double rho, std::span<double> x, RngStream& rng) const;

  /// Copy with `sign` fixed to the truth segment active at `epoch`.
  InterventionModel at_epoch(const GroundTruthModel& truth, std::size_t epoch) const;
};

std::string to_string(InterventionModel::Kind kind);
InterventionModel::Kind intervention_kind_from_string(const std::string& name);

/// Throws std::invalid_argument on a schema mismatch or rho outside [0,1].
CovariateVector apply_intervention(const InterventionModel& g, double rho, const CovariateVector& x,
                                   RngStream& rng);

void healthcare_intervene(const HealthcareRules& rules, double rho, double rho_eq,
                          std::span<double> x, RngStream& rng);
CovariateVector healthcare_intervene(const HealthcareRules& rules, double rho, double rho_eq,
                                     const CovariateVector& x, RngStream& rng);

/// Probability that a binary healthcare covariate equals 1 after the
/// intervention, given its current value.
double healthcare_binary_keep_probability(double rho, double rho_eq, int x);

// ---------------------------------------------------------------------------

struct WellIntentionedProbe {
  double rho = 0.0;
  std::size_t point = 0;
  double f_before = 0.0;
  double f_after = 0.0;       // E_g f(g(rho, x))
  double f_after_se = 0.0;    // Monte-Carlo standard error
  double movement = 0.0;      // q(f_after) - q(f_before)
  bool violation = false;
};

struct WellIntentionedReport {
  std::vector<WellIntentionedProbe> probes;
  double gamma = 0.0;
  std::size_t violations = 0;
  bool low_confidence = false;
};

/// Checks the well-intentioned inequality on every (rho, x) probe with the
/// base link f of `truth` at `epoch`. gamma is the grid minimum of the
/// movement toward rho_eq divided by |rho - rho_eq|, floored at zero.
WellIntentionedReport verify_well_intentioned(const InterventionModel& g,
                                              const GroundTruthModel& truth,
                                              std::span<const double> rhos,
                                              const std::vector<std::vector<double>>& points,
                                              std::size_t replicates, const RngStream& rng,
                                              Exec exec = Exec::kParallel, std::size_t epoch = 0);

struct DisplacementMoments {
  double mean_abs = 0.0;
  double var_abs = 0.0;
};

/// Moments of |Z| where Z = g(rho, x) - x on the first coordinate.
DisplacementMoments displacement_moments(const InterventionModel& g, double rho,
                                         std::span<const double> x, std::size_t replicates,
                                         RngStream rng);

}  // namespace stacklab
