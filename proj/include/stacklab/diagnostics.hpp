#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/interventions.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

/// Random probes of a box. Point i is drawn from its own derived stream, so
/// a larger probe set always contains a smaller one with the same seed.
struct ProbeSpec {
  std::size_t points = 10000;
  std::size_t rhos = 100;
  double lower = -4.0;
  double upper = 4.0;
  /// Monte-Carlo draws of g per probe when g is stochastic.
  std::size_t replicates = 2000;
};

std::vector<std::vector<double>> probe_points(std::size_t dimension, std::size_t count,
                                              double lower, double upper, const RngStream& rng);

struct LimitBounds {
  double lower = 0.0;
  double upper = 1.0;
  /// "coupled" probes rho = f(x) (deterministic g); "uncoupled" probes
  /// (rho, x) pairs on the same side of rho_eq.
  std::string method;
  std::size_t probes = 0;
  std::size_t rhos = 0;
  bool degenerate_lower = false;  // no probe with f(x) > rho_eq
  bool degenerate_upper = false;  // no probe with f(x) < rho_eq
};

/// Limit bounds around rho_eq for the stacked process on the base link of
/// `truth` at `epoch`. `coupled` chooses the deterministic form.
LimitBounds compute_limit_bounds(const GroundTruthModel& truth, const InterventionModel& g,
                                 const ProbeSpec& probes, const RngStream& rng, bool coupled,
                                 Exec exec = Exec::kParallel, std::size_t epoch = 0);

struct ContainmentReport {
  double lower = 0.0;
  double upper = 1.0;
  double tolerance = 0.0;
  std::size_t burn_in = 0;
  std::vector<double> fraction;  // per tracked sample
  std::size_t points = 0;
  std::size_t outside = 0;
  double min_fraction() const;
};

/// Fraction of rho_true values with epoch > burn_in inside
/// [lower - tolerance, upper + tolerance].
ContainmentReport check_trajectory_containment(const TrajectoryRecord& record, double lower,
                                               double upper, std::size_t burn_in, double tolerance);

struct MonotoneReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
};

/// Every step taken while rho_true is outside [rho_eq - band, rho_eq + band]
/// must move toward rho_eq.
MonotoneReport check_monotone_movement(const TrajectoryRecord& record, double rho_eq, double band);

/// Mean over samples of the variance of rho_true for epochs > burn_in.
double post_burn_in_variance(const TrajectoryRecord& record, std::size_t burn_in);

struct KsPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double distance = 0.0;
};

struct KsConvergence {
  std::vector<KsPair> pairs;
  double threshold = 0.1;
  bool decreasing = false;
  bool converging = false;
  double final_distance() const { return pairs.empty() ? 1.0 : pairs.back().distance; }
};

/// KS(e, 2e) for every traced epoch e whose double is also traced. Uses the
/// first `m` chains of tracked sample `sample`. Throws if fewer than three
/// epochs or m < 200 values are available.
KsConvergence ks_convergence(const TrajectoryRecord& record, std::size_t sample, std::size_t m,
                             double threshold = 0.1);

// ---------------------------------------------------------------------------

struct AttractionInterval {
  double i1 = 0.0;
  double i2 = 1.0;
  double delta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double rho_eq = 0.0;
};

/// [rho_eq - delta/(gamma lambda), rho_eq + delta/(gamma lambda)].
AttractionInterval attraction_interval(double rho_eq, double delta, double gamma, double lambda);

struct ErrorModelEstimate {
  double delta = 0.0;   // max almost-convexity gap over probes
  double lambda = 0.0;  // min order-effect ratio over probes
  std::vector<double> gaps;
  std::vector<double> ratios;
  std::size_t fits = 0;
};

/// Measures the almost-convexity gap and the order effect of refitting a
/// logistic score on `training_size` rows of (x, y ~ f(x)) with x drawn from
/// `sampler`, over `fits` independent training sets. Ratios are taken only at
/// probes with |f(x) - rho_eq| >= min_distance.
ErrorModelEstimate measure_error_model(const GroundTruthModel& truth, const InterventionModel& g,
                                       const CovariateSampler& sampler, std::size_t training_size,
                                       const std::vector<std::vector<double>>& probes,
                                       std::size_t fits, std::size_t g_replicates,
                                       const RngStream& rng, double min_distance = 0.05,
                                       Exec exec = Exec::kParallel);

struct AttractionProbe {
  std::size_t epoch = 0;
  std::size_t sample = 0;
  double rho_before = 0.0;
  double mean_after = 0.0;
  double outside_by = 0.0;
  double fraction_toward = 0.0;  // share of replicates that moved toward the interval
  bool toward = false;           // expected movement points at the interval
  bool large_enough = false;     // |movement| >= gamma lambda epsilon
};

struct AttractionReport {
  AttractionInterval interval;
  double min_outside = 0.05;
  std::size_t replicates = 0;
  std::vector<AttractionProbe> probes;
  std::size_t toward_count() const;
  double toward_share() const;
};

/// For each snapshot epoch, replays one step of the engine under
/// `replicates` independent training sets and compares the mean next true
/// risk of every tracked sample outside the interval by >= min_outside with
/// its current value.
AttractionReport attraction_check(const EngineSpec& spec, std::uint64_t seed,
                                  const AttractionInterval& interval,
                                  const std::vector<std::size_t>& snapshots,
                                  std::size_t replicates, double min_outside = 0.05,
                                  Exec exec = Exec::kParallel);

// ---------------------------------------------------------------------------

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  bool contains(double v, double tol = 0.0) const { return v >= lower - tol && v <= upper + tol; }
};

struct DriftIntervals {
  Interval rho;
  Interval lim;
  double alpha = 0.0;
  double gamma = 0.0;
  bool clamped = false;
  std::size_t probes = 0;
};

/// Drift-robust intervals. I_rho is closed form; I_lim is a probe inf/sup of
/// q^{-1}(-/+alpha + q(E f(g(f(x), x)))) over the regions where q(f(x)) is
/// within alpha (1 + gamma)/gamma of rho_eq on the far side.
DriftIntervals drift_intervals(double alpha, double gamma, const GroundTruthModel& truth,
                               const InterventionModel& g, const ProbeSpec& probes,
                               const RngStream& rng, Exec exec = Exec::kParallel,
                               std::size_t epoch = 0);

struct DriftConclusionReport {
  std::vector<int> conclusion;  // per sample: 1 = I_lim containment, 2 = endpoint, 0 = neither
  std::size_t satisfied() const;
};

/// Per sample, post-burn-in rho_true either stays inside I_lim (+/- tol) or
/// its last `tail` epochs sit within eps of an endpoint of I_rho.
DriftConclusionReport check_drift_conclusions(const TrajectoryRecord& record,
                                              const DriftIntervals& intervals,
                                              std::size_t burn_in, double tol, double eps,
                                              std::size_t tail = 20);

struct SegmentRecovery {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool recovered = false;
  std::size_t epochs_to_recover = 0;
};

struct RecoveryReport {
  std::vector<SegmentRecovery> segments;
  bool all_recovered() const;
};

/// Smallest n per segment [E_i, E_{i+1}) such that every sample satisfies
/// one of the three recovery conditions from E_i + n to the segment end.
RecoveryReport shock_recovery(const TrajectoryRecord& record,
                              const std::vector<std::size_t>& change_points,
                              const std::vector<DriftIntervals>& per_segment, double epsilon0);

}  // namespace stacklab
