#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

/// One logistic link: P(Y=1 | x) = logistic(intercept + x'beta).
struct LogisticLink {
  std::vector<double> beta;
  double intercept = 0.0;

  double linear(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return logistic(linear(x)); }
};

struct DriftSpec {
  enum class Kind { kNone, kBounded, kShocks };
  Kind kind = Kind::kNone;
  /// Bounded: per-epoch shift in logit space, drawn from U[-alpha, alpha].
  double alpha = 0.0;
  /// Shocks: strictly increasing epochs at which coefficients are redrawn.
  std::vector<std::size_t> change_points;
  double coef_lower = -2.0;
  double coef_upper = 2.0;
};

/// f_e frozen at one epoch; cheap to evaluate in inner loops.
struct EpochLink {
  const LogisticLink* link = nullptr;
  double shift = 0.0;
  double operator()(std::span<const double> x) const {
    return clamp_probability(logistic(link->linear(x) + shift));
  }
};

/// f_e. The base link is f; with bounded drift f_e shifts the linear
/// predictor by a global delta_e; with shocks f_e is piecewise constant over
/// segments delimited by the change points.
class GroundTruthModel {
 public:
  GroundTruthModel() = default;
  GroundTruthModel(LogisticLink base, DriftSpec drift = {}, std::uint64_t drift_seed = 0);

  /// Segments for shock drift (segment 0 replaces the base link).
  void set_segments(std::vector<LogisticLink> segments);

  std::size_t dimension() const { return base_.beta.size(); }
  const LogisticLink& base() const { return base_; }
  const DriftSpec& drift() const { return drift_; }
  const std::vector<LogisticLink>& segments() const { return segments_; }

  /// Link in force at epoch e (ignores the bounded-drift shift).
  const LogisticLink& link_at(std::size_t epoch) const;
  std::size_t segment_of(std::size_t epoch) const;
  /// Shift added to the linear predictor at epoch e; zero unless bounded drift.
  double shift_at(std::size_t epoch) const;

  EpochLink at(std::size_t epoch) const { return {&link_at(epoch), shift_at(epoch)}; }

  /// f_e(x) clamped into (0,1). Throws std::invalid_argument on a
  /// dimension mismatch.
  double eval(std::size_t epoch, std::span<const double> x) const;
  /// Unchecked version for kernels that already validated the dimension.
  double eval_unchecked(std::size_t epoch, std::span<const double> x) const;
  /// Base f (epoch-free), as Assumption-2 style checks use it.
  double eval_base(std::span<const double> x) const;

 private:
  LogisticLink base_;
  DriftSpec drift_;
  std::vector<LogisticLink> segments_;
  RngStream drift_stream_{0};
};

struct OutcomeDraw {
  int y = 0;
  double p = 0.0;
};

double eval_truth(const GroundTruthModel& model, std::size_t epoch, std::span<const double> x);
OutcomeDraw draw_outcome(const GroundTruthModel& model, std::size_t epoch,
                         std::span<const double> x, RngStream& rng);

/// One link per inter-shock segment; coefficients i.i.d. U[coef_lower,
/// coef_upper]. Throws std::invalid_argument if the change points are not
/// strictly increasing.
std::vector<LogisticLink> sample_shock_sequence(const DriftSpec& spec, std::size_t dimension,
                                                double intercept, RngStream& rng);

/// Evenly spaced change points: `count` cuts of [0, epochs).
std::vector<std::size_t> evenly_spaced_change_points(std::size_t epochs, std::size_t count);

}  // namespace stacklab
