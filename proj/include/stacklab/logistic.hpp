#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stacklab {

struct TrainingSet;

struct LogisticFitOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;
  /// Ridge on the mean log-likelihood; the intercept is not penalised.
  double ridge = 1e-6;
};

/// Coefficients are stored intercept first.
struct LogisticScore {
  std::vector<double> coef;
  std::size_t iterations = 0;
  bool converged = false;

  double predict(std::span<const double> x) const;
};

struct LogisticFit {
  LogisticScore score;
  bool separated = false;
  bool single_class = false;
};

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares. Single-class data yields an intercept-only model at the clamped
/// empirical rate.
LogisticFit fit_logistic(const TrainingSet& data, const LogisticFitOptions& options = {});

}  // namespace stacklab
