#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stacklab/core.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

struct TrainingSet;

/// Flat binary tree. feature < 0 marks a leaf. Rows with
/// x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<std::int32_t> feature;
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;

  std::size_t node_count() const { return feature.size(); }
  std::size_t depth() const;
  double predict(std::span<const double> x) const;
};

struct ForestOptions {
  std::size_t n_trees = 500;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 5;
  /// 0 means ceil(sqrt(p)).
  std::size_t features_per_split = 0;
  /// Features with more distinct values are split on quantile bin edges.
  std::size_t max_bins = 256;
  bool bootstrap = true;
};

struct ForestScore {
  std::vector<RegressionTree> trees;
  double oob_mse = 0.0;
  double label_variance = 0.0;
  std::size_t oob_rows = 0;
  /// Out-of-bag prediction per training row; NaN for rows in every bag.
  std::vector<double> oob_prediction;

  double predict(std::span<const double> x) const;
};

/// Bagged CART regression trees on mean-squared-error reduction. Tree t
/// draws from rng.derive(kTree, t), so the result does not depend on exec.
ForestScore fit_forest(const TrainingSet& data, const ForestOptions& options, const RngStream& rng,
                       Exec exec = Exec::kParallel);

}  // namespace stacklab
