#include "stacklab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stacklab/estimators.hpp"

namespace stacklab {

std::size_t RegressionTree::depth() const {
  if (feature.empty()) return 0;
  std::vector<std::size_t> d(feature.size(), 0);
  std::size_t best = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < feature.size(); ++i) {
    best = std::max(best, d[i]);
    if (feature[i] >= 0) {
      d[static_cast<std::size_t>(left[i])] = d[i] + 1;
      d[static_cast<std::size_t>(right[i])] = d[i] + 1;
    }
  }
  return best;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    const auto f = static_cast<std::size_t>(feature[node]);
    node = static_cast<std::size_t>(x[f] <= threshold[node] ? left[node] : right[node]);
  }
  return value[node];
}

double ForestScore::predict(std::span<const double> x) const {
  if (trees.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return std::clamp(s / static_cast<double>(trees.size()), 0.0, 1.0);
}

namespace {

/// Per-feature binning shared by all trees. Bin b of feature f holds values
/// in (cut[b-1], cut[b]]; `cut` doubles as the split threshold.
struct BinnedData {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]
  std::vector<std::vector<double>> cuts;         // [feature][bin]
};

BinnedData bin_features(const TrainingSet& data, std::size_t max_bins) {
  BinnedData b;
  b.n = data.size();
  b.p = data.dimension;
  b.bins.assign(b.p, std::vector<std::uint16_t>(b.n));
  b.cuts.resize(b.p);
  std::vector<double> col(b.n);
  for (std::size_t f = 0; f < b.p; ++f) {
    for (std::size_t i = 0; i < b.n; ++i) col[i] = data.x[i * b.p + f];
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(uniq));
    std::vector<double> cuts;
    if (uniq.size() <= max_bins) {
      // Exact: threshold halfway between consecutive distinct values.
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) cuts.push_back(0.5 * (uniq[k] + uniq[k + 1]));
    } else {
      for (std::size_t k = 1; k < max_bins; ++k) {
        const double q = sorted[k * b.n / max_bins];
        if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
      }
      if (!cuts.empty() && cuts.back() >= uniq.back()) cuts.pop_back();
    }
    cuts.push_back(HUGE_VAL);
    for (std::size_t i = 0; i < b.n; ++i) {
      b.bins[f][i] = static_cast<std::uint16_t>(
          std::lower_bound(cuts.begin(), cuts.end(), col[i]) - cuts.begin());
    }
    b.cuts[f] = std::move(cuts);
  }
  return b;
}

struct SplitChoice {
  int feature = -1;
  std::size_t bin = 0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& bins, const std::vector<double>& y, const ForestOptions& opt,
              std::size_t mtry, RngStream rng)
      : bins_(bins), y_(y), opt_(opt), mtry_(mtry), rng_(rng) {
    std::size_t max_bins = 0;
    for (const auto& c : bins_.cuts) max_bins = std::max(max_bins, c.size());
    count_.resize(max_bins);
    sum_.resize(max_bins);
    features_.resize(bins_.p);
  }

  RegressionTree build(std::vector<std::uint32_t>& rows) {
    tree_ = RegressionTree{};
    grow(rows, 0, rows.size(), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t add_leaf(double value) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    return static_cast<std::int32_t>(tree_.feature.size() - 1);
  }

  std::int32_t grow(std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end,
                    std::size_t depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y_[rows[i]];
    const double mean = sum / static_cast<double>(n);
    const std::int32_t node = add_leaf(mean);
    if (depth >= opt_.max_depth || n < 2 * opt_.min_leaf) return node;

    const SplitChoice best = find_split(rows, begin, end, sum);
    if (best.feature < 0) return node;

    const auto f = static_cast<std::size_t>(best.feature);
    const auto& fb = bins_.bins[f];
    auto mid_it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                 rows.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](std::uint32_t r) { return fb[r] <= best.bin; });
    const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

    const auto idx = static_cast<std::size_t>(node);
    tree_.feature[idx] = best.feature;
    tree_.threshold[idx] = bins_.cuts[f][best.bin];
    const std::int32_t l = grow(rows, begin, mid, depth + 1);
    const std::int32_t r = grow(rows, mid, end, depth + 1);
    tree_.left[idx] = l;
    tree_.right[idx] = r;
    return node;
  }

  SplitChoice find_split(const std::vector<std::uint32_t>& rows, std::size_t begin,
                         std::size_t end, double total) {
    // Partial Fisher-Yates picks mtry distinct features.
    std::iota(features_.begin(), features_.end(), 0);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng_.below(bins_.p - k));
      std::swap(features_[k], features_[j]);
    }
    const double n = static_cast<double>(end - begin);
    const double parent_score = total * total / n;
    SplitChoice best;
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t f = features_[k];
      const std::size_t nb = bins_.cuts[f].size();
      if (nb < 2) continue;
      std::fill(count_.begin(), count_.begin() + static_cast<std::ptrdiff_t>(nb), 0u);
      std::fill(sum_.begin(), sum_.begin() + static_cast<std::ptrdiff_t>(nb), 0.0);
      const auto& fb = bins_.bins[f];
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows[i];
        ++count_[fb[r]];
        sum_[fb[r]] += y_[r];
      }
      std::size_t left_n = 0;
      double left_sum = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        left_n += count_[b];
        left_sum += sum_[b];
        const std::size_t right_n = (end - begin) - left_n;
        if (left_n < opt_.min_leaf) continue;
        if (right_n < opt_.min_leaf) break;
        if (count_[b] == 0 && b > 0) continue;
        const double right_sum = total - left_sum;
        // SSE reduction = sum_L^2/n_L + sum_R^2/n_R - sum^2/n
        const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                            right_sum * right_sum / static_cast<double>(right_n) - parent_score;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.bin = b;
        }
      }
    }
    return best;
  }

  const BinnedData& bins_;
  const std::vector<double>& y_;
  const ForestOptions& opt_;
  std::size_t mtry_;
  RngStream rng_;
  RegressionTree tree_;
  std::vector<std::uint32_t> count_;
  std::vector<double> sum_;
  std::vector<std::size_t> features_;
};

}  // namespace

ForestScore fit_forest(const TrainingSet& data, const ForestOptions& options, const RngStream& rng,
                       Exec exec) {
  if (data.size() == 0) throw std::invalid_argument("fit_forest: empty training set");
  if (options.n_trees == 0) throw std::invalid_argument("fit_forest: n_trees must be positive");
  if (options.min_leaf == 0) throw std::invalid_argument("fit_forest: min_leaf must be positive");
  const std::size_t n = data.size();
  const std::size_t p = data.dimension;
  std::size_t mtry = options.features_per_split;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::clamp<std::size_t>(mtry, 1, p);

  const BinnedData bins = bin_features(data, std::max<std::size_t>(options.max_bins, 2));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.y[i];

  ForestScore forest;
  forest.trees.resize(options.n_trees);
  // in-bag multiplicity per tree, used for out-of-bag error
  std::vector<std::vector<std::uint8_t>> in_bag(options.n_trees);

  auto build_one = [&](std::size_t t) {
    RngStream s = rng.derive(Purpose::kTree, t);
    std::vector<std::uint32_t> rows(n);
    std::vector<std::uint8_t> bag(n, 0);
    if (options.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        rows[i] = static_cast<std::uint32_t>(s.below(n));
        bag[rows[i]] = 1;
      }
    } else {
      std::iota(rows.begin(), rows.end(), 0u);
      std::fill(bag.begin(), bag.end(), 1);
    }
    TreeBuilder builder(bins, y, options, mtry, s.derive(Purpose::kFit));
    forest.trees[t] = builder.build(rows);
    in_bag[t] = std::move(bag);
  };

  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t t = 0; t < options.n_trees; ++t) build_one(t);
  } else {
    for (std::size_t t = 0; t < options.n_trees; ++t) build_one(t);
  }

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  forest.label_variance = var / static_cast<double>(n);

  double sse = 0.0;
  std::size_t counted = 0;
  forest.oob_prediction.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t t = 0; t < options.n_trees; ++t) {
      if (in_bag[t][i]) continue;
      s += forest.trees[t].predict(data.row(i));
      ++k;
    }
    if (k == 0) continue;
    const double pred = s / static_cast<double>(k);
    forest.oob_prediction[i] = pred;
    sse += (pred - y[i]) * (pred - y[i]);
    ++counted;
  }
  forest.oob_rows = counted;
  forest.oob_mse = counted ? sse / static_cast<double>(counted) : 0.0;
  return forest;
}

}  // namespace stacklab
