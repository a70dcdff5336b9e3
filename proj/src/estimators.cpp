#include "stacklab/estimators.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace stacklab {

void TrainingSet::add(std::span<const double> row, int label) {
  if (dimension == 0) dimension = row.size();
  if (row.size() != dimension) throw std::invalid_argument("TrainingSet: row dimension mismatch");
  x.insert(x.end(), row.begin(), row.end());
  y.push_back(label ? 1 : 0);
}

double TrainingSet::positive_rate() const {
  if (y.empty()) return 0.0;
  std::size_t k = 0;
  for (auto v : y) k += v;
  return static_cast<double>(k) / static_cast<double>(y.size());
}

void PostClamp::apply(std::span<double> x) const {
  if (!enabled) return;
  for (auto& v : x) v = std::clamp(v, lower, upper);
}

std::string to_string(RiskScore::Kind kind) {
  switch (kind) {
    case RiskScore::Kind::kOracle: return "oracle";
    case RiskScore::Kind::kMcEmpirical: return "mc-empirical";
    case RiskScore::Kind::kLogistic: return "logistic";
    case RiskScore::Kind::kForest: return "forest";
  }
  return "unknown";
}

RiskScore::Kind score_kind_from_string(const std::string& name) {
  for (auto k : {RiskScore::Kind::kOracle, RiskScore::Kind::kMcEmpirical,
                 RiskScore::Kind::kLogistic, RiskScore::Kind::kForest}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown estimator kind '" + name + "'");
}

double oracle_predict(const GroundTruthModel& truth, std::size_t epoch,
                      std::span<const double> score_values, const InterventionModel& g,
                      std::span<const double> x, std::size_t replicates, RngStream rng,
                      const PostClamp& clamp) {
  const InterventionModel ge = g.at_epoch(truth, epoch);
  const EpochLink f = truth.at(epoch);
  const bool random = ge.stochastic() && !score_values.empty();
  const std::size_t reps = random ? std::max<std::size_t>(replicates, 1) : 1;
  std::vector<double> chi(x.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::copy(x.begin(), x.end(), chi.begin());
    for (double s : score_values) ge.apply_inplace(s, chi, rng);
    clamp.apply(chi);
    sum += f(chi);
  }
  return sum / static_cast<double>(reps);
}

namespace {

std::uint64_t hash_point(std::span<const double> x) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

double mean_f(const EpochLink& f, const std::vector<double>& chains, std::size_t p,
              const PostClamp& clamp, std::vector<double>& buf) {
  const std::size_t reps = chains.size() / p;
  double s = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::copy(chains.begin() + static_cast<std::ptrdiff_t>(r * p),
              chains.begin() + static_cast<std::ptrdiff_t>((r + 1) * p), buf.begin());
    clamp.apply(buf);
    s += f(buf);
  }
  return s / static_cast<double>(reps);
}

}  // namespace

std::vector<double> oracle_score_values(const OracleContext& ctx, std::span<const double> x,
                                        std::size_t upto, std::size_t replicates) {
  const std::size_t p = x.size();
  const std::size_t reps = ctx.g.stochastic() ? std::max<std::size_t>(replicates, 1) : 1;
  RngStream rng = ctx.stream.derive(Purpose::kOracle, hash_point(x));
  std::vector<double> values;
  values.reserve(upto + 1);
  std::vector<double> buf(p);

  std::vector<double> x0(x.begin(), x.end());
  std::vector<double> chains;
  chains.reserve(reps * p);
  for (std::size_t r = 0; r < reps; ++r) chains.insert(chains.end(), x.begin(), x.end());

  values.push_back(mean_f(ctx.truth.at(0), chains, p, ctx.clamp, buf));
  for (std::size_t k = 1; k <= upto; ++k) {
    const EpochLink f = ctx.truth.at(k);
    switch (ctx.chain) {
      case OracleChain::kStacked: {
        const InterventionModel ge = ctx.g.at_epoch(ctx.truth, k);
        if (ctx.g.sign_follows_truth) {
          // g changes with the epoch, so the whole chain is replayed.
          for (std::size_t r = 0; r < reps; ++r) {
            auto chain = std::span<double>(chains.data() + r * p, p);
            std::copy(x0.begin(), x0.end(), chain.begin());
            for (std::size_t j = 0; j < k; ++j) ge.apply_inplace(values[j], chain, rng);
          }
        } else {
          for (std::size_t r = 0; r < reps; ++r) {
            ge.apply_inplace(values[k - 1], std::span<double>(chains.data() + r * p, p), rng);
          }
        }
        values.push_back(mean_f(f, chains, p, ctx.clamp, buf));
        break;
      }
      case OracleChain::kLatestOnly: {
        const InterventionModel ge = ctx.g.at_epoch(ctx.truth, k);
        for (std::size_t r = 0; r < reps; ++r) {
          std::copy(x0.begin(), x0.end(), chains.begin() + static_cast<std::ptrdiff_t>(r * p));
          ge.apply_inplace(values[k - 1], std::span<double>(chains.data() + r * p, p), rng);
        }
        values.push_back(mean_f(f, chains, p, ctx.clamp, buf));
        break;
      }
      case OracleChain::kUntreated: {
        buf = x0;
        ctx.clamp.apply(buf);
        values.push_back(f(buf));
        break;
      }
      case OracleChain::kFrozen:
        values.push_back(values[0]);
        break;
    }
  }
  return values;
}

double predict(const RiskScore& score, std::span<const double> x) {
  if (x.size() != score.dimension) {
    throw std::invalid_argument("predict: covariate dimension " + std::to_string(x.size()) +
                                " != score dimension " + std::to_string(score.dimension));
  }
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OracleScore>) {
          if (!m.context) throw std::logic_error("oracle score without context");
          return oracle_score_values(*m.context, x, score.epoch, m.replicates).back();
        } else {
          return std::clamp(m.predict(x), 0.0, 1.0);
        }
      },
      score.model);
}

RiskScore make_logistic_score(const TrainingSet& data, const LogisticFitOptions& options) {
  auto fit = fit_logistic(data, options);
  RiskScore s;
  s.kind = RiskScore::Kind::kLogistic;
  s.epoch = data.epoch;
  s.dimension = data.dimension;
  s.flags.separated = fit.separated;
  s.flags.single_class = fit.single_class;
  s.model = std::move(fit.score);
  return s;
}

RiskScore make_forest_score(const TrainingSet& data, const ForestOptions& options,
                            const RngStream& rng, Exec exec) {
  RiskScore s;
  s.kind = RiskScore::Kind::kForest;
  s.epoch = data.epoch;
  s.dimension = data.dimension;
  s.model = fit_forest(data, options, rng, exec);
  return s;
}

RiskScore make_oracle_score(std::shared_ptr<const OracleContext> ctx, std::size_t epoch,
                            std::size_t dimension, std::size_t replicates, bool empirical) {
  RiskScore s;
  s.kind = empirical ? RiskScore::Kind::kMcEmpirical : RiskScore::Kind::kOracle;
  s.epoch = epoch;
  s.dimension = dimension;
  s.model = OracleScore{replicates, std::move(ctx)};
  return s;
}

}  // namespace stacklab
