#include "stacklab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace stacklab {

std::string to_string(UpdatePolicy::Kind kind) {
  switch (kind) {
    case UpdatePolicy::Kind::kStacked: return "stacked";
    case UpdatePolicy::Kind::kNaive: return "naive";
    case UpdatePolicy::Kind::kHoldout: return "holdout";
    case UpdatePolicy::Kind::kNone: return "none";
  }
  return "unknown";
}

UpdatePolicy::Kind policy_kind_from_string(const std::string& name) {
  for (auto k : {UpdatePolicy::Kind::kStacked, UpdatePolicy::Kind::kNaive,
                 UpdatePolicy::Kind::kHoldout, UpdatePolicy::Kind::kNone}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown update policy '" + name + "'");
}

std::vector<double> CovariateSampler::sample(RngStream& rng) const {
  std::vector<double> x(dimension);
  for (auto& v : x) v = kind == Kind::kNormal ? rng.normal(a, b) : rng.uniform(a, b);
  return x;
}

std::vector<double> ScoreStack::values_at(std::span<const double> x) const {
  if (scores.empty()) return {};
  // A homogeneous oracle history is evaluated in one pass of shared chains.
  const auto* last = std::get_if<OracleScore>(&scores.back().model);
  if (last && last->context && scores.size() == scores.back().epoch + 1) {
    bool all_oracle = std::all_of(scores.begin(), scores.end(), [&](const RiskScore& s) {
      const auto* o = std::get_if<OracleScore>(&s.model);
      return o && o->context == last->context;
    });
    if (all_oracle) return oracle_score_values(*last->context, x, scores.size() - 1, last->replicates);
  }
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(predict(s, x));
  return out;
}

CovariateVector compose_stack(const ScoreStack& stack, const CovariateVector& x, RngStream& rng,
                              const GroundTruthModel* truth) {
  for (const auto& s : stack.scores) {
    if (s.dimension != x.size()) {
      throw std::invalid_argument("compose_stack: score dimension " + std::to_string(s.dimension) +
                                  " != covariate dimension " + std::to_string(x.size()));
    }
  }
  const std::vector<double> values = stack.values_at(x.values());
  InterventionModel g = stack.g;
  if (truth && g.sign_follows_truth) g = g.at_epoch(*truth, stack.size());
  std::vector<double> chi(x.values().begin(), x.values().end());
  for (double v : values) g.apply_inplace(v, chi, rng);
  return x.with_values(std::move(chi));
}

std::vector<double> TrajectoryRecord::series(std::size_t sample, bool estimated) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.sample == sample) out.push_back(estimated ? r.rho_est : r.rho_true);
  }
  return out;
}

// ---------------------------------------------------------------------------

Engine::Engine(EngineSpec spec, std::uint64_t seed, Exec exec)
    : spec_(std::move(spec)),
      root_(seed),
      data_root_(root_),
      exec_(exec),
      clock_(std::max<std::size_t>(spec_.population_size, 1)) {
  const std::size_t p = spec_.truth.dimension();
  if (p == 0) throw std::invalid_argument("engine: ground truth has no coefficients");
  if (spec_.policy.kind == UpdatePolicy::Kind::kHoldout &&
      !(spec_.policy.holdout_fraction > 0.0 && spec_.policy.holdout_fraction < 1.0)) {
    throw std::invalid_argument("engine: holdout fraction must lie in (0,1)");
  }
  if (!oracle_like() && spec_.population_size == 0) {
    throw std::invalid_argument("engine: fitted estimators need a training population");
  }
  if (spec_.population_size > 0 && spec_.population.dimension != p) {
    throw std::invalid_argument("engine: population dimension does not match ground truth");
  }
  stack_.g = spec_.g;
  if (oracle_like()) {
    auto ctx = std::make_shared<OracleContext>();
    ctx->truth = spec_.truth;
    ctx->g = spec_.g;
    ctx->chain = oracle_chain();
    ctx->clamp = spec_.clamp;
    ctx->stream = root_.derive(Purpose::kOracle);
    oracle_ctx_ = std::move(ctx);
  }
  const bool stochastic = spec_.g.stochastic();
  const std::size_t r_true = stochastic ? std::max<std::size_t>(spec_.truth_replicates, 1) : 1;
  const std::size_t r_est = stochastic && spec_.estimator == RiskScore::Kind::kMcEmpirical
                                ? std::max<std::size_t>(spec_.score_replicates, 1)
                                : 0;
  tracked_.reserve(spec_.tracked.size());
  for (const auto& x : spec_.tracked) {
    if (x.size() != p) throw std::invalid_argument("engine: tracked sample dimension mismatch");
    TrackedState t;
    t.x0 = x;
    for (std::size_t r = 0; r < r_true; ++r) t.true_chains.insert(t.true_chains.end(), x.begin(), x.end());
    for (std::size_t r = 0; r < r_est; ++r) t.est_chains.insert(t.est_chains.end(), x.begin(), x.end());
    tracked_.push_back(std::move(t));
  }
}

bool Engine::oracle_like() const {
  return spec_.estimator == RiskScore::Kind::kOracle ||
         spec_.estimator == RiskScore::Kind::kMcEmpirical;
}

OracleChain Engine::oracle_chain() const {
  switch (spec_.policy.kind) {
    case UpdatePolicy::Kind::kStacked: return OracleChain::kStacked;
    case UpdatePolicy::Kind::kNaive: return OracleChain::kLatestOnly;
    case UpdatePolicy::Kind::kHoldout: return OracleChain::kUntreated;
    case UpdatePolicy::Kind::kNone: return OracleChain::kFrozen;
  }
  return OracleChain::kStacked;
}

std::vector<double> Engine::active_values(std::span<const double> all, bool holdout_row) const {
  if (all.empty() || holdout_row) return {};
  switch (spec_.policy.kind) {
    case UpdatePolicy::Kind::kStacked: return {all.begin(), all.end()};
    case UpdatePolicy::Kind::kNaive:
    case UpdatePolicy::Kind::kHoldout: return {all.back()};
    case UpdatePolicy::Kind::kNone: return {};
  }
  return {};
}

void Engine::advance_chains(std::vector<double>& chains, std::span<const double> x0,
                            std::span<const double> all_values, const InterventionModel& ge,
                            RngStream& rng) const {
  const std::size_t p = x0.size();
  const std::size_t reps = chains.size() / p;
  const bool incremental =
      spec_.policy.kind == UpdatePolicy::Kind::kStacked && !spec_.g.sign_follows_truth;
  if (incremental) {
    // Stacked chains already hold G_{e-1}(x); one more application gives G_e(x).
    if (all_values.empty()) return;
    for (std::size_t r = 0; r < reps; ++r) {
      ge.apply_inplace(all_values.back(), std::span<double>(chains.data() + r * p, p), rng);
    }
    return;
  }
  const std::vector<double> active = active_values(all_values, false);
  for (std::size_t r = 0; r < reps; ++r) {
    auto chain = std::span<double>(chains.data() + r * p, p);
    std::copy(x0.begin(), x0.end(), chain.begin());
    for (double v : active) ge.apply_inplace(v, chain, rng);
  }
}

double Engine::mean_truth(const std::vector<double>& chains, const EpochLink& f) const {
  const std::size_t p = spec_.truth.dimension();
  const std::size_t reps = chains.size() / p;
  std::vector<double> buf(p);
  double s = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::copy_n(chains.begin() + static_cast<std::ptrdiff_t>(r * p), p, buf.begin());
    spec_.clamp.apply(buf);
    s += f(buf);
  }
  return s / static_cast<double>(reps);
}

RiskScore Engine::fit_score(const TrainingSet& data) {
  if (data.size() == 0) throw std::runtime_error("engine: empty training set");
  switch (spec_.estimator) {
    case RiskScore::Kind::kLogistic: return make_logistic_score(data, spec_.logistic);
    case RiskScore::Kind::kForest:
      return make_forest_score(data, spec_.forest, data_root_.derive(Purpose::kFit, data.epoch), exec_);
    default: break;
  }
  throw std::logic_error("engine: oracle scores are not fitted");
}

void Engine::set_data_replicate(std::uint64_t replicate) {
  data_root_ = root_.derive(Purpose::kReplicate, replicate);
}

EpochSummary Engine::run_epoch(TrajectoryRecord& record) {
  const std::size_t e = clock_.epoch();
  const std::size_t p = spec_.truth.dimension();
  const InterventionModel ge = spec_.g.at_epoch(spec_.truth, e);
  const EpochLink f = spec_.truth.at(e);
  const bool parallel = exec_ == Exec::kParallel;
  const auto policy = spec_.policy.kind;

  EpochSummary summary;
  summary.epoch = e;

  // --- training population -------------------------------------------------
  const std::size_t n = spec_.population_size;
  TrainingSet data;
  data.dimension = p;
  data.epoch = e;
  last_holdout_.assign(n, 0);
  if (n > 0) {
    if (policy == UpdatePolicy::Kind::kHoldout) {
      RngStream hs = data_root_.derive(Purpose::kHoldout, e);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      const auto k = static_cast<std::size_t>(std::llround(spec_.policy.holdout_fraction * static_cast<double>(n)));
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(hs.below(n - i));
        std::swap(perm[i], perm[j]);
        last_holdout_[perm[i]] = 1;
      }
    }
    std::vector<double> x0(n * p), x1(n * p);
    std::vector<std::uint8_t> y(n);
    auto row = [&](std::size_t i) {
      RngStream ps = data_root_.derive(Purpose::kPopulation, e, i);
      const std::vector<double> x = spec_.population.sample(ps);
      std::copy(x.begin(), x.end(), x0.begin() + static_cast<std::ptrdiff_t>(i * p));
      std::vector<double> chi = x;
      const bool held = last_holdout_[i] != 0;
      if (!held && !stack_.empty() && policy != UpdatePolicy::Kind::kNone) {
        std::vector<double> all;
        if (policy == UpdatePolicy::Kind::kStacked) {
          all = stack_.values_at(x);
        } else {
          all = {predict(stack_.scores.back(), x)};
        }
        RngStream is = data_root_.derive(Purpose::kIntervention, e, i);
        for (double v : active_values(all, false)) ge.apply_inplace(v, chi, is);
      }
      std::copy(chi.begin(), chi.end(), x1.begin() + static_cast<std::ptrdiff_t>(i * p));
      spec_.clamp.apply(chi);
      RngStream os = data_root_.derive(Purpose::kOutcome, e, i);
      y[i] = os.bernoulli(f(chi)) ? 1 : 0;
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
      for (std::size_t i = 0; i < n; ++i) row(i);
    } else {
      for (std::size_t i = 0; i < n; ++i) row(i);
    }
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      positives += y[i];
      const bool held = last_holdout_[i] != 0;
      if (held) {
        ++summary.holdout_rows;
        if (!std::equal(x0.begin() + static_cast<std::ptrdiff_t>(i * p),
                        x0.begin() + static_cast<std::ptrdiff_t>((i + 1) * p),
                        x1.begin() + static_cast<std::ptrdiff_t>(i * p))) {
          ++summary.holdout_changed;
        }
      }
      if (policy == UpdatePolicy::Kind::kHoldout && !held) continue;
      data.add(std::span<const double>(x0.data() + i * p, p), y[i]);
    }
    summary.population_outcome_rate = static_cast<double>(positives) / static_cast<double>(n);
    summary.training_rows = data.size();
  }

  // --- refit ----------------------------------------------------------------
  const bool refit = policy != UpdatePolicy::Kind::kNone || e == 0;
  std::optional<RiskScore> fitted;
  if (refit) {
    if (oracle_like()) {
      const std::size_t reps = spec_.estimator == RiskScore::Kind::kMcEmpirical
                                   ? spec_.score_replicates
                                   : spec_.truth_replicates;
      fitted = make_oracle_score(oracle_ctx_, e, p, reps,
                                 spec_.estimator == RiskScore::Kind::kMcEmpirical);
    } else {
      fitted = fit_score(data);
    }
    summary.flags = fitted->flags;
  }

  // --- tracked samples ------------------------------------------------------
  const std::size_t m = tracked_.size();
  record.dimension = p;
  record.samples = m;
  std::vector<TrajectoryRow> rows(m);
  const bool tracing =
      std::find(spec_.trace_epochs.begin(), spec_.trace_epochs.end(), e) != spec_.trace_epochs.end();
  std::vector<std::vector<double>> trace(tracing ? m : 0);

  auto track = [&](std::size_t i) {
    TrackedState& t = tracked_[i];
    RngStream ts = root_.derive(Purpose::kTrueChain, e, i);
    advance_chains(t.true_chains, t.x0, t.values, ge, ts);
    const double rho_true = mean_truth(t.true_chains, f);

    double value = rho_true;
    if (!t.est_chains.empty()) {
      RngStream es = root_.derive(Purpose::kEstChain, e, i);
      advance_chains(t.est_chains, t.x0, t.values, ge, es);
      value = mean_truth(t.est_chains, f);
    }
    if (oracle_like() && policy == UpdatePolicy::Kind::kHoldout) {
      // Fitted on untreated rows only.
      std::vector<double> buf = t.x0;
      spec_.clamp.apply(buf);
      value = f(buf);
    }
    if (!oracle_like() && fitted) value = predict(*fitted, t.x0);

    if (refit) {
      if (policy == UpdatePolicy::Kind::kStacked || e == 0) {
        t.values.push_back(value);
      } else {
        t.values.assign(1, value);
      }
    }

    TrajectoryRow& r = rows[i];
    r.epoch = e;
    r.sample = i;
    r.rho_true = rho_true;
    r.rho_est = t.values.empty() ? value : t.values.back();
    r.x_post.assign(t.true_chains.begin(), t.true_chains.begin() + static_cast<std::ptrdiff_t>(p));
    spec_.clamp.apply(r.x_post);
    RngStream os = root_.derive(Purpose::kOutcome, e, n + i);
    r.y = os.bernoulli(f(r.x_post)) ? 1 : 0;

    if (tracing) {
      const std::size_t reps = t.true_chains.size() / p;
      auto& col = trace[i];
      col.resize(reps);
      for (std::size_t k = 0; k < reps; ++k) {
        double v = t.true_chains[k * p];
        if (spec_.clamp.enabled) v = std::clamp(v, spec_.clamp.lower, spec_.clamp.upper);
        col[k] = v;
      }
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < m; ++i) track(i);
  } else {
    for (std::size_t i = 0; i < m; ++i) track(i);
  }

  double mean_true = 0.0;
  for (auto& r : rows) {
    mean_true += r.rho_true;
    record.rows.push_back(std::move(r));
  }
  summary.mean_rho_true = m ? mean_true / static_cast<double>(m) : 0.0;
  if (tracing) record.trace[e] = std::move(trace);

  // --- stack update ---------------------------------------------------------
  if (fitted) {
    if (policy == UpdatePolicy::Kind::kStacked || stack_.empty()) {
      stack_.scores.push_back(std::move(*fitted));
    } else {
      stack_.scores.assign(1, std::move(*fitted));
    }
  }
  summary.stack_size = stack_.size();
  last_population_ = std::move(data);
  record.epochs.push_back(summary);
  clock_.tick();
  return summary;
}

TrajectoryRecord run_experiment(const EngineSpec& spec, std::size_t epochs, std::uint64_t seed,
                                Exec exec, const std::function<void(const EpochSummary&)>& on_epoch,
                                ScoreStack* final_stack) {
  Engine engine(spec, seed, exec);
  TrajectoryRecord record;
  for (std::size_t e = 0; e <= epochs; ++e) {
    const EpochSummary s = engine.run_epoch(record);
    if (on_epoch) on_epoch(s);
  }
  if (final_stack) *final_stack = engine.stack();
  return record;
}

}  // namespace stacklab
