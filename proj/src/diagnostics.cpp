#include "stacklab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "stacklab/ks.hpp"
#include "stacklab/logistic.hpp"

namespace stacklab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base-2 radical inverse; prefixes of the sequence are nested and spread.
double van_der_corput(std::size_t j) {
  double v = 0.0, denom = 1.0;
  while (j) {
    denom *= 2.0;
    v += static_cast<double>(j & 1u) / denom;
    j >>= 1u;
  }
  return v;
}

/// E_g f(g(rho, x)) with `reps` draws from a private copy of `stream`.
double expected_after(const InterventionModel& g, const EpochLink& f, double rho,
                      std::span<const double> x, std::size_t reps, RngStream stream,
                      std::vector<double>& buf) {
  const std::size_t n = g.stochastic() ? std::max<std::size_t>(reps, 1) : 1;
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(x.begin(), x.end(), buf.begin());
    g.apply_inplace(rho, buf, stream);
    s += f(buf);
  }
  return s / static_cast<double>(n);
}

template <class F>
void for_each_index(std::size_t n, Exec exec, F&& fn) {
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) fn(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

std::map<std::size_t, std::vector<const TrajectoryRow*>> rows_by_sample(const TrajectoryRecord& r) {
  std::map<std::size_t, std::vector<const TrajectoryRow*>> out;
  for (const auto& row : r.rows) out[row.sample].push_back(&row);
  for (auto& [s, v] : out) {
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->epoch < b->epoch; });
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> probe_points(std::size_t dimension, std::size_t count,
                                              double lower, double upper, const RngStream& rng) {
  std::vector<std::vector<double>> pts(count, std::vector<double>(dimension));
  for (std::size_t i = 0; i < count; ++i) {
    RngStream s = rng.derive(Purpose::kProbe, 0, i);
    for (auto& v : pts[i]) v = s.uniform(lower, upper);
  }
  return pts;
}

LimitBounds compute_limit_bounds(const GroundTruthModel& truth, const InterventionModel& g,
                                 const ProbeSpec& spec, const RngStream& rng, bool coupled,
                                 Exec exec, std::size_t epoch) {
  const InterventionModel ge = g.at_epoch(truth, epoch);
  const EpochLink f{&truth.link_at(epoch), 0.0};
  const std::size_t p = truth.dimension();
  const auto pts = probe_points(p, spec.points, spec.lower, spec.upper, rng);
  const double req = ge.rho_eq;

  // rho grid: u = 1 first, then nested radical-inverse fractions of each side.
  std::vector<double> above, below;
  if (!coupled) {
    for (std::size_t j = 0; j < std::max<std::size_t>(spec.rhos, 1); ++j) {
      const double u = j == 0 ? 1.0 : van_der_corput(j);
      above.push_back(req + (1.0 - req) * u);
      below.push_back(req * (1.0 - u));
    }
  }

  std::vector<double> lo(pts.size(), kInf), hi(pts.size(), -kInf);
  for_each_index(pts.size(), exec, [&](std::size_t k) {
    std::vector<double> buf(p);
    const auto& x = pts[k];
    const double fx = f(x);
    if (coupled) {
      const double v = expected_after(ge, f, fx, x, spec.replicates,
                                      rng.derive(Purpose::kReplicate, k), buf);
      if (fx > req) lo[k] = v;
      if (fx < req) hi[k] = v;
      return;
    }
    if (fx > req) {
      for (std::size_t j = 0; j < above.size(); ++j) {
        lo[k] = std::min(lo[k], expected_after(ge, f, above[j], x, spec.replicates,
                                               rng.derive(Purpose::kReplicate, k, j, 0), buf));
      }
    } else if (fx < req) {
      for (std::size_t j = 0; j < below.size(); ++j) {
        hi[k] = std::max(hi[k], expected_after(ge, f, below[j], x, spec.replicates,
                                               rng.derive(Purpose::kReplicate, k, j, 1), buf));
      }
    }
  });

  LimitBounds b;
  b.method = coupled ? "coupled" : "uncoupled";
  b.probes = pts.size();
  b.rhos = coupled ? 0 : above.size();
  const double inf_v = *std::min_element(lo.begin(), lo.end());
  const double sup_v = *std::max_element(hi.begin(), hi.end());
  b.degenerate_lower = !std::isfinite(inf_v);
  b.degenerate_upper = !std::isfinite(sup_v);
  b.lower = b.degenerate_lower ? req : std::min(inf_v, req);
  b.upper = b.degenerate_upper ? req : std::max(sup_v, req);
  return b;
}

double ContainmentReport::min_fraction() const {
  return fraction.empty() ? 1.0 : *std::min_element(fraction.begin(), fraction.end());
}

ContainmentReport check_trajectory_containment(const TrajectoryRecord& record, double lower,
                                               double upper, std::size_t burn_in, double tolerance) {
  ContainmentReport rep;
  rep.lower = lower;
  rep.upper = upper;
  rep.tolerance = tolerance;
  rep.burn_in = burn_in;
  for (const auto& [sample, rows] : rows_by_sample(record)) {
    std::size_t in = 0, total = 0;
    for (const auto* r : rows) {
      if (r->epoch <= burn_in) continue;
      ++total;
      if (r->rho_true >= lower - tolerance && r->rho_true <= upper + tolerance) ++in;
    }
    rep.points += total;
    rep.outside += total - in;
    rep.fraction.push_back(total ? static_cast<double>(in) / static_cast<double>(total) : 1.0);
  }
  return rep;
}

MonotoneReport check_monotone_movement(const TrajectoryRecord& record, double rho_eq, double band) {
  MonotoneReport rep;
  for (const auto& [sample, rows] : rows_by_sample(record)) {
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      const double a = rows[k]->rho_true;
      const double b = rows[k + 1]->rho_true;
      if (std::fabs(a - rho_eq) <= band) continue;
      ++rep.checked;
      const bool ok = a > rho_eq ? b < a : b > a;
      if (!ok) ++rep.violations;
    }
  }
  return rep;
}

double post_burn_in_variance(const TrajectoryRecord& record, std::size_t burn_in) {
  double total = 0.0;
  std::size_t samples = 0;
  for (const auto& [sample, rows] : rows_by_sample(record)) {
    std::vector<double> v;
    for (const auto* r : rows) {
      if (r->epoch > burn_in) v.push_back(r->rho_true);
    }
    if (v.size() < 2) continue;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    total += ss / static_cast<double>(v.size() - 1);
    ++samples;
  }
  return samples ? total / static_cast<double>(samples) : 0.0;
}

KsConvergence ks_convergence(const TrajectoryRecord& record, std::size_t sample, std::size_t m,
                             double threshold) {
  if (record.trace.size() < 3) throw std::invalid_argument("ks_convergence: need at least 3 traced epochs");
  if (m < 200) throw std::invalid_argument("ks_convergence: need at least 200 values per epoch");
  auto column = [&](std::size_t e) -> std::span<const double> {
    const auto& cols = record.trace.at(e);
    if (sample >= cols.size() || cols[sample].size() < m) {
      throw std::invalid_argument("ks_convergence: epoch " + std::to_string(e) + " has fewer than " +
                                  std::to_string(m) + " values");
    }
    return {cols[sample].data(), m};
  };
  KsConvergence out;
  out.threshold = threshold;
  for (const auto& [e, cols] : record.trace) {
    if (e == 0 || !record.trace.contains(2 * e)) continue;
    out.pairs.push_back({e, 2 * e, ks_statistic(column(e), column(2 * e))});
  }
  if (out.pairs.empty()) throw std::invalid_argument("ks_convergence: no (e, 2e) epoch pairs traced");
  out.decreasing = true;
  for (std::size_t k = 1; k < out.pairs.size(); ++k) {
    if (!(out.pairs[k].distance < out.pairs[k - 1].distance)) out.decreasing = false;
  }
  out.converging = out.decreasing && out.final_distance() < threshold;
  return out;
}

// ---------------------------------------------------------------------------

AttractionInterval attraction_interval(double rho_eq, double delta, double gamma, double lambda) {
  if (!(gamma > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("attraction_interval: gamma and lambda must be positive");
  }
  if (delta < 0.0) throw std::invalid_argument("attraction_interval: delta must be non-negative");
  AttractionInterval a;
  a.rho_eq = rho_eq;
  a.delta = delta;
  a.gamma = gamma;
  a.lambda = lambda;
  const double w = delta / (gamma * lambda);
  a.i1 = rho_eq - w;
  a.i2 = rho_eq + w;
  return a;
}

ErrorModelEstimate measure_error_model(const GroundTruthModel& truth, const InterventionModel& g,
                                       const CovariateSampler& sampler, std::size_t training_size,
                                       const std::vector<std::vector<double>>& probes,
                                       std::size_t fits, std::size_t g_replicates,
                                       const RngStream& rng, double min_distance, Exec exec) {
  if (fits == 0 || probes.empty()) throw std::invalid_argument("measure_error_model: empty design");
  const EpochLink f = truth.at(0);
  const std::size_t p = truth.dimension();
  // rho_r(x_k) for every refit r and probe k.
  std::vector<std::vector<double>> pred(fits, std::vector<double>(probes.size()));
  for_each_index(fits, exec, [&](std::size_t r) {
    RngStream s = rng.derive(Purpose::kFit, 0, r);
    TrainingSet data;
    data.dimension = p;
    for (std::size_t i = 0; i < training_size; ++i) {
      const auto x = sampler.sample(s);
      data.add(x, s.bernoulli(f(x)) ? 1 : 0);
    }
    const LogisticFit fit = fit_logistic(data);
    for (std::size_t k = 0; k < probes.size(); ++k) pred[r][k] = fit.score.predict(probes[k]);
  });

  ErrorModelEstimate est;
  est.fits = fits;
  est.gaps.assign(probes.size(), 0.0);
  est.ratios.assign(probes.size(), std::numeric_limits<double>::quiet_NaN());
  for_each_index(probes.size(), exec, [&](std::size_t k) {
    std::vector<double> buf(p);
    // Common random numbers: the same g draws for every rho at this probe.
    const RngStream crn = rng.derive(Purpose::kProbe, 1, k);
    double mean_rho = 0.0, mean_after = 0.0;
    for (std::size_t r = 0; r < fits; ++r) {
      mean_rho += pred[r][k];
      mean_after += expected_after(g, f, pred[r][k], probes[k], g_replicates, crn, buf);
    }
    mean_rho /= static_cast<double>(fits);
    mean_after /= static_cast<double>(fits);
    const double at_mean = expected_after(g, f, mean_rho, probes[k], g_replicates, crn, buf);
    est.gaps[k] = std::fabs(at_mean - mean_after);
    const double fx = f(probes[k]);
    const double req = g.rho_eq_for(probes[k]);
    if (std::fabs(fx - req) >= min_distance) est.ratios[k] = (mean_rho - req) / (fx - req);
  });
  est.delta = *std::max_element(est.gaps.begin(), est.gaps.end());
  est.lambda = kInf;
  for (double r : est.ratios) {
    if (!std::isnan(r)) est.lambda = std::min(est.lambda, r);
  }
  if (!std::isfinite(est.lambda)) est.lambda = 0.0;
  return est;
}

std::size_t AttractionReport::toward_count() const {
  return static_cast<std::size_t>(
      std::count_if(probes.begin(), probes.end(), [](const AttractionProbe& p) { return p.toward; }));
}

double AttractionReport::toward_share() const {
  return probes.empty() ? 0.0 : static_cast<double>(toward_count()) / static_cast<double>(probes.size());
}

AttractionReport attraction_check(const EngineSpec& spec, std::uint64_t seed,
                                  const AttractionInterval& interval,
                                  const std::vector<std::size_t>& snapshots,
                                  std::size_t replicates, double min_outside, Exec exec) {
  if (replicates == 0) throw std::invalid_argument("attraction_check: replicates must be >= 1");
  AttractionReport rep;
  rep.interval = interval;
  rep.min_outside = min_outside;
  rep.replicates = replicates;
  if (snapshots.empty()) return rep;
  const std::size_t last = *std::max_element(snapshots.begin(), snapshots.end());
  const std::size_t m = spec.tracked.size();

  Engine base(spec, seed, exec);
  TrajectoryRecord scratch;
  for (std::size_t e = 0; e <= last; ++e) {
    if (std::find(snapshots.begin(), snapshots.end(), e) != snapshots.end()) {
      std::vector<double> before(m, 0.0);
      std::vector<std::vector<double>> after(m, std::vector<double>(replicates));
      for (std::size_t r = 0; r < replicates; ++r) {
        Engine fork = base;
        fork.set_data_replicate(r + 1);
        TrajectoryRecord rec;
        fork.run_epoch(rec);  // logs rho^o_e, fits on this replicate's D_e
        fork.run_epoch(rec);  // logs rho^o_{e+1}
        for (std::size_t i = 0; i < m; ++i) {
          before[i] = rec.rows[i].rho_true;
          after[i][r] = rec.rows[m + i].rho_true;
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        const double b = before[i];
        double outside = 0.0;
        int dir = 0;
        if (b > interval.i2) {
          outside = b - interval.i2;
          dir = -1;
        } else if (b < interval.i1) {
          outside = interval.i1 - b;
          dir = 1;
        }
        if (dir == 0 || outside < min_outside) continue;
        AttractionProbe pr;
        pr.epoch = e;
        pr.sample = i;
        pr.rho_before = b;
        pr.outside_by = outside;
        std::size_t moved = 0;
        for (double a : after[i]) {
          pr.mean_after += a;
          if ((a - b) * dir > 0) ++moved;
        }
        pr.mean_after /= static_cast<double>(replicates);
        pr.fraction_toward = static_cast<double>(moved) / static_cast<double>(replicates);
        const double movement = (pr.mean_after - b) * dir;
        pr.toward = movement > 0.0;
        pr.large_enough = movement >= interval.gamma * interval.lambda * outside;
        rep.probes.push_back(pr);
      }
    }
    base.run_epoch(scratch);
  }
  return rep;
}

// ---------------------------------------------------------------------------

DriftIntervals drift_intervals(double alpha, double gamma, const GroundTruthModel& truth,
                               const InterventionModel& g, const ProbeSpec& spec,
                               const RngStream& rng, Exec exec, std::size_t epoch) {
  if (alpha < 0.0) throw std::invalid_argument("drift_intervals: alpha must be non-negative");
  if (!(gamma > 0.0)) throw std::invalid_argument("drift_intervals: gamma must be positive");
  const InterventionModel ge = g.at_epoch(truth, epoch);
  const EpochLink f{&truth.link_at(epoch), 0.0};
  const QTransform& q = ge.q;
  const double req = ge.rho_eq;

  DriftIntervals out;
  out.alpha = alpha;
  out.gamma = gamma;
  const double w = 2.0 * alpha / gamma;
  out.rho = {req - w, req + w};
  if (out.rho.lower < 0.0 || out.rho.upper > 1.0) {
    out.clamped = true;
    out.rho.lower = std::max(out.rho.lower, 0.0);
    out.rho.upper = std::min(out.rho.upper, 1.0);
  }

  const double reach = alpha * (1.0 + gamma) / gamma;
  auto q_at = [&](double p) {
    if (p <= 0.0 || p >= 1.0) out.clamped = true;
    return q(p);
  };
  const double lo_gate = -alpha + q_at(req - reach);
  const double hi_gate = alpha + q_at(req + reach);

  const std::size_t p = truth.dimension();
  const auto pts = probe_points(p, spec.points, spec.lower, spec.upper, rng);
  out.probes = pts.size();
  std::vector<double> lo(pts.size(), kInf), hi(pts.size(), -kInf);
  for_each_index(pts.size(), exec, [&](std::size_t k) {
    std::vector<double> buf(p);
    const auto& x = pts[k];
    const double fx = f(x);
    const double qf = q(fx);
    const bool in_lo = qf >= lo_gate;
    const bool in_hi = qf <= hi_gate;
    if (!in_lo && !in_hi) return;
    const double v = expected_after(ge, f, fx, x, spec.replicates,
                                    rng.derive(Purpose::kReplicate, k), buf);
    const double qv = q(v);
    if (in_lo) lo[k] = q.inverse(-alpha + qv);
    if (in_hi) hi[k] = q.inverse(alpha + qv);
  });
  const double inf_v = *std::min_element(lo.begin(), lo.end());
  const double sup_v = *std::max_element(hi.begin(), hi.end());
  out.lim.lower = std::isfinite(inf_v) ? std::min(inf_v, req) : req;
  out.lim.upper = std::isfinite(sup_v) ? std::max(sup_v, req) : req;
  return out;
}

std::size_t DriftConclusionReport::satisfied() const {
  return static_cast<std::size_t>(std::count_if(conclusion.begin(), conclusion.end(),
                                                [](int c) { return c != 0; }));
}

DriftConclusionReport check_drift_conclusions(const TrajectoryRecord& record,
                                              const DriftIntervals& iv, std::size_t burn_in,
                                              double tol, double eps, std::size_t tail) {
  DriftConclusionReport rep;
  for (const auto& [sample, rows] : rows_by_sample(record)) {
    bool contained = true;
    for (const auto* r : rows) {
      if (r->epoch > burn_in && !iv.lim.contains(r->rho_true, tol)) contained = false;
    }
    if (contained) {
      rep.conclusion.push_back(1);
      continue;
    }
    const std::size_t k = std::min(tail, rows.size());
    auto near = [&](double end) {
      return std::all_of(rows.end() - static_cast<std::ptrdiff_t>(k), rows.end(),
                         [&](const TrajectoryRow* r) { return std::fabs(r->rho_true - end) < eps; });
    };
    rep.conclusion.push_back(k > 0 && (near(iv.rho.lower) || near(iv.rho.upper)) ? 2 : 0);
  }
  return rep;
}

bool RecoveryReport::all_recovered() const {
  return std::all_of(segments.begin(), segments.end(),
                     [](const SegmentRecovery& s) { return s.recovered; });
}

RecoveryReport shock_recovery(const TrajectoryRecord& record,
                              const std::vector<std::size_t>& change_points,
                              const std::vector<DriftIntervals>& per_segment, double epsilon0) {
  if (per_segment.size() != change_points.size() + 1) {
    throw std::invalid_argument("shock_recovery: need one interval set per segment");
  }
  std::size_t end_epoch = 0;
  for (const auto& r : record.rows) end_epoch = std::max(end_epoch, r.epoch + 1);
  if (!change_points.empty() && change_points.back() >= end_epoch) {
    throw std::invalid_argument("shock_recovery: record does not span every change point");
  }
  // ok[e] = every sample satisfies a recovery condition at epoch e.
  std::vector<std::size_t> bounds{0};
  bounds.insert(bounds.end(), change_points.begin(), change_points.end());
  bounds.push_back(end_epoch);
  auto segment_of = [&](std::size_t e) {
    return static_cast<std::size_t>(std::upper_bound(change_points.begin(), change_points.end(), e) -
                                    change_points.begin());
  };
  std::vector<char> ok(end_epoch, 1);
  for (const auto& r : record.rows) {
    const auto& iv = per_segment[segment_of(r.epoch)];
    const bool good = std::fabs(r.rho_true - iv.rho.lower) < epsilon0 ||
                      std::fabs(r.rho_true - iv.rho.upper) < epsilon0 || iv.lim.contains(r.rho_true);
    if (!good) ok[r.epoch] = 0;
  }
  RecoveryReport rep;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    SegmentRecovery seg;
    seg.begin = bounds[s];
    seg.end = bounds[s + 1];
    std::size_t first_good = seg.end;
    while (first_good > seg.begin && ok[first_good - 1]) --first_good;
    seg.recovered = first_good < seg.end;
    seg.epochs_to_recover = first_good - seg.begin;
    rep.segments.push_back(seg);
  }
  return rep;
}

}  // namespace stacklab
