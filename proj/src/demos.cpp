#include "stacklab/demos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stacklab/ks.hpp"

namespace stacklab {

using nlohmann::ordered_json;

namespace {

constexpr double kRhoEq = 0.2;
constexpr std::size_t kBurnIn = 200;

std::size_t scaled(std::size_t n, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Coefficients from U(lo, hi)^3 and tracked starting points from N(0,1)^3.
struct S2Setup {
  LogisticLink link;
  std::vector<std::vector<double>> tracked;
};

S2Setup s2_setup(std::uint64_t seed, std::size_t tracked, double lo = 0.0, double hi = 1.0) {
  const RngStream root(seed);
  S2Setup s;
  RngStream tb = root.derive(Purpose::kTruth);
  s.link.beta = {tb.uniform(lo, hi), tb.uniform(lo, hi), tb.uniform(lo, hi)};
  for (std::size_t i = 0; i < tracked; ++i) {
    RngStream ts = root.derive(Purpose::kTracked, 0, i);
    s.tracked.push_back({ts.normal(), ts.normal(), ts.normal()});
  }
  return s;
}

InterventionModel make_g(InterventionModel::Kind kind, double rho_eq, double scale = 1.0) {
  InterventionModel g;
  g.kind = kind;
  g.rho_eq = rho_eq;
  g.scale = scale;
  return g;
}

/// gamma on a 50 x 50 (rho, x) grid with x ~ N(0,1)^3.
WellIntentionedReport s2_gamma(const EngineSpec& spec, std::uint64_t seed, const DemoOptions& o) {
  std::vector<double> rhos;
  for (std::size_t j = 0; j < 50; ++j) rhos.push_back(static_cast<double>(j) / 49.0);
  const RngStream root(seed);
  std::vector<std::vector<double>> pts;
  for (std::size_t k = 0; k < 50; ++k) {
    RngStream s = root.derive(Purpose::kProbe, 2, k);
    pts.push_back({s.normal(), s.normal(), s.normal()});
  }
  return verify_well_intentioned(spec.g, spec.truth, rhos, pts, scaled(2000, o.replicate_scale),
                                 root.derive(Purpose::kProbe, 4), o.exec);
}

ordered_json bounds_json(const LimitBounds& b) {
  return {{"lower", b.lower},
          {"upper", b.upper},
          {"method", b.method},
          {"probes", b.probes},
          {"rho_values", b.rhos},
          {"degenerate_lower", b.degenerate_lower},
          {"degenerate_upper", b.degenerate_upper}};
}

ordered_json intervals_json(const DriftIntervals& d) {
  return {{"I_rho", {d.rho.lower, d.rho.upper}},
          {"I_lim", {d.lim.lower, d.lim.upper}},
          {"alpha", d.alpha},
          {"gamma", d.gamma},
          {"clamped", d.clamped},
          {"probes", d.probes}};
}

void add_check(DemoResult& r, std::string name, bool ok, std::string detail) {
  r.checks.push_back({std::move(name), ok, std::move(detail)});
}

TrajectoryRecord run(const EngineSpec& spec, std::size_t epochs, std::uint64_t seed, Exec exec,
                     ScoreStack* stack) {
  return run_experiment(spec, epochs, seed, exec, {}, stack);
}

// --- individual demos ------------------------------------------------------

void demo_thm1(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const RngStream root(r.seed);
  const LimitBounds b = compute_limit_bounds(spec.truth, spec.g, {10000, 0, -4.0, 4.0, 1},
                                             root.derive(Purpose::kProbe, 1), true, o.exec);
  const auto c = check_trajectory_containment(r.record, b.lower, b.upper, kBurnIn, 0.01);
  const auto m = check_monotone_movement(r.record, kRhoEq, 0.01);
  r.report["bounds"] = bounds_json(b);
  r.report["containment"] = {{"burn_in", kBurnIn}, {"tolerance", 0.01},
                             {"min_fraction", c.min_fraction()}, {"outside", c.outside},
                             {"points", c.points}};
  r.report["monotone"] = {{"band", 0.01}, {"checked", m.checked}, {"violations", m.violations}};
  r.report["post_burn_in_variance"] = post_burn_in_variance(r.record, kBurnIn);
  add_check(r, "containment", c.min_fraction() == 1.0,
            "min fraction " + fmt(c.min_fraction()) + " in [" + fmt(b.lower) + ", " + fmt(b.upper) + "] +/- 0.01");
  add_check(r, "monotone", m.violations == 0,
            std::to_string(m.violations) + " of " + std::to_string(m.checked) + " steps moved away");
}

void demo_thm2(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const RngStream root(r.seed);
  const LimitBounds b = compute_limit_bounds(
      spec.truth, spec.g, {2000, 32, -4.0, 4.0, scaled(400, o.replicate_scale)},
      root.derive(Purpose::kProbe, 1), false, o.exec);
  const auto c = check_trajectory_containment(r.record, b.lower, b.upper, kBurnIn, 0.02);

  // Same seed, deterministic g: the reference for the variance comparison.
  EngineSpec det = spec;
  det.g = make_g(InterventionModel::Kind::kDeterministicCbrt, kRhoEq);
  const TrajectoryRecord ref = run(det, epochs, r.seed, o.exec, nullptr);
  const double v2 = post_burn_in_variance(r.record, kBurnIn);
  const double v1 = post_burn_in_variance(ref, kBurnIn);

  r.report["bounds"] = bounds_json(b);
  r.report["containment"] = {{"burn_in", kBurnIn}, {"tolerance", 0.02},
                             {"min_fraction", c.min_fraction()}, {"outside", c.outside},
                             {"points", c.points}};
  r.report["post_burn_in_variance"] = v2;
  r.report["deterministic_post_burn_in_variance"] = v1;
  add_check(r, "containment", c.min_fraction() == 1.0,
            "min fraction " + fmt(c.min_fraction()) + " in [" + fmt(b.lower) + ", " + fmt(b.upper) + "] +/- 0.02");
  add_check(r, "variance_exceeds_deterministic", v2 > v1, fmt(v2) + " vs " + fmt(v1));
}

void demo_thm3(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o,
               bool expect_convergence) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const std::size_t m = std::min<std::size_t>(1000, spec.truth_replicates);
  const std::size_t late = epochs / 2;
  std::vector<double> finals;
  ordered_json per_sample = ordered_json::array();
  for (std::size_t i = 0; i < spec.tracked.size(); ++i) {
    const KsConvergence k = ks_convergence(r.record, i, m);
    finals.push_back(k.final_distance());
    ordered_json pairs = ordered_json::array();
    for (const auto& p : k.pairs) pairs.push_back({{"epochs", {p.first, p.second}}, {"ks", p.distance}});
    per_sample.push_back({{"sample", i}, {"pairs", pairs}, {"converging", k.converging}});
  }
  const double d = finals.front();
  const auto below = static_cast<std::size_t>(
      std::count_if(finals.begin(), finals.end(), [](double v) { return v < 0.1; }));
  r.report["m"] = m;
  r.report["threshold"] = 0.1;
  r.report["final_pair"] = {late, epochs};
  r.report["ks_final_sample0"] = d;
  r.report["samples_below_threshold"] = below;
  r.report["samples"] = per_sample;
  if (expect_convergence) {
    add_check(r, "ks_below_threshold", d < 0.1,
              "KS(" + std::to_string(late) + ", " + std::to_string(epochs) + ") = " + fmt(d));
  } else {
    add_check(r, "ks_above_threshold", d > 0.1,
              "KS(" + std::to_string(late) + ", " + std::to_string(epochs) + ") = " + fmt(d));
  }
}

void demo_thm4(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const RngStream root(r.seed);
  const WellIntentionedReport wi = s2_gamma(spec, r.seed, o);
  std::vector<std::vector<double>> probes;
  for (std::size_t k = 0; k < 200; ++k) {
    RngStream s = root.derive(Purpose::kProbe, 3, k);
    probes.push_back({s.normal(), s.normal(), s.normal()});
  }
  const ErrorModelEstimate em = measure_error_model(
      spec.truth, spec.g, spec.population, spec.population_size, probes,
      scaled(200, o.replicate_scale), scaled(500, o.replicate_scale), root.derive(Purpose::kProbe, 5),
      0.05, o.exec);
  r.report["gamma"] = wi.gamma;
  r.report["well_intentioned_violations"] = wi.violations;
  r.report["delta"] = em.delta;
  r.report["lambda"] = em.lambda;
  add_check(r, "delta_range", em.delta >= 0.007 && em.delta <= 0.03, "delta = " + fmt(em.delta));
  add_check(r, "gamma_range", wi.gamma >= 0.5 && wi.gamma <= 2.0, "gamma = " + fmt(wi.gamma));
  if (!(wi.gamma > 0.0 && em.lambda > 0.0)) {
    add_check(r, "attraction", false, "gamma or lambda not positive; interval undefined");
    return;
  }
  const AttractionInterval iv = attraction_interval(kRhoEq, em.delta, wi.gamma, em.lambda);
  const std::vector<std::size_t> snaps{0, 1, 2, 3, 5, 8, 13};
  const AttractionReport ar =
      attraction_check(spec, r.seed, iv, snaps, scaled(200, o.replicate_scale), 0.05, o.exec);
  std::size_t large = 0;
  for (const auto& p : ar.probes) large += p.large_enough;
  r.report["interval"] = {iv.i1, iv.i2};
  r.report["attraction"] = {{"snapshots", snaps},          {"replicates", ar.replicates},
                            {"min_outside", ar.min_outside}, {"probes", ar.probes.size()},
                            {"toward", ar.toward_count()},   {"share", ar.toward_share()},
                            {"magnitude_ok", large}};
  add_check(r, "attraction", !ar.probes.empty() && ar.toward_share() >= 0.95,
            std::to_string(ar.toward_count()) + " of " + std::to_string(ar.probes.size()) +
                " probes move toward [" + fmt(iv.i1) + ", " + fmt(iv.i2) + "]");
}

void demo_thm5(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const RngStream root(r.seed);
  const WellIntentionedReport wi = s2_gamma(spec, r.seed, o);
  const double alpha = spec.truth.drift().alpha;
  const DriftIntervals d =
      drift_intervals(alpha, std::max(wi.gamma, 1e-6), spec.truth, spec.g,
                      {10000, 0, -4.0, 4.0, scaled(500, o.replicate_scale)},
                      root.derive(Purpose::kProbe, 1), o.exec);
  const auto c = check_drift_conclusions(r.record, d, kBurnIn, 0.02, 0.02);
  r.report["gamma"] = wi.gamma;
  r.report["intervals"] = intervals_json(d);
  r.report["conclusions"] = c.conclusion;
  add_check(r, "drift_conclusion", c.satisfied() == c.conclusion.size(),
            std::to_string(c.satisfied()) + " of " + std::to_string(c.conclusion.size()) +
                " samples in I_lim [" + fmt(d.lim.lower) + ", " + fmt(d.lim.upper) +
                "] +/- 0.02 or near an end of I_rho");
}

void demo_cor1(DemoResult& r, const EngineSpec& spec, std::size_t epochs, const DemoOptions& o) {
  r.record = run(spec, epochs, r.seed, o.exec, &r.stack);
  const RngStream root(r.seed);
  const auto& cps = spec.truth.drift().change_points;
  std::vector<DriftIntervals> per;
  ordered_json segs = ordered_json::array();
  std::vector<std::size_t> starts{0};
  starts.insert(starts.end(), cps.begin(), cps.end());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    per.push_back(drift_intervals(0.0, 1.0, spec.truth, spec.g, {10000, 0, -5.0, 5.0, 1},
                                  root.derive(Purpose::kProbe, 1, s), o.exec, starts[s]));
  }
  const RecoveryReport rec = shock_recovery(r.record, cps, per, 0.05);
  for (std::size_t s = 0; s < rec.segments.size(); ++s) {
    const auto& g = rec.segments[s];
    segs.push_back({{"begin", g.begin},
                    {"end", g.end},
                    {"beta", spec.truth.link_at(g.begin).beta},
                    {"I_lim", {per[s].lim.lower, per[s].lim.upper}},
                    {"recovered", g.recovered},
                    {"epochs_to_recover", g.epochs_to_recover}});
  }
  r.report["change_points"] = cps;
  r.report["epsilon0"] = 0.05;
  r.report["segments"] = segs;
  std::size_t ok = 0;
  for (const auto& g : rec.segments) ok += g.recovered;
  add_check(r, "recovery", rec.all_recovered() && rec.segments.size() == cps.size() + 1,
            std::to_string(ok) + " of " + std::to_string(rec.segments.size()) + " segments recovered");
}

}  // namespace

bool DemoResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const DemoCheck& c) { return c.passed; });
}

const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> names{"thm1", "thm2", "thm3-converge", "thm3-diverge",
                                              "thm4", "thm5", "cor1"};
  return names;
}

bool is_demo(const std::string& name) {
  const auto& n = demo_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::uint64_t default_demo_seed(const std::string& name) {
  if (name == "thm1" || name == "thm2") return 11;
  if (name == "thm3-converge" || name == "thm3-diverge") return 3;
  if (name == "thm4") return 4;
  if (name == "thm5") return 5;
  if (name == "cor1") return 6;
  throw std::invalid_argument("unknown demo '" + name + "'");
}

std::size_t demo_epochs(const std::string& name, const DemoOptions& o) {
  if (o.epochs) return o.epochs;
  if (name == "thm1" || name == "thm2" || name == "thm5") return 999;
  if (name == "thm3-converge" || name == "thm3-diverge") return 1000;
  if (name == "thm4") return 100;
  if (name == "cor1") return 199;
  throw std::invalid_argument("unknown demo '" + name + "'");
}

EngineSpec demo_spec(const std::string& name, std::uint64_t seed, const DemoOptions& o) {
  if (!is_demo(name)) throw std::invalid_argument("unknown demo '" + name + "'");
  using K = InterventionModel::Kind;
  EngineSpec spec;
  spec.estimator = RiskScore::Kind::kMcEmpirical;
  spec.score_replicates = scaled(1000, o.replicate_scale);
  spec.truth_replicates = scaled(2000, o.replicate_scale);

  if (name == "cor1") {
    const S2Setup s = s2_setup(seed, o.tracked, -2.0, 2.0);
    DriftSpec drift;
    drift.kind = DriftSpec::Kind::kShocks;
    drift.change_points = evenly_spaced_change_points(demo_epochs(name, o) + 1, 3);
    RngStream shocks = RngStream(seed).derive(Purpose::kShock);
    auto segments = sample_shock_sequence(drift, 3, 0.0, shocks);
    GroundTruthModel truth(segments.front(), drift, seed);
    truth.set_segments(std::move(segments));
    spec.truth = std::move(truth);
    spec.g = make_g(K::kClampedSignedCbrt, kRhoEq);
    spec.g.sign_follows_truth = true;
    spec.clamp = {true, -5.0, 5.0};
    spec.tracked = s.tracked;
    return spec;
  }

  const S2Setup s = s2_setup(seed, o.tracked);
  spec.tracked = s.tracked;
  spec.truth = GroundTruthModel(s.link);
  if (name == "thm1") {
    spec.g = make_g(K::kDeterministicCbrt, kRhoEq);
  } else if (name == "thm2") {
    spec.g = make_g(K::kUniformNoiseCbrt, kRhoEq);
  } else if (name == "thm3-converge" || name == "thm3-diverge") {
    spec.g = make_g(name == "thm3-converge" ? K::kUniformNoiseLinear : K::kUniformNoiseCbrt, 0.5, 0.1);
    spec.truth_replicates = scaled(1000, o.replicate_scale);
    const std::size_t e = demo_epochs(name, o);
    spec.trace_epochs = {e / 8, e / 4, e / 2, e};
  } else if (name == "thm4") {
    spec.g = make_g(K::kUniformNoiseCbrt, kRhoEq);
    spec.estimator = RiskScore::Kind::kLogistic;
    spec.truth_replicates = scaled(1000, o.replicate_scale);
    spec.population = {CovariateSampler::Kind::kNormal, 0.0, 1.0, 3};
    spec.population_size = 100;
  } else if (name == "thm5") {
    spec.g = make_g(K::kUniformNoiseCbrt, kRhoEq);
    DriftSpec drift;
    drift.kind = DriftSpec::Kind::kBounded;
    drift.alpha = 1.0 / 200.0;
    spec.truth = GroundTruthModel(s.link, drift, RngStream(seed).derive(Purpose::kDrift).key());
  }
  return spec;
}

DemoResult run_demo(const std::string& name, const DemoOptions& options) {
  if (!is_demo(name)) throw std::invalid_argument("unknown demo '" + name + "'");
  DemoResult r;
  r.name = name;
  r.seed = options.seed ? options.seed : default_demo_seed(name);
  const EngineSpec spec = demo_spec(name, r.seed, options);
  const std::size_t epochs = demo_epochs(name, options);
  r.report["demo"] = name;
  r.report["seed"] = r.seed;
  r.report["epochs"] = epochs;
  r.report["tracked"] = spec.tracked.size();
  r.report["rho_eq"] = spec.g.rho_eq;
  r.report["intervention"] = to_string(spec.g.kind);
  r.report["estimator"] = to_string(spec.estimator);
  r.report["beta"] = spec.truth.base().beta;

  if (name == "thm1") demo_thm1(r, spec, epochs, options);
  else if (name == "thm2") demo_thm2(r, spec, epochs, options);
  else if (name == "thm3-converge") demo_thm3(r, spec, epochs, options, true);
  else if (name == "thm3-diverge") demo_thm3(r, spec, epochs, options, false);
  else if (name == "thm4") demo_thm4(r, spec, epochs, options);
  else if (name == "thm5") demo_thm5(r, spec, epochs, options);
  else demo_cor1(r, spec, epochs, options);

  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  r.report["checks"] = checks;
  r.report["passed"] = r.passed();
  return r;
}

}  // namespace stacklab
