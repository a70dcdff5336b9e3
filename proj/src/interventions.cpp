#include "stacklab/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stacklab {

namespace {

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("intervention: rho must lie in [0,1]");
  }
}

}  // namespace

bool InterventionModel::stochastic() const {
  switch (kind) {
    case Kind::kUniformNoiseCbrt:
    case Kind::kUniformNoiseLinear:
    case Kind::kHealthcare:
      return true;
    default:
      return false;
  }
}

void InterventionModel::apply_inplace(double rho, std::span<double> x, RngStream& rng) const {
  const double req = rho_eq_for(x);
  const double d = rho - req;
  switch (kind) {
    case Kind::kIdentity:
      return;
    case Kind::kDeterministicCbrt: {
      const double step = scale * signed_cbrt(d);
      for (auto& v : x) v -= step;
      return;
    }
    case Kind::kUniformNoiseCbrt: {
      // One U(-1/2, 1) draw shared by every coordinate.
      const double step = scale * signed_cbrt(d) * rng.uniform(-0.5, 1.0);
      for (auto& v : x) v -= step;
      return;
    }
    case Kind::kUniformNoiseLinear: {
      const double step = scale * d * rng.uniform(-0.5, 1.0);
      for (auto& v : x) v -= step;
      return;
    }
    case Kind::kClampedSignedCbrt: {
      const double step = scale * signed_cbrt(d);
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double s = j < sign.size() ? (sign[j] > 0 ? 1.0 : (sign[j] < 0 ? -1.0 : 0.0)) : 1.0;
        x[j] = std::clamp(x[j] - s * step, clamp_lower, clamp_upper);
      }
      return;
    }
    case Kind::kHealthcare:
      healthcare_intervene(rules, rho, req, x, rng);
      return;
  }
}

InterventionModel InterventionModel::at_epoch(const GroundTruthModel& truth,
                                              std::size_t epoch) const {
  InterventionModel g = *this;
  if (sign_follows_truth) {
    const auto& beta = truth.link_at(epoch).beta;
    g.sign.assign(beta.size(), 1.0);
    for (std::size_t j = 0; j < beta.size(); ++j) g.sign[j] = beta[j] < 0 ? -1.0 : 1.0;
  }
  return g;
}

std::string to_string(InterventionModel::Kind kind) {
  using K = InterventionModel::Kind;
  switch (kind) {
    case K::kIdentity: return "identity";
    case K::kDeterministicCbrt: return "deterministic-cbrt";
    case K::kUniformNoiseCbrt: return "uniform-noise-cbrt";
    case K::kUniformNoiseLinear: return "uniform-noise-linear";
    case K::kClampedSignedCbrt: return "clamped-signed-cbrt";
    case K::kHealthcare: return "healthcare";
  }
  return "unknown";
}

InterventionModel::Kind intervention_kind_from_string(const std::string& name) {
  using K = InterventionModel::Kind;
  for (K k : {K::kIdentity, K::kDeterministicCbrt, K::kUniformNoiseCbrt, K::kUniformNoiseLinear,
              K::kClampedSignedCbrt, K::kHealthcare}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown intervention kind '" + name + "'");
}

CovariateVector apply_intervention(const InterventionModel& g, double rho, const CovariateVector& x,
                                   RngStream& rng) {
  check_rho(rho);
  std::vector<double> v(x.values().begin(), x.values().end());
  g.apply_inplace(rho, v, rng);
  return x.with_values(std::move(v));
}

double healthcare_binary_keep_probability(double rho, double rho_eq, int x) {
  if (rho > rho_eq) {
    return x == 1 ? 2.0 * (1.0 - logistic(0.5 * (rho - rho_eq))) : 0.0;
  }
  return x == 1 ? 1.0 : 2.0 * logistic(0.5 * (rho_eq - rho)) - 1.0;
}

void healthcare_intervene(const HealthcareRules& rules, double rho, double rho_eq,
                          std::span<double> x, RngStream& rng) {
  const double d = rho - rho_eq;
  for (std::size_t j : rules.continuous) {
    const double a = x[j] - rules.down * d;
    const double b = x[j] + rules.up * d;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double v = lo == hi ? lo : rng.uniform(lo, hi);
    x[j] = std::clamp(v, rules.lower, rules.upper);
  }
  for (std::size_t j : rules.binary) {
    const double p = healthcare_binary_keep_probability(rho, rho_eq, x[j] > 0.5 ? 1 : 0);
    if (p <= 0.0) {
      x[j] = 0.0;
    } else if (p >= 1.0) {
      x[j] = 1.0;
    } else {
      x[j] = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
}

CovariateVector healthcare_intervene(const HealthcareRules& rules, double rho, double rho_eq,
                                     const CovariateVector& x, RngStream& rng) {
  check_rho(rho);
  std::vector<double> v(x.values().begin(), x.values().end());
  healthcare_intervene(rules, rho, rho_eq, v, rng);
  return x.with_values(std::move(v));
}

WellIntentionedReport verify_well_intentioned(const InterventionModel& g,
                                              const GroundTruthModel& truth,
                                              std::span<const double> rhos,
                                              const std::vector<std::vector<double>>& points,
                                              std::size_t replicates, const RngStream& rng,
                                              Exec exec, std::size_t epoch) {
  if (rhos.empty() || points.empty()) throw std::invalid_argument("verify_well_intentioned: empty grid");
  if (replicates == 0) throw std::invalid_argument("verify_well_intentioned: replicates must be >= 1");

  const InterventionModel ge = g.at_epoch(truth, epoch);
  const LogisticLink& link = truth.link_at(epoch);
  const std::size_t reps = ge.stochastic() ? replicates : 1;
  const std::size_t n_rho = rhos.size();
  const std::size_t total = n_rho * points.size();

  WellIntentionedReport report;
  report.low_confidence = ge.stochastic() && replicates < 100;
  report.probes.resize(total);

  auto probe = [&](std::size_t idx) {
    const std::size_t k = idx / n_rho;
    const double rho = rhos[idx % n_rho];
    const auto& x = points[k];
    RngStream s = rng.derive(Purpose::kProbe, k, idx % n_rho);
    std::vector<double> buf(x.size());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      std::copy(x.begin(), x.end(), buf.begin());
      ge.apply_inplace(rho, buf, s);
      const double p = clamp_probability(link(buf));
      sum += p;
      sum2 += p * p;
    }
    WellIntentionedProbe pr;
    pr.rho = rho;
    pr.point = k;
    pr.f_before = clamp_probability(link(x));
    pr.f_after = sum / static_cast<double>(reps);
    if (reps > 1) {
      const double var = std::max(0.0, sum2 / reps - pr.f_after * pr.f_after);
      pr.f_after_se = std::sqrt(var / static_cast<double>(reps - 1));
    }
    pr.movement = ge.q(pr.f_after) - ge.q(pr.f_before);
    report.probes[idx] = pr;
  };

  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < total; ++i) probe(i);
  } else {
    for (std::size_t i = 0; i < total; ++i) probe(i);
  }

  double gamma = HUGE_VAL;
  for (auto& pr : report.probes) {
    const double req = ge.rho_eq_for(points[pr.point]);
    const double d = pr.rho - req;
    if (d == 0.0) {
      pr.violation = std::fabs(pr.f_after - pr.f_before) > 3.0 * pr.f_after_se + 1e-12;
    } else {
      const double toward = d > 0 ? -pr.movement : pr.movement;
      pr.violation = !(toward > 0.0);
      gamma = std::min(gamma, toward / std::fabs(d));
    }
    if (pr.violation) ++report.violations;
  }
  report.gamma = std::isfinite(gamma) ? std::max(0.0, gamma) : 0.0;
  return report;
}

DisplacementMoments displacement_moments(const InterventionModel& g, double rho,
                                         std::span<const double> x, std::size_t replicates,
                                         RngStream rng) {
  std::vector<double> buf(x.size());
  double s = 0.0, s2 = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    std::copy(x.begin(), x.end(), buf.begin());
    g.apply_inplace(rho, buf, rng);
    const double z = std::fabs(buf[0] - x[0]);
    s += z;
    s2 += z * z;
  }
  DisplacementMoments m;
  const double n = static_cast<double>(replicates);
  m.mean_abs = s / n;
  m.var_abs = std::max(0.0, s2 / n - m.mean_abs * m.mean_abs);
  return m;
}

}  // namespace stacklab
