#include "stacklab/population.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace stacklab {

namespace {

constexpr int kAges = 100;

double age_weight(int a) { return 1.0 - 0.8 * a / 100.0; }

double age_total() {
  double s = 0.0;
  for (int a = 0; a < kAges; ++a) s += age_weight(a);
  return s;
}

int sample_age(RngStream& rng) {
  const double u = rng.uniform() * age_total();
  double c = 0.0;
  for (int a = 0; a < kAges; ++a) {
    c += age_weight(a);
    if (u < c) return a;
  }
  return kAges - 1;
}

int band(double v, const std::array<int, 2>& cuts) {
  if (v >= cuts[1]) return 2;
  if (v >= cuts[0]) return 1;
  return 0;
}

using Row = std::array<double, health::kDimension>;

/// Modifiable part of one chain: diet, alcohol, smoking and drug bits.
struct ChainState {
  double diet = 0.0;
  double alcohol = 0.0;
  std::uint16_t bits = 0;
};

ChainState pack(const Row& x) {
  ChainState s{x[health::kDiet], x[health::kAlcohol], 0};
  if (x[health::kSmoking] > 0.5) s.bits |= 1u;
  for (std::size_t d = 0; d < health::kDrugs; ++d) {
    if (x[health::kFirstDrug + d] > 0.5) s.bits |= static_cast<std::uint16_t>(1u << (d + 1));
  }
  return s;
}

void unpack(const ChainState& s, Row& x) {
  x[health::kDiet] = s.diet;
  x[health::kAlcohol] = s.alcohol;
  x[health::kSmoking] = (s.bits & 1u) ? 1.0 : 0.0;
  for (std::size_t d = 0; d < health::kDrugs; ++d) {
    x[health::kFirstDrug + d] = (s.bits >> (d + 1)) & 1u ? 1.0 : 0.0;
  }
}

template <class F>
void for_each_index(std::size_t n, Exec exec, F&& fn) {
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < n; ++i) fn(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

CohortSnapshot snapshot(std::size_t cohort, std::size_t epoch, double rho_eq,
                        const std::vector<std::size_t>& members, const std::vector<double>& risk) {
  CohortSnapshot s;
  s.cohort = cohort;
  s.epoch = epoch;
  s.rho_eq = rho_eq;
  s.members = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] != cohort) continue;
    ++s.members;
    sum += risk[i];
  }
  if (s.members == 0) return s;
  s.mean = sum / static_cast<double>(s.members);
  double ss = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] != cohort) continue;
    const double d = risk[i] - s.mean;
    ss += d * d;
  }
  s.variance = ss / static_cast<double>(s.members);
  return s;
}

}  // namespace

std::shared_ptr<const Schema> health_schema() {
  static const auto schema = [] {
    std::vector<Dimension> dims = {
        {"age", VarKind::kInteger, 0, 99},      {"sex", VarKind::kBinary, 0, 1},
        {"deprivation", VarKind::kInteger, 1, 5}, {"history", VarKind::kInteger, 1, 10},
        {"smoking", VarKind::kBinary, 0, 1},    {"diet", VarKind::kReal, 0, 10},
        {"alcohol", VarKind::kReal, 0, 10},
    };
    for (std::size_t d = 1; d <= health::kDrugs; ++d) {
      dims.push_back({"drug" + std::to_string(d), VarKind::kBinary, 0, 1});
    }
    return std::make_shared<const Schema>(std::move(dims));
  }();
  return schema;
}

HealthcareRules health_rules() {
  HealthcareRules r;
  r.continuous = {health::kDiet, health::kAlcohol};
  r.binary = {health::kSmoking};
  for (std::size_t d = 0; d < health::kDrugs; ++d) r.binary.push_back(health::kFirstDrug + d);
  r.lower = 0.0;
  r.upper = 10.0;
  return r;
}

std::vector<double> default_drug_prevalence() {
  std::vector<double> a(health::kDrugs);
  for (std::size_t d = 0; d < health::kDrugs; ++d) a[d] = 0.05 * static_cast<double>(d + 1);
  return a;
}

CovariateVector sample_individual(const std::vector<double>& drug_prevalence, RngStream& rng) {
  if (drug_prevalence.size() != health::kDrugs) {
    throw std::invalid_argument("sample_individual: expected 10 drug prevalences");
  }
  std::vector<double> x(health::kDimension);
  x[health::kAge] = sample_age(rng);
  x[health::kSex] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  x[health::kDeprivation] = 1.0 + static_cast<double>(rng.below(5));
  x[health::kHistory] = 1.0 + static_cast<double>(rng.below(10));
  x[health::kSmoking] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  x[health::kDiet] = rng.uniform(0.0, 10.0);
  x[health::kAlcohol] = rng.uniform(0.0, 10.0);
  for (std::size_t d = 0; d < health::kDrugs; ++d) {
    x[health::kFirstDrug + d] = rng.bernoulli(drug_prevalence[d]) ? 1.0 : 0.0;
  }
  return CovariateVector(health_schema(), std::move(x));
}

GroundTruthModel build_health_truth(RngStream& rng) {
  LogisticLink link;
  link.intercept = -3.32;
  link.beta = {5e-3, 0.25, 0.1, 0.05, 0.2, 0.1, 0.2};
  for (std::size_t d = 0; d < health::kDrugs; ++d) link.beta.push_back(rng.normal(0.0, 0.1));
  return GroundTruthModel(std::move(link));
}

std::array<int, 2> age_tercile_cuts() {
  const double total = age_total();
  std::array<int, 2> cuts{};
  for (int k = 1; k <= 2; ++k) {
    const double target = total * k / 3.0;
    double c = 0.0;
    int best = 1;
    double best_gap = HUGE_VAL;
    for (int a = 0; a < kAges; ++a) {
      c += age_weight(a);
      const double gap = std::fabs(c - target);
      if (gap < best_gap) {
        best_gap = gap;
        best = a + 1;
      }
    }
    cuts[static_cast<std::size_t>(k - 1)] = best;
  }
  return cuts;
}

std::size_t CohortSpec::cohort_of(std::span<const double> x) const {
  return static_cast<std::size_t>(band(x[health::kAge], age_cuts) * 3 +
                                  band(x[health::kHistory], history_cuts));
}

std::string CohortSpec::label(std::size_t cohort) const {
  const std::size_t a = cohort / 3;
  const std::size_t h = cohort % 3;
  const int alo = a == 0 ? 0 : age_cuts[a - 1];
  const int ahi = a == 2 ? 99 : age_cuts[a] - 1;
  const int hlo = h == 0 ? 1 : history_cuts[h - 1];
  const int hhi = h == 2 ? 10 : history_cuts[h] - 1;
  return "age " + std::to_string(alo) + "-" + std::to_string(ahi) + ", history " +
         std::to_string(hlo) + "-" + std::to_string(hhi);
}

void CohortSpec::validate() const {
  if (!(0 < age_cuts[0] && age_cuts[0] < age_cuts[1] && age_cuts[1] <= 99)) {
    throw std::invalid_argument("cohorts.age_cuts must satisfy 0 < c1 < c2 <= 99");
  }
  if (!(1 < history_cuts[0] && history_cuts[0] < history_cuts[1] && history_cuts[1] <= 10)) {
    throw std::invalid_argument("cohorts.history_cuts must satisfy 1 < c1 < c2 <= 10");
  }
  for (const auto& row : rho_eq) {
    for (double r : row) {
      if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("cohorts.rho_eq values must lie in (0,1)");
    }
  }
}

void HealthcareConfig::validate() const {
  if (individuals < 100) throw std::invalid_argument("individuals must be >= 100");
  if (truth_replicates == 0) throw std::invalid_argument("truth_replicates must be > 0");
  if (forest.n_trees == 0) throw std::invalid_argument("forest.trees must be > 0");
  if (drug_prevalence.size() != health::kDrugs) {
    throw std::invalid_argument("drug_prevalence must have 10 entries");
  }
  for (double a : drug_prevalence) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("drug_prevalence values must lie in (0,1)");
  }
  cohorts.validate();
}

double CohortSnapshot::distance() const { return std::fabs(mean - rho_eq); }

bool FairnessReport::all_variance_reduced() const {
  for (const auto& c : cohorts) {
    if (!c.empty && !c.variance_reduced()) return false;
  }
  return true;
}

bool FairnessReport::all_means_attracted() const {
  for (const auto& c : cohorts) {
    if (!c.empty && !c.mean_attracted()) return false;
  }
  return true;
}

HealthcareResult run_healthcare(const HealthcareConfig& config, std::uint64_t seed, Exec exec,
                                const std::function<void(const EpochSummary&)>& on_epoch) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RngStream root(seed);
  const std::size_t n = config.individuals;
  const std::size_t reps = config.truth_replicates;
  const std::size_t epochs = config.epochs;
  const std::size_t p = health::kDimension;

  RngStream truth_rng = root.derive(Purpose::kTruth);
  const GroundTruthModel truth = build_health_truth(truth_rng);
  const EpochLink f = truth.at(0);

  HealthcareResult out;
  std::vector<Row> x0(n);
  out.cohort.resize(n);
  for_each_index(n, exec, [&](std::size_t i) {
    RngStream rng = root.derive(Purpose::kPopulation, 0, i);
    const CovariateVector v = sample_individual(config.drug_prevalence, rng);
    std::copy(v.values().begin(), v.values().end(), x0[i].begin());
    out.cohort[i] = config.cohorts.cohort_of(x0[i]);
  });
  std::vector<double> rho_eq(n);
  for (std::size_t i = 0; i < n; ++i) rho_eq[i] = config.cohorts.rho_eq_of(out.cohort[i]);

  TrainingSet data;
  data.dimension = p;
  for (std::size_t i = 0; i < n; ++i) data.add(x0[i], 0);

  std::vector<ChainState> chains(n * reps);
  for (std::size_t i = 0; i < n; ++i) {
    const ChainState s = pack(x0[i]);
    std::fill(chains.begin() + static_cast<std::ptrdiff_t>(i * reps),
              chains.begin() + static_cast<std::ptrdiff_t>((i + 1) * reps), s);
  }
  // scores[i * (epochs + 1) + k] = rho_k(x_i)
  std::vector<double> scores(n * (epochs + 1), 0.0);
  std::vector<double> risk(n);
  std::vector<Row> realized(n);

  TrajectoryRecord& record = out.record;
  record.dimension = p;
  record.samples = std::min(config.tracked, n);

  for (std::size_t e = 0; e <= epochs; ++e) {
    for_each_index(n, exec, [&](std::size_t i) {
      Row x = x0[i];
      double sum = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        unpack(chains[i * reps + r], x);
        sum += f(x);
      }
      risk[i] = sum / static_cast<double>(reps);

      Row chi = x0[i];
      RngStream is = root.derive(Purpose::kIntervention, e, i);
      for (std::size_t k = 0; k < e; ++k) {
        healthcare_intervene(config.rules, scores[i * (epochs + 1) + k], rho_eq[i], chi, is);
      }
      realized[i] = chi;
      RngStream os = root.derive(Purpose::kOutcome, e, i);
      data.y[i] = os.bernoulli(f(chi)) ? 1 : 0;
    });
    data.epoch = e;

    const ForestScore forest = fit_forest(data, config.forest, root.derive(Purpose::kFit, e), exec);
    out.forest_oob_mse.push_back(forest.oob_mse);
    out.label_variance.push_back(forest.label_variance);
    for_each_index(n, exec, [&](std::size_t i) {
      const double oob = config.out_of_bag_scores ? forest.oob_prediction[i] : std::nan("");
      scores[i * (epochs + 1) + e] =
          clamp_probability(std::isnan(oob) ? forest.predict(x0[i]) : oob);
    });

    EpochSummary summary;
    summary.epoch = e;
    summary.training_rows = n;
    summary.stack_size = e;
    double positives = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      positives += data.y[i];
      mean += risk[i];
    }
    summary.population_outcome_rate = positives / static_cast<double>(n);
    summary.mean_rho_true = mean / static_cast<double>(n);
    record.epochs.push_back(summary);
    for (std::size_t i = 0; i < record.samples; ++i) {
      TrajectoryRow row;
      row.epoch = e;
      row.sample = i;
      row.rho_true = risk[i];
      row.rho_est = scores[i * (epochs + 1) + e];
      row.y = data.y[i];
      row.x_post.assign(realized[i].begin(), realized[i].end());
      record.rows.push_back(std::move(row));
    }
    for (std::size_t c = 0; c < 9; ++c) {
      out.fairness.timeline.push_back(
          snapshot(c, e, config.cohorts.rho_eq_of(c), out.cohort, risk));
    }
    if (e == 0) out.risk_pre = risk;
    if (e == epochs) out.risk_post = risk;
    if (on_epoch) on_epoch(summary);

    if (e == epochs) break;
    for_each_index(n, exec, [&](std::size_t i) {
      const double s = scores[i * (epochs + 1) + e];
      RngStream cs = root.derive(Purpose::kTrueChain, e, i);
      Row x = x0[i];
      for (std::size_t r = 0; r < reps; ++r) {
        ChainState& st = chains[i * reps + r];
        unpack(st, x);
        healthcare_intervene(config.rules, s, rho_eq[i], x, cs);
        st = pack(x);
      }
    });
  }

  for (std::size_t c = 0; c < 9; ++c) {
    CohortOutcome o;
    o.cohort = c;
    o.label = config.cohorts.label(c);
    o.rho_eq = config.cohorts.rho_eq_of(c);
    o.pre = out.fairness.timeline[c];
    o.post = out.fairness.timeline[epochs * 9 + c];
    o.members = o.pre.members;
    o.empty = o.members == 0;
    out.fairness.cohorts.push_back(o);
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace stacklab
