// Prints one PASS/FAIL line per acceptance criterion. Exits non-zero when a
// criterion fails that is not listed in --expect-fail, or when anything throws.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stacklab/artifacts.hpp"
#include "stacklab/demos.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/estimators.hpp"
#include "stacklab/population.hpp"

using namespace stacklab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

struct Outcome {
  int id = 0;
  bool passed = false;
  std::string detail;
};

struct TimedDemo {
  DemoResult result;
  double seconds = 0.0;
};

TimedDemo timed_demo(const std::string& name, std::uint64_t seed = 0) {
  DemoOptions o;
  o.seed = seed;
  const auto t0 = Clock::now();
  TimedDemo d{run_demo(name, o), 0.0};
  d.seconds = seconds_since(t0);
  return d;
}

std::string check_summary(const DemoResult& r) {
  std::string s;
  for (const auto& c : r.checks) {
    s += (s.empty() ? "" : "; ") + c.name + (c.passed ? " ok" : " FAILED") + " (" + c.detail + ")";
  }
  return s;
}

bool check_passed(const DemoResult& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return c.passed;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome demo_criterion(int id, const TimedDemo& d, double limit_seconds) {
  const bool fast = d.seconds < limit_seconds;
  return {id, d.result.passed() && fast,
          d.result.name + " seed " + std::to_string(d.result.seed) + ": " + check_summary(d.result) +
              "; runtime " + fmt(d.seconds, 3) + " s (limit " + fmt(limit_seconds, 3) + " s)"};
}

Outcome criterion3(const std::vector<std::uint64_t>& seeds) {
  bool all = true;
  std::string detail;
  for (std::uint64_t s : seeds) {
    const auto conv = timed_demo("thm3-converge", s);
    const auto div = timed_demo("thm3-diverge", s);
    const double kc = conv.result.report["ks_final_sample0"].get<double>();
    const double kd = div.result.report["ks_final_sample0"].get<double>();
    const bool ok = kc < 0.1 && kd > 0.1;
    all = all && ok;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(s) + " converge " +
              fmt(kc, 3) + (kc < 0.1 ? " ok" : " FAILED") + ", diverge " + fmt(kd, 3) +
              (kd > 0.1 ? " ok" : " FAILED");
  }
  return {3, all, "KS(500, 1000) at m = 1000: " + detail};
}

std::string cohort_summary(const HealthcareResult& r) {
  std::string s;
  for (const auto& c : r.fairness.cohorts) {
    if (c.variance_reduced() && c.mean_attracted()) continue;
    s += (s.empty() ? "" : "; ") + c.label + " (rho_eq " + fmt(c.rho_eq, 3) + "): mean " +
         fmt(c.pre.mean) + " -> " + fmt(c.post.mean) + ", var " + fmt(c.pre.variance) + " -> " +
         fmt(c.post.variance);
  }
  return s.empty() ? "all 9 cohorts pass" : s;
}

Outcome criterion7(std::uint64_t seed) {
  HealthcareConfig full;
  const auto t0 = Clock::now();
  const auto big = run_healthcare(full, seed);
  const double big_s = seconds_since(t0);

  HealthcareConfig smoke;
  smoke.individuals = 500;
  smoke.forest.n_trees = 50;
  const auto t1 = Clock::now();
  const auto small = run_healthcare(smoke, seed);
  const double small_s = seconds_since(t1);

  const bool big_ok = big.fairness.all_variance_reduced() && big.fairness.all_means_attracted();
  const bool small_ok = small.fairness.all_variance_reduced() && small.fairness.all_means_attracted();
  const bool ok = big_ok && small_ok && big_s < 600.0 && small_s < 30.0;
  return {7, ok,
          "seed " + std::to_string(seed) + "; full n=10000, 500 trees: " + cohort_summary(big) + ", " +
              fmt(big_s, 3) + " s; smoke n=500, 50 trees: " + cohort_summary(small) + ", " +
              fmt(small_s, 3) + " s"};
}

Outcome criterion8() {
  // Oracle scores, deterministic cube-root response, the S2 logistic truth.
  DemoOptions o;
  EngineSpec base = demo_spec("thm1", default_demo_seed("thm1"), o);
  base.estimator = RiskScore::Kind::kOracle;
  const double req = base.g.rho_eq;

  EngineSpec naive = base;
  naive.policy.kind = UpdatePolicy::Kind::kNaive;
  Engine en(naive, 1);
  EngineSpec stacked = base;
  stacked.policy.kind = UpdatePolicy::Kind::kStacked;
  Engine es(stacked, 1);
  TrajectoryRecord rn, rs;
  en.run_epoch(rn);
  en.run_epoch(rn);
  es.run_epoch(rs);
  es.run_epoch(rs);

  std::size_t probes = 0, biased = 0, monotone = 0;
  for (std::size_t i = 0; i < base.tracked.size(); ++i) {
    const double fx = base.truth.eval(0, base.tracked[i]);
    if (!(fx > req)) continue;
    ++probes;
    if (en.tracked_scores(i).back() < fx) ++biased;
    const auto series = rs.series(i);
    if (series.size() == 2 && series[1] < series[0]) ++monotone;
  }
  const bool ok = probes > 0 && biased == probes && monotone == probes;
  return {8, ok,
          std::to_string(probes) + " probes with f(x) > rho_eq: naive epoch-1 score below f(x) at " +
              std::to_string(biased) + ", stacked true risk fell at " + std::to_string(monotone)};
}

Outcome criterion9(const std::vector<TimedDemo>& first, const fs::path& root) {
  std::size_t files = 0, mismatched = 0;
  std::string bad;
  for (const auto& d : first) {
    DemoOptions o;
    o.seed = d.result.seed;
    const DemoResult again = run_demo(d.result.name, o);
    const auto a = write_demo_outputs(d.result, root / "a" / d.result.name, true);
    const auto b = write_demo_outputs(again, root / "b" / d.result.name, true);
    if (a.size() != b.size()) {
      ++mismatched;
      bad += " " + d.result.name + "(file list)";
      continue;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      ++files;
      if (slurp(a[k]) != slurp(b[k])) {
        ++mismatched;
        bad += " " + d.result.name + "/" + a[k].filename().string();
      }
    }
  }
  return {9, mismatched == 0 && files > 0,
          std::to_string(files) + " CSV, JSON, JSONL and SVG files compared across " +
              std::to_string(first.size()) + " demos; " + std::to_string(mismatched) + " differ" + bad};
}

Outcome criterion10() {
  std::string detail;
  bool ok = true;

  // Logistic recovery at n = 1e5.
  {
    LogisticLink link{{0.8, -0.5, 0.3}, -0.4};
    const GroundTruthModel f(link);
    TrainingSet d;
    d.dimension = 3;
    RngStream rng(101);
    std::vector<double> x(3);
    for (int i = 0; i < 100000; ++i) {
      for (auto& v : x) v = rng.normal();
      d.add(x, draw_outcome(f, 0, x, rng).y);
    }
    const auto fit = fit_logistic(d);
    double worst = std::fabs(fit.score.coef[0] - link.intercept);
    for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, std::fabs(fit.score.coef[j + 1] - link.beta[j]));
    ok = ok && worst < 0.05;
    detail += "logistic max |coef error| " + fmt(worst, 3);
  }

  // Forest on constant labels.
  {
    TrainingSet d;
    d.dimension = 4;
    RngStream rng(102);
    std::vector<double> x(4);
    for (int i = 0; i < 1000; ++i) {
      for (auto& v : x) v = rng.normal();
      d.add(x, 1);
    }
    ForestOptions opt;
    opt.n_trees = 50;
    const RiskScore s = make_forest_score(d, opt, RngStream(103));
    bool exact = true;
    for (int i = 0; i < 1000; ++i) {
      for (auto& v : x) v = rng.normal(0.0, 3.0);
      exact = exact && predict(s, x) == 1.0;
    }
    ok = ok && exact;
    detail += std::string("; forest constant labels ") + (exact ? "exact" : "NOT exact");
  }

  // mc-empirical against the analytic oracle.
  {
    DemoOptions o;
    const EngineSpec spec = demo_spec("thm1", default_demo_seed("thm1"), o);
    auto ctx = std::make_shared<OracleContext>();
    ctx->truth = spec.truth;
    ctx->g = spec.g;
    ctx->stream = RngStream(104);
    std::size_t compared = 0, outside = 0;
    for (std::size_t depth : {0u, 1u, 5u, 25u}) {
      const RiskScore emp = make_oracle_score(ctx, depth, 3, 1000, true);
      const RiskScore orc = make_oracle_score(ctx, depth, 3, 1, false);
      for (const auto& x : spec.tracked) {
        ++compared;
        // Deterministic chains: the Monte-Carlo band has zero width.
        if (predict(emp, x) != predict(orc, x)) ++outside;
      }
    }
    ok = ok && outside == 0;
    detail += "; mc-empirical vs oracle on deterministic chains: " + std::to_string(outside) + " of " +
              std::to_string(compared) + " outside a zero-width band";

    // Stochastic response, depth one: compare against an independent chain average.
    ctx->g = spec.g;
    ctx->g.kind = InterventionModel::Kind::kUniformNoiseCbrt;
    const RiskScore emp = make_oracle_score(ctx, 1, 3, 1000, true);
    std::size_t checked = 0, miss = 0;
    for (std::size_t i = 0; i < spec.tracked.size(); ++i) {
      const auto& x = spec.tracked[i];
      const double s0 = spec.truth.eval(0, x);
      RngStream rng = RngStream(105).derive(Purpose::kUser, 0, i);
      const int n = 100000;
      double sum = 0.0, sum2 = 0.0;
      for (int k = 0; k < n; ++k) {
        std::vector<double> v = x;
        ctx->g.apply_inplace(s0, v, rng);
        const double p = spec.truth.eval(0, v);
        sum += p;
        sum2 += p * p;
      }
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
      const double band = 3.0 * sd * std::sqrt(1.0 / 1000 + 1.0 / n);
      ++checked;
      if (std::fabs(predict(emp, x) - mean) > band) ++miss;
    }
    detail += "; stochastic depth 1: " + std::to_string(miss) + " of " + std::to_string(checked) +
              " outside 3 sigma (informational)";
  }
  return {10, ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stacklab acceptance criteria"};
  std::vector<int> expect_fail;
  std::string out = (fs::temp_directory_path() / "stacklab_acceptance").string();
  std::uint64_t healthcare_seed = 1;
  std::vector<std::uint64_t> ks_seeds{1, 2, 3, 4, 5};
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--out", out, "scratch directory for the determinism check");
  app.add_option("--healthcare-seed", healthcare_seed, "seed for criterion 7");
  app.add_option("--ks-seeds", ks_seeds, "seeds for criterion 3")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());

  std::vector<Outcome> results;
  auto report = [&](Outcome o) {
    std::cout << "criterion " << o.id << ": " << (o.passed ? "PASS" : "FAIL") << " - " << o.detail
              << std::endl;
    results.push_back(std::move(o));
  };

  try {
    fs::remove_all(out);
    std::vector<TimedDemo> demos;
    demos.push_back(timed_demo("thm1"));
    report(demo_criterion(1, demos.back(), 30.0));
    demos.push_back(timed_demo("thm2"));
    report(demo_criterion(2, demos.back(), 120.0));
    report(criterion3(ks_seeds));
    demos.push_back(timed_demo("thm4"));
    report(demo_criterion(4, demos.back(), 600.0));
    demos.push_back(timed_demo("thm5"));
    report(demo_criterion(5, demos.back(), 600.0));
    demos.push_back(timed_demo("cor1"));
    report(demo_criterion(6, demos.back(), 600.0));
    report(criterion7(healthcare_seed));
    report(criterion8());
    demos.push_back(timed_demo("thm3-converge"));
    demos.push_back(timed_demo("thm3-diverge"));
    report(criterion9(demos, out));
    report(criterion10());
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 1;
  }

  int unexpected = 0;
  for (const auto& o : results) {
    if (!o.passed && !expected.count(o.id)) ++unexpected;
    if (o.passed && expected.count(o.id)) {
      std::cout << "note: criterion " << o.id << " passed although listed as an expected failure" << std::endl;
    }
  }
  const auto passed = std::count_if(results.begin(), results.end(), [](const Outcome& o) { return o.passed; });
  std::cout << passed << " of " << results.size() << " criteria pass; " << unexpected
            << " unexpected failure(s)" << std::endl;
  return unexpected == 0 ? 0 : 1;
}
