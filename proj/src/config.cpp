#include "stacklab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace stacklab {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

/// Reads one JSON object, remembering which keys were consumed so that
/// close() can reject the rest.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return join(path_, key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double real(const std::string& key, double def, double lo = -HUGE_VAL, double hi = HUGE_VAL,
              bool open = false) {
    const json* v = raw(key);
    if (!v) return def;
    return check_real(*v, at(key), lo, hi, open);
  }

  std::uint64_t count(const std::string& key, std::uint64_t def, std::uint64_t lo = 0,
                      std::uint64_t hi = std::numeric_limits<std::uint64_t>::max()) {
    const json* v = raw(key);
    if (!v) return def;
    return check_count(*v, at(key), lo, hi);
  }

  bool flag(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> reals(const std::string& key, std::vector<double> def,
                            double lo = -HUGE_VAL, double hi = HUGE_VAL, bool open = false) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      out.push_back(check_real((*v)[i], join(at(key), i), lo, hi, open));
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      out.push_back(check_count((*v)[i], join(at(key), i), 0,
                                std::numeric_limits<std::uint64_t>::max()));
    }
    return out;
  }

  void close() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

  static double check_real(const json& v, const std::string& path, double lo, double hi,
                           bool open) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    const bool ok = open ? (x > lo && x < hi) : (x >= lo && x <= hi);
    if (!std::isfinite(x) || !ok) {
      std::ostringstream os;
      os << "value " << x << " outside " << (open ? "(" : "[") << lo << ", " << hi
         << (open ? ")" : "]");
      throw ConfigError(path, os.str());
    }
    return x;
  }

  static std::uint64_t check_count(const json& v, const std::string& path, std::uint64_t lo,
                                   std::uint64_t hi) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(path, "expected a non-negative integer");
    }
    const std::uint64_t x = v.get<std::uint64_t>();
    if (x < lo || x > hi) {
      throw ConfigError(path, "value " + std::to_string(x) + " outside [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]");
    }
    return x;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check_version(Obj& o) {
  const std::uint64_t v = o.count("version", kConfigVersion);
  if (v != static_cast<std::uint64_t>(kConfigVersion)) {
    throw ConfigError(o.at("version"), "unsupported version " + std::to_string(v));
  }
}

OutputConfig parse_output(Obj& parent) {
  OutputConfig out;
  const json* v = parent.raw("output");
  if (!v) return out;
  Obj o(*v, parent.at("output"));
  out.directory = o.text("directory", out.directory.string());
  if (out.directory.empty()) throw ConfigError(o.at("directory"), "must not be empty");
  out.charts = o.flag("charts", out.charts);
  o.close();
  return out;
}

CovariateSampler parse_sampler(const json& j, const std::string& path, std::size_t dimension) {
  Obj o(j, path);
  CovariateSampler s;
  s.dimension = dimension;
  const std::string kind = o.text("kind", "normal");
  if (kind == "normal") {
    s.kind = CovariateSampler::Kind::kNormal;
    s.a = o.real("mean", 0.0);
    s.b = o.real("sd", 1.0, 0.0, HUGE_VAL, true);
  } else if (kind == "uniform") {
    s.kind = CovariateSampler::Kind::kUniform;
    s.a = o.real("lower", 0.0);
    s.b = o.real("upper", 1.0);
    if (!(s.b > s.a)) throw ConfigError(o.at("upper"), "must exceed lower");
  } else {
    throw ConfigError(o.at("kind"), "expected 'normal' or 'uniform', got '" + kind + "'");
  }
  o.close();
  return s;
}

std::vector<double> parse_range(Obj& o, const std::string& key, std::vector<double> def) {
  auto r = o.reals(key, std::move(def));
  if (r.size() != 2 || !(r[0] < r[1])) {
    throw ConfigError(o.at(key), "expected [lower, upper] with lower < upper");
  }
  return r;
}

ForestOptions parse_forest(const json& j, const std::string& path, ForestOptions f) {
  Obj o(j, path);
  f.n_trees = o.count("trees", f.n_trees, 1, 100000);
  f.max_depth = o.count("max_depth", f.max_depth, 1, 64);
  f.min_leaf = o.count("min_leaf", f.min_leaf, 1);
  f.features_per_split = o.count("features_per_split", f.features_per_split);
  f.max_bins = o.count("max_bins", f.max_bins, 2, 65536);
  f.bootstrap = o.flag("bootstrap", f.bootstrap);
  o.close();
  return f;
}

template <class E, class F>
E parse_enum(Obj& o, const std::string& key, const std::string& def, F&& from_string) {
  const std::string name = o.text(key, def);
  try {
    return from_string(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(o.at(key), e.what());
  }
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  Obj root(j, "");
  check_version(root);
  ExperimentConfig c;
  c.name = root.text("name", c.name);
  c.seed = root.count("seed", c.seed);
  c.epochs = root.count("epochs", c.epochs, 0, 1000000);
  EngineSpec& spec = c.spec;
  const RngStream rng(c.seed);

  // truth
  std::size_t dimension = 3;
  {
    const json* v = root.raw("truth");
    if (!v) throw ConfigError("truth", "missing");
    Obj t(*v, "truth");
    dimension = t.count("dimension", 3, 1, 1000);
    LogisticLink link;
    link.intercept = t.real("intercept", 0.0);
    if (t.has("beta") && t.has("beta_uniform")) {
      throw ConfigError(t.at("beta"), "give either beta or beta_uniform, not both");
    }
    if (t.has("beta")) {
      link.beta = t.reals("beta", {});
      if (link.beta.empty()) throw ConfigError(t.at("beta"), "must not be empty");
      if (t.has("dimension") && link.beta.size() != dimension) {
        throw ConfigError(t.at("beta"), "length differs from dimension");
      }
      dimension = link.beta.size();
    } else {
      const auto r = parse_range(t, "beta_uniform", {0.0, 1.0});
      RngStream tb = rng.derive(Purpose::kTruth);
      for (std::size_t k = 0; k < dimension; ++k) link.beta.push_back(tb.uniform(r[0], r[1]));
    }
    DriftSpec drift;
    std::vector<LogisticLink> segments;
    if (const json* d = t.raw("drift")) {
      Obj o(*d, t.at("drift"));
      const std::string kind = o.text("kind", "none");
      if (kind == "none") {
        drift.kind = DriftSpec::Kind::kNone;
      } else if (kind == "bounded") {
        drift.kind = DriftSpec::Kind::kBounded;
        drift.alpha = o.real("alpha", 0.005, 0.0, HUGE_VAL);
      } else if (kind == "shocks") {
        drift.kind = DriftSpec::Kind::kShocks;
        if (o.has("change_points") && o.has("shock_count")) {
          throw ConfigError(o.at("change_points"), "give either change_points or shock_count");
        }
        if (o.has("change_points")) {
          drift.change_points = o.counts("change_points", {});
        } else {
          const std::size_t count = o.count("shock_count", 3, 1, 10000);
          drift.change_points = evenly_spaced_change_points(c.epochs + 1, count);
        }
        const auto r = parse_range(o, "coef_range", {-2.0, 2.0});
        drift.coef_lower = r[0];
        drift.coef_upper = r[1];
        RngStream shocks = rng.derive(Purpose::kShock);
        try {
          segments = sample_shock_sequence(drift, dimension, link.intercept, shocks);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(o.at("change_points"), e.what());
        }
      } else {
        throw ConfigError(o.at("kind"), "expected none, bounded or shocks, got '" + kind + "'");
      }
      o.close();
    }
    t.close();
    spec.truth = GroundTruthModel(segments.empty() ? link : segments.front(), drift,
                                  rng.derive(Purpose::kDrift).key());
    if (!segments.empty()) spec.truth.set_segments(std::move(segments));
  }

  // intervention
  {
    const json* v = root.raw("intervention");
    if (!v) throw ConfigError("intervention", "missing");
    Obj o(*v, "intervention");
    spec.g.kind = parse_enum<InterventionModel::Kind>(o, "kind", "uniform-noise-cbrt",
                                                      intervention_kind_from_string);
    if (spec.g.kind == InterventionModel::Kind::kHealthcare) {
      throw ConfigError(o.at("kind"), "the healthcare intervention runs under the healthcare command");
    }
    spec.g.rho_eq = o.real("rho_eq", 0.2, 0.0, 1.0, true);
    spec.g.scale = o.real("scale", 1.0, 0.0, HUGE_VAL, true);
    spec.g.sign = o.reals("sign", {});
    for (std::size_t k = 0; k < spec.g.sign.size(); ++k) {
      if (spec.g.sign[k] != 1.0 && spec.g.sign[k] != -1.0) {
        throw ConfigError(join(o.at("sign"), k), "expected 1 or -1");
      }
    }
    if (!spec.g.sign.empty() && spec.g.sign.size() != dimension) {
      throw ConfigError(o.at("sign"), "length differs from truth dimension");
    }
    spec.g.sign_follows_truth = o.flag("sign_follows_truth", false);
    const auto r = parse_range(o, "clamp", {-4.0, 4.0});
    spec.g.clamp_lower = r[0];
    spec.g.clamp_upper = r[1];
    o.close();
  }

  // estimator
  if (const json* v = root.raw("estimator")) {
    Obj o(*v, "estimator");
    spec.estimator = parse_enum<RiskScore::Kind>(o, "kind", "mc-empirical", score_kind_from_string);
    spec.score_replicates = o.count("score_replicates", spec.score_replicates, 1, 10000000);
    if (const json* l = o.raw("logistic")) {
      Obj lo(*l, o.at("logistic"));
      spec.logistic.tolerance = lo.real("tolerance", spec.logistic.tolerance, 0.0, 1.0, true);
      spec.logistic.max_iterations = lo.count("max_iterations", spec.logistic.max_iterations, 1, 10000);
      spec.logistic.ridge = lo.real("ridge", spec.logistic.ridge, 0.0, HUGE_VAL);
      lo.close();
    }
    if (const json* f = o.raw("forest")) spec.forest = parse_forest(*f, o.at("forest"), spec.forest);
    o.close();
  } else {
    spec.estimator = RiskScore::Kind::kMcEmpirical;
  }
  spec.truth_replicates = root.count("truth_replicates", spec.truth_replicates, 1, 10000000);

  if (const json* v = root.raw("policy")) {
    Obj o(*v, "policy");
    spec.policy.kind = parse_enum<UpdatePolicy::Kind>(o, "kind", "stacked", policy_kind_from_string);
    spec.policy.holdout_fraction = o.real("holdout_fraction", 0.2, 0.0, 1.0, true);
    o.close();
  }

  if (const json* v = root.raw("population")) {
    Obj o(*v, "population");
    spec.population_size = o.count("size", 0, 0, 100000000);
    spec.population = {CovariateSampler::Kind::kNormal, 0.0, 1.0, dimension};
    if (const json* d = o.raw("distribution")) {
      spec.population = parse_sampler(*d, o.at("distribution"), dimension);
    }
    o.close();
  } else {
    spec.population.dimension = dimension;
  }
  const bool fitted = spec.estimator == RiskScore::Kind::kLogistic ||
                      spec.estimator == RiskScore::Kind::kForest;
  if (fitted && spec.population_size == 0) {
    throw ConfigError("population.size", "must be > 0 for a fitted estimator");
  }
  if (spec.policy.kind == UpdatePolicy::Kind::kHoldout && spec.population_size == 0) {
    throw ConfigError("population.size", "must be > 0 for the holdout policy");
  }

  {
    std::size_t count = 50;
    CovariateSampler sampler{CovariateSampler::Kind::kNormal, 0.0, 1.0, dimension};
    if (const json* v = root.raw("tracked")) {
      Obj o(*v, "tracked");
      count = o.count("count", count, 1, 1000000);
      if (const json* d = o.raw("distribution")) sampler = parse_sampler(*d, o.at("distribution"), dimension);
      o.close();
    }
    for (std::size_t i = 0; i < count; ++i) {
      RngStream ts = rng.derive(Purpose::kTracked, 0, i);
      spec.tracked.push_back(sampler.sample(ts));
    }
  }

  if (const json* v = root.raw("post_clamp")) {
    Obj o(*v, "post_clamp");
    spec.clamp.enabled = o.flag("enabled", true);
    const auto r = parse_range(o, "range", {-5.0, 5.0});
    spec.clamp.lower = r[0];
    spec.clamp.upper = r[1];
    o.close();
  }
  spec.trace_epochs = root.counts("trace_epochs", {});
  for (std::size_t k = 0; k < spec.trace_epochs.size(); ++k) {
    if (spec.trace_epochs[k] > c.epochs) {
      throw ConfigError(join("trace_epochs", k), "exceeds epochs");
    }
  }
  c.output = parse_output(root);
  root.close();
  return c;
}

HealthcareRunConfig parse_healthcare_config(const json& j) {
  Obj root(j, "");
  check_version(root);
  HealthcareRunConfig c;
  HealthcareConfig& m = c.model;
  c.seed = root.count("seed", c.seed);
  m.individuals = root.count("individuals", m.individuals, 100, 10000000);
  m.epochs = root.count("epochs", m.epochs, 0, 10000);
  m.truth_replicates = root.count("truth_replicates", m.truth_replicates, 1, 100000);
  m.tracked = root.count("tracked", m.tracked, 0, 10000000);
  if (const json* v = root.raw("forest")) m.forest = parse_forest(*v, "forest", m.forest);
  m.drug_prevalence = root.reals("drug_prevalence", m.drug_prevalence, 0.0, 1.0, true);
  if (m.drug_prevalence.size() != health::kDrugs) {
    throw ConfigError("drug_prevalence", "expected 10 values");
  }
  if (const json* v = root.raw("cohorts")) {
    Obj o(*v, "cohorts");
    auto two = [&](const std::string& key, std::array<int, 2> def) {
      const auto r = o.counts(key, {static_cast<std::size_t>(def[0]), static_cast<std::size_t>(def[1])});
      if (r.size() != 2) throw ConfigError(o.at(key), "expected two cut points");
      return std::array<int, 2>{static_cast<int>(r[0]), static_cast<int>(r[1])};
    };
    m.cohorts.age_cuts = two("age_cuts", m.cohorts.age_cuts);
    m.cohorts.history_cuts = two("history_cuts", m.cohorts.history_cuts);
    if (const json* r = o.raw("rho_eq")) {
      const std::string path = o.at("rho_eq");
      if (!r->is_array() || r->size() != 3) throw ConfigError(path, "expected a 3x3 array");
      for (std::size_t a = 0; a < 3; ++a) {
        const json& row = (*r)[a];
        if (!row.is_array() || row.size() != 3) throw ConfigError(join(path, a), "expected 3 values");
        for (std::size_t h = 0; h < 3; ++h) {
          m.cohorts.rho_eq[a][h] = Obj::check_real(row[h], join(join(path, a), h), 0.0, 1.0, true);
        }
      }
    }
    o.close();
    try {
      m.cohorts.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("cohorts", e.what());
    }
  }
  c.output = parse_output(root);
  root.close();
  return c;
}

DemoRunConfig parse_demo_config(const json& j) {
  Obj root(j, "");
  check_version(root);
  DemoRunConfig c;
  c.demo = root.text("demo", "");
  if (!is_demo(c.demo)) throw ConfigError("demo", "unknown demo '" + c.demo + "'");
  c.options.seed = root.count("seed", 0);
  c.options.tracked = root.count("tracked", c.options.tracked, 1, 100000);
  c.options.epochs = root.count("epochs", 0, 0, 1000000);
  c.options.replicate_scale = root.real("replicate_scale", 1.0, 0.0, 1.0);
  if (c.options.replicate_scale <= 0.0) throw ConfigError("replicate_scale", "must be > 0");
  c.output = parse_output(root);
  root.close();
  return c;
}

}  // namespace stacklab
