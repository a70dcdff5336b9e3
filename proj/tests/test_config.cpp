#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "stacklab/config.hpp"

using namespace stacklab;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "version": 1,
    "name": "t",
    "seed": 3,
    "epochs": 10,
    "truth": { "beta": [0.5, 0.5, 0.5] },
    "intervention": { "kind": "deterministic-cbrt", "rho_eq": 0.2 },
    "estimator": { "kind": "oracle" },
    "tracked": { "count": 4 }
  })");
}

std::string error_path(const json& j) {
  try {
    parse_experiment_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalExperimentParses) {
  const auto c = parse_experiment_config(minimal());
  EXPECT_EQ(c.name, "t");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.epochs, 10u);
  EXPECT_EQ(c.spec.g.kind, InterventionModel::Kind::kDeterministicCbrt);
  EXPECT_EQ(c.spec.g.rho_eq, 0.2);
  EXPECT_EQ(c.spec.tracked.size(), 4u);
  EXPECT_EQ(c.spec.truth.base().beta, (std::vector<double>{0.5, 0.5, 0.5}));
}

TEST(Config, TrackedPointsDependOnSeed) {
  auto j = minimal();
  const auto a = parse_experiment_config(j);
  const auto b = parse_experiment_config(j);
  EXPECT_EQ(a.spec.tracked, b.spec.tracked);
  j["seed"] = 4;
  const auto c = parse_experiment_config(j);
  EXPECT_NE(a.spec.tracked, c.spec.tracked);
}

TEST(Config, RhoEqOutOfRangeNamesTheField) {
  auto j = minimal();
  j["intervention"]["rho_eq"] = 1.5;
  EXPECT_EQ(error_path(j), "intervention.rho_eq");
  j["intervention"]["rho_eq"] = 0.0;
  EXPECT_EQ(error_path(j), "intervention.rho_eq");
}

TEST(Config, UnknownKeysAreRejected) {
  auto j = minimal();
  j["intervention"]["rho_equ"] = 0.3;
  EXPECT_EQ(error_path(j), "intervention.rho_equ");
  j = minimal();
  j["extra"] = true;
  EXPECT_EQ(error_path(j), "extra");
}

TEST(Config, WrongTypesAreRejected) {
  auto j = minimal();
  j["epochs"] = "ten";
  EXPECT_EQ(error_path(j), "epochs");
  j = minimal();
  j["epochs"] = -1;
  EXPECT_EQ(error_path(j), "epochs");
  j = minimal();
  j["truth"]["beta"] = json::array({1, "x"});
  EXPECT_EQ(error_path(j), "truth.beta[1]");
}

TEST(Config, VersionMustMatch) {
  auto j = minimal();
  j["version"] = 2;
  EXPECT_EQ(error_path(j), "version");
}

TEST(Config, FittedEstimatorNeedsPopulation) {
  auto j = minimal();
  j["estimator"]["kind"] = "logistic";
  EXPECT_EQ(error_path(j), "population.size");
  j["population"] = {{"size", 100}};
  EXPECT_NO_THROW(parse_experiment_config(j));
}

TEST(Config, HealthcareInterventionIsRejectedForExperiments) {
  auto j = minimal();
  j["intervention"]["kind"] = "healthcare";
  EXPECT_EQ(error_path(j), "intervention.kind");
}

TEST(Config, HealthcareDefaultsMatchTheModel) {
  const auto c = parse_healthcare_config(json::object());
  EXPECT_EQ(c.model.individuals, 10000u);
  EXPECT_EQ(c.model.epochs, 20u);
  EXPECT_EQ(c.model.forest.n_trees, 500u);
  EXPECT_EQ(c.model.cohorts.rho_eq_of(8), 0.35);
}

TEST(Config, HealthcareRhoEqGridIsValidated) {
  auto j = json::parse(R"({"cohorts": {"rho_eq": [[0.1,0.1,0.1],[0.1,1.2,0.1],[0.1,0.1,0.1]]}})");
  try {
    parse_healthcare_config(j);
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "cohorts.rho_eq[1][1]");
  }
}

TEST(Config, DemoConfigNeedsAKnownDemo) {
  EXPECT_THROW(parse_demo_config(json::parse(R"({"demo": "thm9"})")), ConfigError);
  const auto c = parse_demo_config(json::parse(R"({"demo": "thm1", "seed": 7})"));
  EXPECT_EQ(c.options.seed, 7u);
}

TEST(Config, ShippedConfigsParse) {
  const std::filesystem::path dir = STACKLAB_CONFIG_DIR;
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "schema.json") continue;
    const json j = read_json_file(entry.path());
    SCOPED_TRACE(entry.path().string());
    if (j.contains("demo")) {
      EXPECT_NO_THROW(parse_demo_config(j));
    } else if (j.contains("individuals") || j.contains("cohorts")) {
      EXPECT_NO_THROW(parse_healthcare_config(j));
    } else {
      EXPECT_NO_THROW(parse_experiment_config(j));
    }
    ++n;
  }
  EXPECT_GE(n, 10u);
}

TEST(Config, UnreadableFileIsAConfigError) {
  EXPECT_THROW(read_json_file("/nonexistent/stacklab.json"), ConfigError);
}
