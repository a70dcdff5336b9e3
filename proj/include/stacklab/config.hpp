#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "stacklab/demos.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/population.hpp"

namespace stacklab {

inline constexpr int kConfigVersion = 1;

/// Invalid configuration. `path` names the offending field, e.g.
/// "intervention.rho_eq".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error((path.empty() ? std::string("config") : path) + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool charts = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::size_t epochs = 100;
  EngineSpec spec;
  OutputConfig output;
};

struct HealthcareRunConfig {
  std::uint64_t seed = 1;
  HealthcareConfig model;
  OutputConfig output;
};

struct DemoRunConfig {
  std::string demo;
  DemoOptions options;
  OutputConfig output;
};

/// Parsers are fail-closed: unknown keys, wrong types and out-of-range
/// values throw ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
HealthcareRunConfig parse_healthcare_config(const nlohmann::json& j);
DemoRunConfig parse_demo_config(const nlohmann::json& j);

/// Reads a JSON file. Throws ConfigError on I/O or syntax errors.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace stacklab
