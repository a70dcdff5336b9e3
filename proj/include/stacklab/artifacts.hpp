#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stacklab/demos.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/population.hpp"

namespace stacklab {

/// Files written into `dir`, in write order.
using ArtifactList = std::vector<std::filesystem::path>;

/// trajectory.csv, epochs.csv, trace.csv (if traced), scores.jsonl,
/// diagnostics.json and, with charts, SVGs rendered from those CSVs.
ArtifactList write_demo_outputs(const DemoResult& result, const std::filesystem::path& dir,
                                bool charts);

ArtifactList write_experiment_outputs(const TrajectoryRecord& record, const ScoreStack& stack,
                                      const nlohmann::ordered_json& summary,
                                      const std::filesystem::path& dir, bool charts,
                                      const std::vector<double>& references);

/// fairness.csv, risk.csv, trajectory.csv, epochs.csv, report.json and the
/// cohort beeswarm.
nlohmann::ordered_json healthcare_report(const HealthcareResult& result,
                                         const HealthcareConfig& config, std::uint64_t seed);
ArtifactList write_healthcare_outputs(const HealthcareResult& result, const HealthcareConfig& config,
                                      std::uint64_t seed, const std::filesystem::path& dir,
                                      bool charts);

}  // namespace stacklab
