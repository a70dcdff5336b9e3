#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stacklab/engine.hpp"
#include "stacklab/population.hpp"

namespace stacklab {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// epoch,sample_id,rho_true,rho_est,y,x_post_1..x_post_p
void write_trajectory_csv(const TrajectoryRecord& record, const std::filesystem::path& path);
/// Inverse of write_trajectory_csv (rows only; summaries are not stored).
TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path);

/// epoch,training_rows,holdout_rows,holdout_changed,outcome_rate,mean_rho_true,stack_size
void write_epoch_csv(const TrajectoryRecord& record, const std::filesystem::path& path);

/// epoch,sample_id,chain,x1 for every traced epoch.
void write_trace_csv(const TrajectoryRecord& record, const std::filesystem::path& path);

/// Pretty-printed JSON with a trailing newline.
void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);

nlohmann::ordered_json score_to_json(const RiskScore& score);
/// Appends one JSON line per score. Never rewrites earlier lines.
void append_score_jsonl(const RiskScore& score, const std::filesystem::path& path);
/// Truncates `path` then appends every score of the stack in order.
void write_score_stack_jsonl(const ScoreStack& stack, const std::filesystem::path& path);

/// cohort,epoch,mean,variance,rho_eq
void write_fairness_csv(const FairnessReport& report, const std::filesystem::path& path);
/// individual,cohort,rho_eq,epoch,risk for the first and last snapshots.
void write_risk_csv(const HealthcareResult& result, const CohortSpec& cohorts, std::size_t epochs,
                    const std::filesystem::path& path);

/// Minimal CSV table: header plus numeric cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  /// Index of `name` in the header; throws std::runtime_error if absent.
  std::size_t column(const std::string& name) const;
};

/// Throws std::runtime_error on unreadable files or non-numeric cells.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace stacklab
