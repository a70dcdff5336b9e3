#include "stacklab/artifacts.hpp"

#include "stacklab/charts.hpp"
#include "stacklab/io.hpp"

namespace stacklab {

namespace {

void chart(ArtifactList& out, ChartSpec::Kind kind, const std::filesystem::path& input,
           const std::filesystem::path& output, std::string title, std::vector<double> refs = {}) {
  ChartSpec spec;
  spec.kind = kind;
  spec.input = input;
  spec.output = output;
  spec.title = std::move(title);
  spec.references = std::move(refs);
  render_chart(spec);
  out.push_back(output);
}

}  // namespace

ArtifactList write_demo_outputs(const DemoResult& result, const std::filesystem::path& dir,
                                bool charts) {
  ArtifactList out;
  const auto traj = dir / "trajectory.csv";
  write_trajectory_csv(result.record, traj);
  out.push_back(traj);
  write_epoch_csv(result.record, dir / "epochs.csv");
  out.push_back(dir / "epochs.csv");
  const bool traced = !result.record.trace.empty();
  if (traced) {
    write_trace_csv(result.record, dir / "trace.csv");
    out.push_back(dir / "trace.csv");
  }
  write_score_stack_jsonl(result.stack, dir / "scores.jsonl");
  out.push_back(dir / "scores.jsonl");
  write_json(result.report, dir / "diagnostics.json");
  out.push_back(dir / "diagnostics.json");
  if (charts) {
    std::vector<double> refs{result.report.value("rho_eq", 0.5)};
    if (result.report.contains("bounds")) {
      refs.push_back(result.report["bounds"]["lower"].get<double>());
      refs.push_back(result.report["bounds"]["upper"].get<double>());
    }
    chart(out, ChartSpec::Kind::kTrajectoryLines, traj, dir / "trajectory.svg",
          result.name + ": true risk of tracked samples", refs);
    if (traced) {
      chart(out, ChartSpec::Kind::kDensityStack, dir / "trace.csv", dir / "density.svg",
            result.name + ": first coordinate of sample 0 by epoch");
    }
  }
  return out;
}

ArtifactList write_experiment_outputs(const TrajectoryRecord& record, const ScoreStack& stack,
                                      const nlohmann::ordered_json& summary,
                                      const std::filesystem::path& dir, bool charts,
                                      const std::vector<double>& references) {
  ArtifactList out;
  const auto traj = dir / "trajectory.csv";
  write_trajectory_csv(record, traj);
  out.push_back(traj);
  write_epoch_csv(record, dir / "epochs.csv");
  out.push_back(dir / "epochs.csv");
  if (!record.trace.empty()) {
    write_trace_csv(record, dir / "trace.csv");
    out.push_back(dir / "trace.csv");
  }
  write_score_stack_jsonl(stack, dir / "scores.jsonl");
  out.push_back(dir / "scores.jsonl");
  write_json(summary, dir / "summary.json");
  out.push_back(dir / "summary.json");
  if (charts) {
    chart(out, ChartSpec::Kind::kTrajectoryLines, traj, dir / "trajectory.svg",
          summary.value("name", std::string("experiment")) + ": true risk", references);
    if (!record.trace.empty()) {
      chart(out, ChartSpec::Kind::kDensityStack, dir / "trace.csv", dir / "density.svg",
            "first coordinate of sample 0 by epoch");
    }
  }
  return out;
}

nlohmann::ordered_json healthcare_report(const HealthcareResult& result,
                                         const HealthcareConfig& config, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["individuals"] = config.individuals;
  j["epochs"] = config.epochs;
  j["trees"] = config.forest.n_trees;
  j["truth_replicates"] = config.truth_replicates;
  j["age_cuts"] = config.cohorts.age_cuts;
  j["history_cuts"] = config.cohorts.history_cuts;
  nlohmann::ordered_json cohorts = nlohmann::ordered_json::array();
  for (const auto& c : result.fairness.cohorts) {
    nlohmann::ordered_json o;
    o["cohort"] = c.cohort;
    o["label"] = c.label;
    o["rho_eq"] = c.rho_eq;
    o["members"] = c.members;
    if (c.empty) {
      o["empty"] = true;
    } else {
      o["pre"] = {{"mean", c.pre.mean}, {"variance", c.pre.variance}, {"distance", c.pre.distance()}};
      o["post"] = {{"mean", c.post.mean}, {"variance", c.post.variance}, {"distance", c.post.distance()}};
      o["variance_reduced"] = c.variance_reduced();
      o["mean_attracted"] = c.mean_attracted();
    }
    cohorts.push_back(o);
  }
  j["cohorts"] = cohorts;
  j["forest_oob_mse"] = result.forest_oob_mse;
  j["label_variance"] = result.label_variance;
  j["all_variance_reduced"] = result.fairness.all_variance_reduced();
  j["all_means_attracted"] = result.fairness.all_means_attracted();
  return j;
}

ArtifactList write_healthcare_outputs(const HealthcareResult& result, const HealthcareConfig& config,
                                      std::uint64_t seed, const std::filesystem::path& dir,
                                      bool charts) {
  ArtifactList out;
  write_fairness_csv(result.fairness, dir / "fairness.csv");
  out.push_back(dir / "fairness.csv");
  write_risk_csv(result, config.cohorts, config.epochs, dir / "risk.csv");
  out.push_back(dir / "risk.csv");
  write_trajectory_csv(result.record, dir / "trajectory.csv");
  out.push_back(dir / "trajectory.csv");
  write_epoch_csv(result.record, dir / "epochs.csv");
  out.push_back(dir / "epochs.csv");
  write_json(healthcare_report(result, config, seed), dir / "report.json");
  out.push_back(dir / "report.json");
  if (charts) {
    chart(out, ChartSpec::Kind::kBeeswarmByCohort, dir / "risk.csv", dir / "beeswarm.svg",
          "true risk by cohort before and after " + std::to_string(config.epochs) +
              " stacked interventions");
  }
  return out;
}

}  // namespace stacklab
