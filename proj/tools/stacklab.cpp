#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stacklab/artifacts.hpp"
#include "stacklab/charts.hpp"
#include "stacklab/config.hpp"
#include "stacklab/demos.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/population.hpp"

namespace fs = std::filesystem;
using namespace stacklab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool no_charts = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_flag = true) {
  if (config_flag) cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads (default: all)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--no-charts", c.no_charts, "skip SVG charts");
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("stacklab");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("STACKLAB_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

void report_files(const ArtifactList& files) {
  for (const auto& f : files) spdlog::debug("wrote {}", f.string());
}

int cmd_demo(const std::string& name_arg, const Common& c, std::size_t tracked, std::size_t epochs) {
  DemoRunConfig cfg;
  if (!c.config.empty()) {
    cfg = parse_demo_config(read_json_file(c.config));
    if (!name_arg.empty() && name_arg != cfg.demo) {
      throw ConfigError("demo", "config names '" + cfg.demo + "' but '" + name_arg + "' was requested");
    }
  } else {
    if (name_arg.empty()) throw ConfigError("demo", "missing demo name");
    if (!is_demo(name_arg)) throw ConfigError("demo", "unknown demo '" + name_arg + "'");
    cfg.demo = name_arg;
  }
  if (c.seed) cfg.options.seed = *c.seed;
  if (tracked) cfg.options.tracked = tracked;
  if (epochs) cfg.options.epochs = epochs;
  if (!c.out.empty()) cfg.output.directory = c.out;
  if (c.no_charts) cfg.output.charts = false;

  spdlog::info("demo {} starting", cfg.demo);
  const DemoResult r = run_demo(cfg.demo, cfg.options);
  const fs::path dir = cfg.output.directory / cfg.demo;
  report_files(write_demo_outputs(r, dir, cfg.output.charts));
  for (const auto& check : r.checks) {
    spdlog::info("{} {}: {}", check.passed ? "PASS" : "FAIL", check.name, check.detail);
  }
  std::cout << cfg.demo << " seed=" << r.seed << ' ' << (r.passed() ? "PASS" : "FAIL") << " -> "
            << dir.string() << '\n';
  return r.passed() ? kExitOk : kExitRuntime;
}

int cmd_run(const Common& c) {
  if (c.config.empty()) throw ConfigError("", "run needs --config");
  nlohmann::json j = read_json_file(c.config);
  if (c.seed) {
    if (!j.is_object()) throw ConfigError("", "expected an object");
    j["seed"] = *c.seed;
  }
  ExperimentConfig cfg = parse_experiment_config(j);
  if (!c.out.empty()) cfg.output.directory = c.out;
  if (c.no_charts) cfg.output.charts = false;

  ScoreStack stack;
  const TrajectoryRecord record = run_experiment(
      cfg.spec, cfg.epochs, cfg.seed, Exec::kParallel,
      [](const EpochSummary& s) {
        spdlog::info("epoch {} rows={} holdout={} outcome_rate={:.4f} mean_rho_true={:.4f} stack={}",
                     s.epoch, s.training_rows, s.holdout_rows, s.population_outcome_rate,
                     s.mean_rho_true, s.stack_size);
      },
      &stack);
  nlohmann::ordered_json summary;
  summary["name"] = cfg.name;
  summary["seed"] = cfg.seed;
  summary["epochs"] = cfg.epochs;
  summary["intervention"] = to_string(cfg.spec.g.kind);
  summary["rho_eq"] = cfg.spec.g.rho_eq;
  summary["estimator"] = to_string(cfg.spec.estimator);
  summary["policy"] = to_string(cfg.spec.policy.kind);
  summary["beta"] = cfg.spec.truth.base().beta;
  summary["tracked"] = cfg.spec.tracked.size();
  if (!record.epochs.empty()) summary["final_mean_rho_true"] = record.epochs.back().mean_rho_true;
  report_files(write_experiment_outputs(record, stack, summary, cfg.output.directory,
                                        cfg.output.charts, {cfg.spec.g.rho_eq}));
  std::cout << cfg.name << " seed=" << cfg.seed << " epochs=" << cfg.epochs << " -> "
            << cfg.output.directory.string() << '\n';
  return kExitOk;
}

int cmd_healthcare(const Common& c) {
  nlohmann::json j = c.config.empty() ? nlohmann::json::object() : read_json_file(c.config);
  if (c.seed) {
    if (!j.is_object()) throw ConfigError("", "expected an object");
    j["seed"] = *c.seed;
  }
  HealthcareRunConfig cfg = parse_healthcare_config(j);
  if (!c.out.empty()) cfg.output.directory = c.out;
  if (c.no_charts) cfg.output.charts = false;
  spdlog::info("healthcare: {} individuals, {} epochs, {} trees", cfg.model.individuals,
               cfg.model.epochs, cfg.model.forest.n_trees);
  const HealthcareResult r = run_healthcare(cfg.model, cfg.seed, Exec::kParallel,
                                            [](const EpochSummary& s) {
                                              spdlog::info("epoch {} outcome_rate={:.4f} mean_rho_true={:.4f}",
                                                           s.epoch, s.population_outcome_rate,
                                                           s.mean_rho_true);
                                            });
  report_files(write_healthcare_outputs(r, cfg.model, cfg.seed, cfg.output.directory, cfg.output.charts));
  for (const auto& co : r.fairness.cohorts) {
    if (co.empty) {
      spdlog::warn("{}: no members, metrics omitted", co.label);
      continue;
    }
    spdlog::info("{} (rho_eq {:.3f}): mean {:.4f} -> {:.4f}, variance {:.5f} -> {:.5f}", co.label,
                 co.rho_eq, co.pre.mean, co.post.mean, co.pre.variance, co.post.variance);
  }
  spdlog::info("finished in {:.1f} s", r.seconds);
  std::cout << "healthcare seed=" << cfg.seed << " variance_reduced="
            << (r.fairness.all_variance_reduced() ? "all" : "not-all")
            << " means_attracted=" << (r.fairness.all_means_attracted() ? "all" : "not-all")
            << " -> " << cfg.output.directory.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"stacklab: stacked interventions for risk scores"};
  app.require_subcommand(1);

  Common demo_c, run_c, hc_c;
  std::string demo_name;
  std::size_t demo_tracked = 0, demo_epochs = 0;
  auto* demo = app.add_subcommand("demo", "run a preconfigured demonstration");
  std::string names;
  for (const auto& n : demo_names()) names += (names.empty() ? "" : ", ") + n;
  demo->add_option("name", demo_name, "one of: " + names);
  demo->add_option("--tracked", demo_tracked, "tracked samples");
  demo->add_option("--epochs", demo_epochs, "index of the last epoch");
  add_common(demo, demo_c);

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  add_common(run, run_c);

  auto* hc = app.add_subcommand("healthcare", "run the cohort healthcare simulation");
  add_common(hc, hc_c);

  ChartSpec chart_spec;
  std::string chart_kind;
  auto* chart = app.add_subcommand("chart", "render an SVG chart from a CSV output");
  chart->add_option("--kind", chart_kind, "trajectory-lines, density-stack or beeswarm-by-cohort")->required();
  chart->add_option("--input", chart_spec.input, "CSV input")->required()->check(CLI::ExistingFile);
  chart->add_option("--out", chart_spec.output, "SVG output")->required();
  chart->add_option("--title", chart_spec.title, "chart title");
  chart->add_option("--ref", chart_spec.references, "horizontal reference line");
  chart->add_option("--sample", chart_spec.sample, "tracked sample for density-stack");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const Common* common = demo->parsed() ? &demo_c : run->parsed() ? &run_c : &hc_c;
  if (common->threads > 0) set_thread_count(common->threads);

  try {
    if (demo->parsed()) return cmd_demo(demo_name, demo_c, demo_tracked, demo_epochs);
    if (run->parsed()) return cmd_run(run_c);
    if (hc->parsed()) return cmd_healthcare(hc_c);
    try {
      chart_spec.kind = chart_kind_from_string(chart_kind);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    render_chart(chart_spec);
    std::cout << "wrote " << chart_spec.output.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
