#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stacklab/core.hpp"
#include "stacklab/diagnostics.hpp"
#include "stacklab/engine.hpp"

namespace stacklab {

struct DemoOptions {
  /// 0 selects the demo's default seed.
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;
  std::size_t tracked = 50;
  /// 0 selects the demo's default epoch count.
  std::size_t epochs = 0;
  /// Scales every Monte-Carlo replicate count (tests use < 1).
  double replicate_scale = 1.0;
};

struct DemoCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DemoResult {
  std::string name;
  std::uint64_t seed = 0;
  TrajectoryRecord record;
  ScoreStack stack;
  std::vector<DemoCheck> checks;
  nlohmann::ordered_json report;

  bool passed() const;
};

const std::vector<std::string>& demo_names();
bool is_demo(const std::string& name);
std::uint64_t default_demo_seed(const std::string& name);

/// The experiment behind a demo, before any diagnostics run.
EngineSpec demo_spec(const std::string& name, std::uint64_t seed, const DemoOptions& options);
std::size_t demo_epochs(const std::string& name, const DemoOptions& options);

/// Runs the demo and its built-in checks. Throws std::invalid_argument on an
/// unknown name.
DemoResult run_demo(const std::string& name, const DemoOptions& options = {});

}  // namespace stacklab
