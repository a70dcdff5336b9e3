#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stacklab {

struct ChartSpec {
  enum class Kind { kTrajectoryLines, kDensityStack, kBeeswarmByCohort };
  Kind kind = Kind::kTrajectoryLines;
  std::filesystem::path input;
  std::filesystem::path output;
  std::string title;
  /// Dashed horizontal reference lines (trajectory-lines only).
  std::vector<double> references;
  /// Which tracked sample a density stack shows.
  std::size_t sample = 0;
};

std::string to_string(ChartSpec::Kind kind);
/// Throws std::invalid_argument on an unknown name.
ChartSpec::Kind chart_kind_from_string(const std::string& name);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// One polyline per series on shared axes.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<double>& references = {});

/// Gaussian kernel density of each group, drawn as stacked ridges.
std::string density_stack_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                              const std::string& title);

struct CohortColumn {
  std::string label;
  double rho_eq = 0.0;
  std::vector<double> pre;
  std::vector<double> post;
};

/// Per cohort: pre (left) and post (right) swarms, black mean dots and a
/// red rho_eq tick.
std::string beeswarm_svg(const std::vector<CohortColumn>& cohorts, const std::string& title);

/// Reads spec.input (a CSV written by the io module), writes spec.output.
/// The output depends only on the CSV and the spec.
void render_chart(const ChartSpec& spec);

}  // namespace stacklab
