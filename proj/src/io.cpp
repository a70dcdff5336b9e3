#include "stacklab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stacklab {

namespace {

std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out | std::ios::trunc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_trajectory_csv(const TrajectoryRecord& record, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "epoch,sample_id,rho_true,rho_est,y";
  for (std::size_t k = 1; k <= record.dimension; ++k) out << ",x_post_" << k;
  out << '\n';
  for (const auto& r : record.rows) {
    out << r.epoch << ',' << r.sample << ',' << format_double(r.rho_true) << ','
        << format_double(r.rho_est) << ',' << r.y;
    for (double v : r.x_post) out << ',' << format_double(v);
    out << '\n';
  }
}

TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 5 || t.header[0] != "epoch" || t.header[1] != "sample_id") {
    throw std::runtime_error(path.string() + ": not a trajectory CSV");
  }
  TrajectoryRecord rec;
  rec.dimension = t.header.size() - 5;
  for (const auto& row : t.rows) {
    TrajectoryRow r;
    r.epoch = static_cast<std::size_t>(row[0]);
    r.sample = static_cast<std::size_t>(row[1]);
    r.rho_true = row[2];
    r.rho_est = row[3];
    r.y = static_cast<int>(row[4]);
    r.x_post.assign(row.begin() + 5, row.end());
    rec.samples = std::max(rec.samples, r.sample + 1);
    rec.rows.push_back(std::move(r));
  }
  return rec;
}

void write_epoch_csv(const TrajectoryRecord& record, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "epoch,training_rows,holdout_rows,holdout_changed,outcome_rate,mean_rho_true,stack_size\n";
  for (const auto& s : record.epochs) {
    out << s.epoch << ',' << s.training_rows << ',' << s.holdout_rows << ',' << s.holdout_changed
        << ',' << format_double(s.population_outcome_rate) << ',' << format_double(s.mean_rho_true)
        << ',' << s.stack_size << '\n';
  }
}

void write_trace_csv(const TrajectoryRecord& record, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "epoch,sample_id,chain,x1\n";
  for (const auto& [epoch, samples] : record.trace) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t c = 0; c < samples[i].size(); ++c) {
        out << epoch << ',' << i << ',' << c << ',' << format_double(samples[i][c]) << '\n';
      }
    }
  }
}

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::ordered_json score_to_json(const RiskScore& score) {
  nlohmann::ordered_json j;
  j["epoch"] = score.epoch;
  j["kind"] = to_string(score.kind);
  j["dimension"] = score.dimension;
  j["separated"] = score.flags.separated;
  j["single_class"] = score.flags.single_class;
  if (const auto* l = std::get_if<LogisticScore>(&score.model)) {
    j["coef"] = l->coef;
    j["iterations"] = l->iterations;
    j["converged"] = l->converged;
  } else if (const auto* f = std::get_if<ForestScore>(&score.model)) {
    j["trees"] = f->trees.size();
    j["oob_mse"] = f->oob_mse;
    j["label_variance"] = f->label_variance;
    std::size_t nodes = 0;
    for (const auto& t : f->trees) nodes += t.node_count();
    j["nodes"] = nodes;
  } else if (const auto* o = std::get_if<OracleScore>(&score.model)) {
    j["replicates"] = o->replicates;
  }
  return j;
}

void append_score_jsonl(const RiskScore& score, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::app);
  out << score_to_json(score).dump() << '\n';
}

void write_score_stack_jsonl(const ScoreStack& stack, const std::filesystem::path& path) {
  open_out(path);
  for (const auto& s : stack.scores) append_score_jsonl(s, path);
}

void write_fairness_csv(const FairnessReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "cohort,epoch,mean,variance,rho_eq\n";
  for (const auto& s : report.timeline) {
    if (s.members == 0) continue;
    out << s.cohort << ',' << s.epoch << ',' << format_double(s.mean) << ','
        << format_double(s.variance) << ',' << format_double(s.rho_eq) << '\n';
  }
}

void write_risk_csv(const HealthcareResult& result, const CohortSpec& cohorts, std::size_t epochs,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "individual,cohort,rho_eq,epoch,risk\n";
  const std::size_t n = result.cohort.size();
  for (int pass = 0; pass < 2; ++pass) {
    const auto& risk = pass == 0 ? result.risk_pre : result.risk_post;
    const std::size_t epoch = pass == 0 ? 0 : epochs;
    for (std::size_t i = 0; i < n; ++i) {
      out << i << ',' << result.cohort[i] << ',' << format_double(cohorts.rho_eq_of(result.cohort[i]))
          << ',' << epoch << ',' << format_double(risk[i]) << '\n';
    }
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw std::runtime_error("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " cells");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, path, lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace stacklab
