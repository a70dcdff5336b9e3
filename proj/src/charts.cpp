#include "stacklab/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stacklab/io.hpp"

namespace stacklab {

namespace {

constexpr double kWidth = 860;
constexpr double kHeight = 500;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string open_svg(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  return os.str();
}

std::string axes(const Frame& f, const std::string& xl, const std::string& yl, bool x_ticks = true) {
  std::ostringstream os;
  const double bx = kLeft, by = kHeight - kBottom, tx = kWidth - kRight;
  os << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << tx << "\" y2=\"" << by
     << "\" stroke=\"black\"/>\n<line x1=\"" << bx << "\" y1=\"" << kTop << "\" x2=\"" << bx
     << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double yv = f.y0 + (f.y1 - f.y0) * k / 5.0;
    os << "<text x=\"" << bx - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">"
       << label_num(yv) << "</text>\n";
    if (x_ticks) {
      const double xv = f.x0 + (f.x1 - f.x0) * k / 5.0;
      os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\">"
         << label_num(xv) << "</text>\n";
    }
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
     << "<text transform=\"translate(18," << (kTop + by) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(yl) << "</text>\n";
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

double silverman(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  const double h = 1.06 * sd * std::pow(n, -0.2);
  return h > 0 ? h : 1e-3;
}

}  // namespace

std::string to_string(ChartSpec::Kind kind) {
  switch (kind) {
    case ChartSpec::Kind::kTrajectoryLines: return "trajectory-lines";
    case ChartSpec::Kind::kDensityStack: return "density-stack";
    case ChartSpec::Kind::kBeeswarmByCohort: return "beeswarm-by-cohort";
  }
  return "unknown";
}

ChartSpec::Kind chart_kind_from_string(const std::string& name) {
  for (auto k : {ChartSpec::Kind::kTrajectoryLines, ChartSpec::Kind::kDensityStack,
                 ChartSpec::Kind::kBeeswarmByCohort}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown chart kind '" + name + "'");
}

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<double>& references) {
  Frame f{HUGE_VAL, -HUGE_VAL, HUGE_VAL, -HUGE_VAL};
  for (const auto& s : series) {
    for (double x : s.x) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
    for (double y : s.y) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
  }
  for (double r : references) f.y0 = std::min(f.y0, r), f.y1 = std::max(f.y1, r);
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  std::ostringstream os;
  os << open_svg(title) << axes(f, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 10]
       << "\" stroke-width=\"0.8\" stroke-opacity=\"0.7\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      os << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
  }
  for (double r : references) {
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << num(f.py(r))
       << "\" y2=\"" << num(f.py(r)) << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string density_stack_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                              const std::string& title) {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& [_, v] : groups) {
    for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  widen(lo, hi);
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  constexpr int kGrid = 200;
  std::vector<std::vector<double>> dens;
  double peak = 0.0;
  for (const auto& [_, v] : groups) {
    std::vector<double> d(kGrid, 0.0);
    if (!v.empty()) {
      const double h = silverman(v);
      const double norm = 1.0 / (static_cast<double>(v.size()) * h * std::sqrt(2 * std::numbers::pi));
      for (int g = 0; g < kGrid; ++g) {
        const double x = lo + (hi - lo) * g / (kGrid - 1);
        double s = 0.0;
        for (double xi : v) {
          const double z = (x - xi) / h;
          s += std::exp(-0.5 * z * z);
        }
        d[g] = s * norm;
        peak = std::max(peak, d[g]);
      }
    }
    dens.push_back(std::move(d));
  }
  if (peak <= 0) peak = 1;
  const std::size_t rows = std::max<std::size_t>(groups.size(), 1);
  const double band = (kHeight - kTop - kBottom) / static_cast<double>(rows);
  Frame f{lo, hi, 0, 1};
  std::ostringstream os;
  os << open_svg(title);
  const double by = kHeight - kBottom;
  os << "<line x1=\"" << kLeft << "\" y1=\"" << by << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << by << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = lo + (hi - lo) * k / 5.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\">"
       << label_num(xv) << "</text>\n";
  }
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const double base = by - band * static_cast<double>(groups.size() - 1 - r);
    os << "<path fill=\"" << kPalette[r % 10] << "\" fill-opacity=\"0.35\" stroke=\""
       << kPalette[r % 10] << "\" d=\"M" << num(f.px(lo)) << ',' << num(base);
    for (int g = 0; g < kGrid; ++g) {
      const double x = lo + (hi - lo) * g / (kGrid - 1);
      os << " L" << num(f.px(x)) << ',' << num(base - dens[r][g] / peak * band * 1.6);
    }
    os << " L" << num(f.px(hi)) << ',' << num(base) << " Z\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(base - 4) << "\" text-anchor=\"end\">"
       << escape(groups[r].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string beeswarm_svg(const std::vector<CohortColumn>& cohorts, const std::string& title) {
  double hi = 0.0;
  for (const auto& c : cohorts) {
    hi = std::max(hi, c.rho_eq);
    for (double v : c.pre) hi = std::max(hi, v);
    for (double v : c.post) hi = std::max(hi, v);
  }
  hi = hi > 0 ? std::min(1.0, hi * 1.05) : 1.0;
  const std::size_t n = std::max<std::size_t>(cohorts.size(), 1);
  Frame f{0, static_cast<double>(n), 0, hi};
  const double col = (kWidth - kLeft - kRight) / static_cast<double>(n);
  constexpr double kDot = 1.6;
  std::ostringstream os;
  os << open_svg(title) << axes(f, "cohort (left: before, right: after)", "true risk", false);
  for (std::size_t c = 0; c < cohorts.size(); ++c) {
    const auto& co = cohorts[c];
    const double cx = kLeft + col * (static_cast<double>(c) + 0.5);
    for (int side = 0; side < 2; ++side) {
      const auto& v = side == 0 ? co.pre : co.post;
      const double centre = cx + (side == 0 ? -col / 4 : col / 4);
      const double half = col / 4 - 2;
      std::map<long, std::vector<double>> bins;
      for (double r : v) bins[std::lround(f.py(r) / (2 * kDot))].push_back(r);
      std::size_t widest = 1;
      for (const auto& [_, b] : bins) widest = std::max(widest, b.size());
      const double step = std::min(2 * kDot, 2 * half / static_cast<double>(widest));
      os << "<g fill=\"" << (side == 0 ? "#7f7f7f" : "#1f77b4") << "\" fill-opacity=\"0.6\">";
      for (const auto& [_, b] : bins) {
        for (std::size_t k = 0; k < b.size(); ++k) {
          const double off = (k % 2 == 0 ? 1.0 : -1.0) * static_cast<double>((k + 1) / 2) * step;
          os << "<circle cx=\"" << num(centre + off) << "\" cy=\"" << num(f.py(b[k])) << "\" r=\""
             << kDot / 2 << "\"/>";
        }
      }
      os << "</g>\n";
      if (!v.empty()) {
        double m = 0.0;
        for (double r : v) m += r;
        m /= static_cast<double>(v.size());
        os << "<circle cx=\"" << num(centre) << "\" cy=\"" << num(f.py(m)) << "\" r=\"4\" fill=\"black\"/>\n";
      }
    }
    os << "<line x1=\"" << num(cx - col / 2 + 4) << "\" x2=\"" << num(cx + col / 2 - 4) << "\" y1=\""
       << num(f.py(co.rho_eq)) << "\" y2=\"" << num(f.py(co.rho_eq))
       << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(co.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_chart(const ChartSpec& spec) {
  const CsvTable t = read_csv(spec.input);
  std::string svg;
  switch (spec.kind) {
    case ChartSpec::Kind::kTrajectoryLines: {
      const std::size_t ce = t.column("epoch"), cs = t.column("sample_id"), cr = t.column("rho_true");
      std::map<std::size_t, Series> by;
      for (const auto& row : t.rows) {
        auto& s = by[static_cast<std::size_t>(row[cs])];
        s.x.push_back(row[ce]);
        s.y.push_back(row[cr]);
      }
      std::vector<Series> series;
      for (auto& [id, s] : by) {
        s.label = std::to_string(id);
        series.push_back(std::move(s));
      }
      svg = line_chart_svg(series, spec.title, "epoch", "true risk", spec.references);
      break;
    }
    case ChartSpec::Kind::kDensityStack: {
      const std::size_t ce = t.column("epoch"), cs = t.column("sample_id"), cx = t.column("x1");
      std::map<std::size_t, std::vector<double>> by;
      for (const auto& row : t.rows) {
        if (static_cast<std::size_t>(row[cs]) == spec.sample) by[static_cast<std::size_t>(row[ce])].push_back(row[cx]);
      }
      std::vector<std::pair<std::string, std::vector<double>>> groups;
      for (auto& [e, v] : by) groups.emplace_back("e=" + std::to_string(e), std::move(v));
      svg = density_stack_svg(groups, spec.title);
      break;
    }
    case ChartSpec::Kind::kBeeswarmByCohort: {
      const std::size_t cc = t.column("cohort"), cq = t.column("rho_eq"), ce = t.column("epoch"),
                        cr = t.column("risk");
      double first = HUGE_VAL, last = -HUGE_VAL;
      for (const auto& row : t.rows) first = std::min(first, row[ce]), last = std::max(last, row[ce]);
      std::map<std::size_t, CohortColumn> by;
      for (const auto& row : t.rows) {
        auto& c = by[static_cast<std::size_t>(row[cc])];
        c.rho_eq = row[cq];
        if (row[ce] == first) c.pre.push_back(row[cr]);
        if (row[ce] == last) c.post.push_back(row[cr]);
      }
      std::vector<CohortColumn> cols;
      for (auto& [id, c] : by) {
        c.label = "cohort " + std::to_string(id + 1);
        cols.push_back(std::move(c));
      }
      svg = beeswarm_svg(cols, spec.title);
      break;
    }
  }
  write_file(spec.output, svg);
}

}  // namespace stacklab
