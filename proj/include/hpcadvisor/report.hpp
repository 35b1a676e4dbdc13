#pragma once

// CSV tables and SVG plots (time vs VMs, cost vs VMs, Pareto).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "hpcadvisor/advisor.hpp"
#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"

namespace hpcadvisor {

// ---------------------------------------------------------------------------
// Tables

inline constexpr std::string_view kTableHeader =
    "app_name,param_name,param_value,sku_name,n_vms,procs_per_vm,exec_time_s,cost_usd,provenance,method";

struct TableRow {
  Scenario scenario;
  double exec_time_s = 0.0;
  double cost_usd = 0.0;
  Provenance provenance = Provenance::measured;
  std::optional<std::string> method;
  std::optional<bool> on_front;  // only in Pareto tables

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

namespace detail {

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("<table>", line, "bad number '" + s + "'");
  return v;
}

inline bool row_less(const TableRow& a, const TableRow& b) {
  if (scenario_less(a.scenario, b.scenario)) return true;
  if (scenario_less(b.scenario, a.scenario)) return false;
  return a.provenance < b.provenance;
}

}  // namespace detail

inline TableRow table_row(const CostedPoint& p) {
  return {p.scenario, p.exec_time_s, p.cost, p.provenance, p.method, std::nullopt};
}

inline std::vector<TableRow> table_rows(const Dataset& dataset, const VmCatalog& catalog,
                                        BillingMode billing = BillingMode::per_minute) {
  std::vector<TableRow> rows;
  for (const auto& r : dataset.records()) rows.push_back(table_row(make_costed_point(r, catalog, billing)));
  return rows;
}

inline std::vector<TableRow> table_rows(const ParetoResult& result) {
  std::vector<TableRow> rows;
  for (const auto& p : result.front) rows.push_back(table_row(p)), rows.back().on_front = true;
  for (const auto& p : result.dominated) rows.push_back(table_row(p)), rows.back().on_front = false;
  return rows;
}

// Rows are sorted canonically; the `pareto` column appears when any row carries it.
inline std::string format_table(std::vector<TableRow> rows) {
  if (rows.empty()) throw ValidationError("refusing to write an empty table");
  std::sort(rows.begin(), rows.end(), detail::row_less);
  const bool pareto = std::any_of(rows.begin(), rows.end(), [](const TableRow& r) { return r.on_front.has_value(); });
  std::ostringstream os;
  os << kTableHeader << (pareto ? ",pareto" : "") << '\n';
  for (const auto& r : rows) {
    const auto& s = r.scenario;
    os << detail::csv_field(s.input.app_name) << ',' << detail::csv_field(s.input.param_name) << ','
       << detail::format_number(s.input.value) << ',' << detail::csv_field(s.sku_name) << ',' << s.n_vms << ','
       << s.procs_per_vm << ',' << detail::format_number(r.exec_time_s) << ',' << detail::format_number(r.cost_usd)
       << ',' << to_string(r.provenance) << ',' << detail::csv_field(r.method.value_or(""));
    if (pareto) os << ',' << (r.on_front.value_or(false) ? "front" : "dominated");
    os << '\n';
  }
  return os.str();
}

inline std::vector<TableRow> parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("<table>", 1, "missing header");
  const bool pareto = line == std::string(kTableHeader) + ",pareto";
  if (!pareto && line != kTableHeader) throw ParseError("<table>", 1, "unexpected header");
  std::vector<TableRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != (pareto ? 11u : 10u)) throw ParseError("<table>", line_no, "wrong column count");
    TableRow r;
    r.scenario.input = {f[0], f[1], detail::parse_number<double>(f[2], line_no)};
    r.scenario.sku_name = f[3];
    r.scenario.n_vms = detail::parse_number<int>(f[4], line_no);
    r.scenario.procs_per_vm = detail::parse_number<int>(f[5], line_no);
    r.exec_time_s = detail::parse_number<double>(f[6], line_no);
    r.cost_usd = detail::parse_number<double>(f[7], line_no);
    auto prov = parse_provenance(f[8]);
    if (!prov) throw ParseError("<table>", line_no, "bad provenance '" + f[8] + "'");
    r.provenance = *prov;
    if (!f[9].empty()) r.method = f[9];
    if (pareto) r.on_front = f[10] == "front";
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void emit_table(const Dataset& dataset, const VmCatalog& catalog, const std::filesystem::path& path,
                       BillingMode billing = BillingMode::per_minute) {
  atomic_write(path, format_table(table_rows(dataset, catalog, billing)));
}

inline void emit_table(const ParetoResult& result, const std::filesystem::path& path) {
  atomic_write(path, format_table(table_rows(result)));
}

// ---------------------------------------------------------------------------
// Plots

enum class PlotKind { time_vs_vms, cost_vs_vms, pareto };

inline std::string_view to_string(PlotKind k) {
  switch (k) {
    case PlotKind::time_vs_vms:
      return "time_vs_vms";
    case PlotKind::cost_vs_vms:
      return "cost_vs_vms";
    case PlotKind::pareto:
      return "pareto";
  }
  return "unknown";
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool predicted = false;  // drawn dashed / hollow
};

struct PlotSpec {
  PlotKind kind = PlotKind::time_vs_vms;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<std::pair<double, double>> front;  // Pareto staircase, time ascending
  bool log2_x = false;
};

inline constexpr int kPlotWidth = 800;
inline constexpr int kPlotHeight = 500;

inline void validate(const PlotSpec& spec) {
  if (spec.series.empty()) throw ValidationError("plot needs at least one series");
  for (const auto& s : spec.series) {
    if (s.points.empty()) throw ValidationError("plot series '" + s.label + "' has no points");
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("plot values must be finite");
      if (spec.log2_x && !(x > 0.0)) throw ValidationError("log2 x-axis needs positive x values");
    }
  }
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Range padded by 5%; an all-equal range is widened instead of rejected.
inline Range padded(double lo, double hi) {
  if (hi == lo) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

inline std::vector<double> nice_ticks(Range r, int target = 6) {
  const double raw = (r.hi - r.lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step)
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace detail

// Renders a self-contained 800x500 SVG. Each series is one <g class="series">
// holding a single polyline (or a single marker for one-point series); Pareto
// plots hold marker groups plus one staircase polyline in <g class="front">.
inline std::string render_svg(const PlotSpec& spec) {
  validate(spec);
  using detail::px;
  constexpr double left = 80, right = 190, top = 45, bottom = 60;
  constexpr double plot_w = kPlotWidth - left - right;
  constexpr double plot_h = kPlotHeight - top - bottom;

  auto xt = [&](double x) { return spec.log2_x ? std::log2(x) : x; };
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : spec.series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, xt(x));
      xmax = std::max(xmax, xt(x));
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  const auto xr = detail::padded(xmin, xmax);
  const auto yr = detail::padded(std::min(ymin, 0.0), ymax);
  auto sx = [&](double x) { return left + (xt(x) - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto sy = [&](double y) { return top + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotWidth << "\" height=\"" << kPlotHeight
     << "\" viewBox=\"0 0 " << kPlotWidth << ' ' << kPlotHeight << "\" data-kind=\"" << to_string(spec.kind)
     << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << px(left + plot_w / 2) << "\" y=\"25\" text-anchor=\"middle\" font-size=\"16\">"
     << detail::xml_escape(spec.title) << "</text>\n";

  // Axes and ticks.
  os << "<g class=\"axes\" stroke=\"black\" font-size=\"11\">\n"
     << "<line x1=\"" << px(left) << "\" y1=\"" << px(top + plot_h) << "\" x2=\"" << px(left + plot_w) << "\" y2=\""
     << px(top + plot_h) << "\"/>\n"
     << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
     << px(top + plot_h) << "\"/>\n";
  std::vector<double> xticks;
  if (spec.log2_x) {
    for (double e = std::ceil(xr.lo); e <= xr.hi; e += 1.0) xticks.push_back(std::exp2(e));
  } else {
    xticks = detail::nice_ticks(xr);
  }
  for (double t : xticks) {
    const double x = sx(t);
    os << "<line x1=\"" << px(x) << "\" y1=\"" << px(top + plot_h) << "\" x2=\"" << px(x) << "\" y2=\""
       << px(top + plot_h + 5) << "\"/>"
       << "<text x=\"" << px(x) << "\" y=\"" << px(top + plot_h + 18) << "\" text-anchor=\"middle\" stroke=\"none\">"
       << detail::tick_label(t) << "</text>\n";
  }
  for (double t : detail::nice_ticks(yr)) {
    const double y = sy(t);
    os << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(y) << "\" x2=\"" << px(left) << "\" y2=\"" << px(y)
       << "\"/>"
       << "<text x=\"" << px(left - 8) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\" stroke=\"none\">"
       << detail::tick_label(t) << "</text>\n";
  }
  os << "<text x=\"" << px(left + plot_w / 2) << "\" y=\"" << px(kPlotHeight - 15)
     << "\" text-anchor=\"middle\" stroke=\"none\" font-size=\"13\">" << detail::xml_escape(spec.x_label)
     << "</text>\n"
     << "<text transform=\"translate(20," << px(top + plot_h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" stroke=\"none\" font-size=\"13\">"
     << detail::xml_escape(spec.y_label) << "</text>\n"
     << "</g>\n";

  auto marker = [&](double x, double y, const char* color, bool hollow) {
    os << "<circle cx=\"" << px(sx(x)) << "\" cy=\"" << px(sy(y)) << "\" r=\"4\" stroke=\"" << color
       << "\" fill=\"" << (hollow ? "white" : color) << "\"/>";
  };

  const bool scatter = spec.kind == PlotKind::pareto;
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const char* color = detail::kPalette[i % std::size(detail::kPalette)];
    os << "<g class=\"series\" data-label=\"" << detail::xml_escape(s.label) << "\" data-predicted=\""
       << (s.predicted ? "true" : "false") << "\">\n";
    if (!scatter && s.points.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
         << (s.predicted ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t k = 0; k < s.points.size(); ++k)
        os << (k ? " " : "") << px(sx(s.points[k].first)) << ',' << px(sy(s.points[k].second));
      os << "\"/>\n";
    } else {
      os << "<g class=\"markers\">";
      for (const auto& [x, y] : s.points) marker(x, y, color, s.predicted);
      os << "</g>\n";
    }
    os << "</g>\n";
  }

  if (scatter && !spec.front.empty()) {
    os << "<g class=\"front\">\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < spec.front.size(); ++k) {
      const auto& [x, y] = spec.front[k];
      if (k > 0) os << ' ' << px(sx(x)) << ',' << px(sy(spec.front[k - 1].second)) << ' ';
      os << px(sx(x)) << ',' << px(sy(y));
    }
    os << "\"/>\n</g>\n";
  }

  // Legend.
  const double lx = left + plot_w + 15;
  os << "<g class=\"legend\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const char* color = detail::kPalette[i % std::size(detail::kPalette)];
    const double y = top + 10 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << px(lx) << "\" y1=\"" << px(y) << "\" x2=\"" << px(lx + 24) << "\" y2=\"" << px(y)
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.predicted ? " stroke-dasharray=\"6,4\"" : "")
       << "/><text x=\"" << px(lx + 30) << "\" y=\"" << px(y + 4) << "\">" << detail::xml_escape(s.label)
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

inline void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) {
  atomic_write(path, render_svg(spec));
}

// ---------------------------------------------------------------------------
// Plot builders over a dataset

namespace detail {

struct SeriesKey {
  std::string sku;
  int procs;
  bool predicted;
  auto operator<=>(const SeriesKey&) const = default;
};

// Observed (measured over simulated) and predicted series per (SKU, procs).
template <typename Value>
std::vector<PlotSeries> group_series(const Dataset& dataset, const AppInput& input, Value value) {
  std::map<SeriesKey, std::map<int, std::pair<Provenance, double>>> groups;
  std::map<std::string, std::set<int>> procs_seen;
  for (const auto& r : dataset.records()) {
    if (!same_workload(r.scenario.input, input)) continue;
    const bool predicted = r.provenance == Provenance::predicted;
    auto& slot = groups[{r.scenario.sku_name, r.scenario.procs_per_vm, predicted}];
    auto it = slot.find(r.scenario.n_vms);
    if (it == slot.end() || r.provenance < it->second.first)
      slot[r.scenario.n_vms] = {r.provenance, value(r)};
    procs_seen[r.scenario.sku_name].insert(r.scenario.procs_per_vm);
  }
  if (groups.empty())
    throw NotFoundError("no data for " + input.param_name + "=" + json(input.value).dump());
  std::vector<PlotSeries> out;
  for (const auto& [key, pts] : groups) {
    PlotSeries s;
    s.label = key.sku;
    if (procs_seen[key.sku].size() > 1) s.label += " ppn=" + std::to_string(key.procs);
    if (key.predicted) s.label += " (predicted)";
    s.predicted = key.predicted;
    for (const auto& [n, v] : pts) s.points.push_back({static_cast<double>(n), v.second});
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string input_caption(const AppInput& input) {
  return (input.app_name.empty() ? std::string{} : input.app_name + ", ") + input.param_name + "=" +
         tick_label(input.value);
}

}  // namespace detail

inline PlotSpec time_plot(const Dataset& dataset, const AppInput& input) {
  PlotSpec spec;
  spec.kind = PlotKind::time_vs_vms;
  spec.title = "Execution time vs number of VMs (" + detail::input_caption(input) + ")";
  spec.x_label = "number of VMs";
  spec.y_label = "execution time [s]";
  spec.log2_x = true;
  spec.series = detail::group_series(dataset, input, [](const BenchmarkRecord& r) { return r.exec_time_s; });
  return spec;
}

inline PlotSpec cost_plot(const Dataset& dataset, const VmCatalog& catalog, const AppInput& input,
                          BillingMode billing = BillingMode::per_minute) {
  PlotSpec spec;
  spec.kind = PlotKind::cost_vs_vms;
  spec.title = "Cost vs number of VMs (" + detail::input_caption(input) + ")";
  spec.x_label = "number of VMs";
  spec.y_label = "cost [USD]";
  spec.log2_x = true;
  spec.series = detail::group_series(dataset, input, [&](const BenchmarkRecord& r) {
    return make_costed_point(r, catalog, billing).cost;
  });
  return spec;
}

inline PlotSpec pareto_plot(const ParetoResult& result, const std::string& caption = {}) {
  PlotSpec spec;
  spec.kind = PlotKind::pareto;
  spec.title = caption.empty() ? "Pareto front: time vs cost" : "Pareto front: time vs cost (" + caption + ")";
  spec.x_label = "execution time [s]";
  spec.y_label = "cost [USD]";
  std::map<std::pair<std::string, bool>, PlotSeries> groups;
  auto add = [&](const CostedPoint& p) {
    const bool predicted = p.provenance == Provenance::predicted;
    auto& s = groups[{p.scenario.sku_name, predicted}];
    s.label = p.scenario.sku_name + (predicted ? " (predicted)" : "");
    s.predicted = predicted;
    s.points.push_back({p.exec_time_s, p.cost});
  };
  for (const auto& p : result.front) add(p);
  for (const auto& p : result.dominated) add(p);
  for (auto& [key, s] : groups) {
    std::sort(s.points.begin(), s.points.end());
    spec.series.push_back(std::move(s));
  }
  for (const auto& p : result.front) spec.front.push_back({p.exec_time_s, p.cost});
  return spec;
}

}  // namespace hpcadvisor
