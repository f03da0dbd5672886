#pragma once

// Accuracy-versus-noise charts rendered as standalone SVG.

#include <algorithm>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labelnoise/csv.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/sweep.hpp"

namespace labelnoise {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (alpha, mean accuracy), sorted by alpha
};

struct PlotData {
  std::size_t k = 0;
  std::vector<PlotSeries> series;
};

/// Mean accuracy (1 - risk) per alpha for each (estimator, mitigation,
/// noise kind) series. Failed cells and seed-averaged rows are skipped.
inline PlotData collect_plot_data(const CsvTable& table) {
  std::vector<std::string> missing;
  for (const auto& col : report_columns()) {
    if (!table.column(col)) missing.push_back(col);
  }
  if (!missing.empty()) {
    std::string msg = "CSV is missing column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  const auto c_k = *table.column("K"), c_alpha = *table.column("alpha"),
             c_est = *table.column("estimator"), c_mit = *table.column("mitigation"),
             c_kind = *table.column("noise_kind"), c_risk = *table.column("risk"),
             c_seed = *table.column("seed");

  PlotData data;
  std::map<std::string, std::map<double, std::pair<double, std::size_t>>> acc;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    if (row[c_risk] == kFailedMarker || row[c_seed] == "mean") continue;
    const auto k = parse_uint(row[c_k]);
    const auto alpha = parse_double(row[c_alpha]);
    const auto risk = parse_double(row[c_risk]);
    if (!k || *k < 2) throw ParseError(line, "column 'K': expected an integer >= 2");
    if (!alpha) throw ParseError(line, "column 'alpha': expected a number");
    if (!risk) throw ParseError(line, "column 'risk': expected a number");
    if (data.k == 0) data.k = static_cast<std::size_t>(*k);
    if (data.k != *k) throw ParseError(line, "column 'K': all rows must share one class count");
    const std::string label = row[c_est] + " / " + row[c_kind] + " / " + row[c_mit];
    if (!acc.count(label)) order.push_back(label);
    auto& cell = acc[label][*alpha];
    cell.first += 1.0 - *risk;
    cell.second += 1;
  }
  if (order.empty()) throw ValidationError("CSV contains no plottable rows");
  for (const auto& label : order) {
    PlotSeries s{label, {}};
    for (const auto& [alpha, sum] : acc[label]) {
      s.points.emplace_back(alpha, sum.first / static_cast<double>(sum.second));
    }
    data.series.push_back(std::move(s));
  }
  return data;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
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

}  // namespace detail

/// SVG chart with dashed reference lines at (K-1)/K and 1/(4(K-1)).
/// `source_hash` is embedded as provenance metadata.
inline std::string render_svg(const PlotData& data, std::string_view source_hash) {
  constexpr double width = 720, height = 460;
  constexpr double left = 70, right = 250, top = 40, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  auto px = [&](double alpha) { return format_fixed(left + alpha * plot_w, 2); };
  auto py = [&](double acc) { return format_fixed(top + (1.0 - acc) * plot_h, 2); };
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<metadata>source-csv-fnv1a64: " << source_hash << "</metadata>\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

  // axes and ticks
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << format_fixed(plot_w, 2)
      << "\" height=\"" << format_fixed(plot_h, 2) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << py(0) << "\" x2=\"" << px(t) << "\" y2=\""
        << format_fixed(top + plot_h + 5, 2) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px(t) << "\" y=\"" << format_fixed(top + plot_h + 20, 2)
        << "\" text-anchor=\"middle\">" << format_fixed(t, 1) << "</text>\n"
        << "<line x1=\"" << format_fixed(left - 5, 2) << "\" y1=\"" << py(t) << "\" x2=\"" << left
        << "\" y2=\"" << py(t) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << format_fixed(left - 8, 2) << "\" y=\"" << format_fixed(top + (1.0 - t) * plot_h + 4, 2)
        << "\" text-anchor=\"end\">" << format_fixed(t, 1) << "</text>\n";
  }
  svg << "<text x=\"" << format_fixed(left + plot_w / 2, 2) << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">noise level alpha</text>\n"
      << "<text x=\"18\" y=\"" << format_fixed(top + plot_h / 2, 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << format_fixed(top + plot_h / 2, 2)
      << ")\">accuracy (1 - risk)</text>\n"
      << "<text x=\"" << format_fixed(left + plot_w / 2, 2) << "\" y=\"24\" text-anchor=\"middle\">"
      << "K = " << data.k << "</text>\n";

  // reference lines
  const double limit = static_cast<double>(data.k - 1) / static_cast<double>(data.k);
  const double tolerance = 1.0 / (4.0 * static_cast<double>(data.k - 1));
  auto vline = [&](double x, const char* color, const std::string& label, double label_y) {
    svg << "<line x1=\"" << px(x) << "\" y1=\"" << top << "\" x2=\"" << px(x) << "\" y2=\""
        << py(0) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/>\n"
        << "<text x=\"" << format_fixed(left + x * plot_w + 4, 2) << "\" y=\"" << format_fixed(label_y, 2)
        << "\" fill=\"" << color << "\">" << detail::xml_escape(label) << "</text>\n";
  };
  vline(limit, "#e6a700", "(K-1)/K = " + format_fixed(limit, 4), top + 14);
  vline(tolerance, "#888888", "1/(4(K-1)) = " + format_fixed(tolerance, 4), top + 30);

  // series
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const auto& s = data.series[i];
    const char* color = palette[i % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      svg << (j ? " " : "") << px(s.points[j].first) << ',' << py(s.points[j].second);
    }
    svg << "\"/>\n";
    for (const auto& [a, v] : s.points) {
      svg << "<circle cx=\"" << px(a) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"" << format_fixed(width - right + 15, 2) << "\" y1=\"" << format_fixed(ly, 2)
        << "\" x2=\"" << format_fixed(width - right + 35, 2) << "\" y2=\"" << format_fixed(ly, 2)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << format_fixed(width - right + 40, 2) << "\" y=\"" << format_fixed(ly + 4, 2)
        << "\" font-size=\"10\">" << detail::xml_escape(s.label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

/// Parses CSV text in the sweep schema and renders it.
inline std::string plot_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  const CsvTable table = read_csv(in);
  return render_svg(collect_plot_data(table), to_hex(fnv1a(csv_text)));
}

}  // namespace labelnoise
