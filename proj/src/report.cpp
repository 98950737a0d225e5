#include "hte/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hte/csv.hpp"
#include "hte/error.hpp"

namespace hte {

void ReportTable::validate() const {
  for (const auto& r : rows)
    if (r.cells.size() != columns.size())
      throw ShapeError("report", "row '" + r.label + "' has " + std::to_string(r.cells.size()) + " cells, expected " +
                                     std::to_string(columns.size()));
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  std::string s(buffer);
  // Avoid a signed zero such as "-0.00".
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_share(double pct) { return format_fixed(pct, 0) + "%"; }

std::string render_report(const ReportTable& t, ReportFormat format) {
  t.validate();
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << csv::csv_escape(t.corner);
    for (const auto& c : t.columns) out << ',' << csv::csv_escape(c);
    out << '\n';
    for (const auto& r : t.rows) {
      out << csv::csv_escape(r.label);
      for (const auto& c : r.cells) out << ',' << csv::csv_escape(c);
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::size_t> width(t.columns.size() + 1, 0);
  width[0] = t.corner.size();
  for (std::size_t j = 0; j < t.columns.size(); ++j) width[j + 1] = t.columns[j].size();
  for (const auto& r : t.rows) {
    width[0] = std::max(width[0], r.label.size());
    for (std::size_t j = 0; j < r.cells.size(); ++j) width[j + 1] = std::max(width[j + 1], r.cells[j].size());
  }
  for (auto& w : width) w = std::max<std::size_t>(w, 3);
  const auto line = [&](const std::string& label, const std::vector<std::string>& cells) {
    out << "| " << label << std::string(width[0] - label.size(), ' ');
    for (std::size_t j = 0; j < cells.size(); ++j)
      out << " | " << std::string(width[j + 1] - cells[j].size(), ' ') << cells[j];
    out << " |\n";
  };
  if (!t.title.empty()) out << "### " << t.title << "\n\n";
  line(t.corner, t.columns);
  out << "|" << std::string(width[0] + 2, '-');
  for (std::size_t j = 0; j < t.columns.size(); ++j) out << "|" << std::string(width[j + 1] + 1, '-') << ':';
  out << "|\n";
  for (const auto& r : t.rows) line(r.label, r.cells);
  if (!t.footnote.empty()) out << '\n' << t.footnote << '\n';
  return out.str();
}

}  // namespace hte
