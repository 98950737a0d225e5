#pragma once

#include <string>
#include <vector>

namespace hte {

struct ReportRow {
  std::string label;
  std::vector<std::string> cells;
};

struct ReportTable {
  std::string title;
  std::string corner;  // header of the label column
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  std::string footnote;

  // Throws ShapeError when a row's width differs from the column count.
  void validate() const;
};

enum class ReportFormat { Csv, Markdown };

std::string render_report(const ReportTable& t, ReportFormat format);

// Percentage with no decimals and a percent sign, e.g. "54%".
std::string format_share(double pct);
// Fixed-point with the given number of decimals.
std::string format_fixed(double value, int decimals);
// p-values use two decimals.
inline std::string format_p(double p) { return format_fixed(p, 2); }

}  // namespace hte
