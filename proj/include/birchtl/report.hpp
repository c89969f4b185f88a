#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace birchtl {

// Empty cell, integer, real, text or flag.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, Cell>> parameters;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Cell>> summary;
  // Columns that make up the plot-ready table (x, series, y); empty when the
  // experiment has no figure-style output.
  std::vector<std::string> plot_columns;

  // Throws InvalidArgument when the row width differs from columns.size().
  void add_row(std::vector<Cell> row);
  std::size_t column_index(const std::string& column) const;
};

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(const std::string& text);

// Header row plus one line per row. Reals use the shortest round-trip
// representation, empty cells stay empty, text containing a comma or quote
// is quoted.
std::string to_csv(const ExperimentReport& report);
std::string to_json(const ExperimentReport& report, int indent = 2);
// CSV of just plot_columns.
std::string plot_data(const ExperimentReport& report);

// Writes the report to `destination`; for figure-style reports also writes
// the plot table next to it as <stem>.plot.csv.
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& destination);

std::filesystem::path plot_path_for(const std::filesystem::path& destination);

}  // namespace birchtl
