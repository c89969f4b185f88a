#include "birchtl/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "birchtl/dataset_io.hpp"
#include "birchtl/error.hpp"

namespace birchtl {

void ExperimentReport::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw InvalidArgument("report row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t ExperimentReport::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column) return i;
  }
  throw InvalidArgument("report has no column '" + column + "'");
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw InvalidArgument("unknown report format '" + text + "' (expected csv or json)");
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return std::isfinite(v) ? format_double(v) : ""; }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const {
      if (!std::isfinite(v)) return nullptr;
      return v;
    }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed to write " + path.string());
}

std::string csv_of(const ExperimentReport& report, const std::vector<std::size_t>& cols) {
  std::ostringstream out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << csv_escape(report.columns[cols[i]]);
  }
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cell_text(row[cols[i]]);
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string to_csv(const ExperimentReport& report) {
  std::vector<std::size_t> cols(report.columns.size());
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
  return csv_of(report, cols);
}

std::string plot_data(const ExperimentReport& report) {
  std::vector<std::size_t> cols;
  for (const auto& c : report.plot_columns) cols.push_back(report.column_index(c));
  return csv_of(report, cols);
}

std::string to_json(const ExperimentReport& report, int indent) {
  nlohmann::ordered_json j;
  j["experiment"] = report.name;
  auto& params = j["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.parameters) params[k] = cell_json(v);
  j["columns"] = report.columns;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[report.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(r));
  }
  auto& summary = j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.summary) summary[k] = cell_json(v);
  return j.dump(indent) + "\n";
}

std::filesystem::path plot_path_for(const std::filesystem::path& destination) {
  auto p = destination;
  p.replace_filename(destination.stem().string() + ".plot.csv");
  return p;
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& destination) {
  write_text(destination, format == ReportFormat::csv ? to_csv(report) : to_json(report));
  if (!report.plot_columns.empty()) write_text(plot_path_for(destination), plot_data(report));
}

}  // namespace birchtl
