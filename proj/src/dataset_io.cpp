#include "birchtl/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "birchtl/error.hpp"

namespace birchtl {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("failed to format a number");
  return {buf, ptr};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

bool parse_int(const std::string& text, int& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

template <typename F>
auto with_file(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return f(in);
}

}  // namespace

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  auto header = split_fields(trim(line));
  for (auto& h : header) h = trim(h);

  bool has_ppv = !header.empty() && header.back() == "ppv";
  const std::size_t dim = header.size() - (has_ppv ? 1 : 0);
  if (dim == 0) throw ParseError(1, "no feature columns");
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw ParseError(1, "expected column 'f" + std::to_string(j) + "', found '" + header[j] + "'");
    }
  }

  LabeledDataset ds;
  ds.data = Dataset(dim);
  std::vector<double> row(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    if (fields.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!parse_double(fields[j], row[j]) || !std::isfinite(row[j])) {
        throw ParseError(lineno, "column f" + std::to_string(j) + " is not a finite number");
      }
    }
    if (has_ppv) {
      int p;
      if (!parse_int(fields.back(), p)) throw ParseError(lineno, "ppv is not an integer");
      ds.ppv.push_back(p);
    }
    ds.data.push_back(row);
  }
  return ds;
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_dataset_csv(in); });
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& ds) {
  const std::size_t d = ds.data.dim();
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'f' << j;
  if (ds.has_ppv()) out << ",ppv";
  out << '\n';
  for (std::size_t i = 0; i < ds.data.size(); ++i) {
    const auto r = ds.data.row(i);
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << format_double(r[j]);
    if (ds.has_ppv()) out << ',' << ds.ppv[i];
    out << '\n';
  }
  if (!out) throw Error("failed to write dataset");
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_dataset_csv(out, ds);
}

std::vector<int> read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "label") {
    throw ParseError(1, "expected header 'label'");
  }
  std::vector<int> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    int v;
    if (!parse_int(line, v)) throw ParseError(lineno, "label is not an integer");
    out.push_back(v);
  }
  return out;
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_labels_csv(in); });
}

void write_labels_csv(std::ostream& out, const std::vector<int>& labels) {
  out << "label\n";
  for (int l : labels) out << l << '\n';
}

std::vector<double> read_metric_history(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    double v;
    if (!parse_double(line, v)) {
      if (lineno == 1) continue;
      throw ParseError(lineno, "metric value is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> read_metric_history(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_metric_history(in); });
}

}  // namespace birchtl
