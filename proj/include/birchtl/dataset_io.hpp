#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "birchtl/vecmath.hpp"

namespace birchtl {

// Feature vectors with an optional per-sample group id (the PPV column).
struct LabeledDataset {
  Dataset data;
  std::vector<int> ppv;  // empty, or one entry per row

  bool has_ppv() const noexcept { return !ppv.empty(); }
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// CSV with header f0..f{d-1} and an optional trailing `ppv` column. Comma
// separated, '.' decimal point, LF line endings.
LabeledDataset read_dataset_csv(std::istream& in);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const LabeledDataset& ds);
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& ds);

// Single `label` column.
std::vector<int> read_labels_csv(std::istream& in);
std::vector<int> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(std::ostream& out, const std::vector<int>& labels);

// One number per line; an optional non-numeric first line is a header.
std::vector<double> read_metric_history(std::istream& in);
std::vector<double> read_metric_history(const std::filesystem::path& path);

}  // namespace birchtl
