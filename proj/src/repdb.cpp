#include "birchtl/repdb.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "birchtl/error.hpp"

namespace birchtl {

using ordered_json = nlohmann::ordered_json;

bool RepresentationFilter::matches(const Representation& rep) const {
  if (task_id && rep.task_id != *task_id) return false;
  if (sensor_type && rep.sensor_type != *sensor_type) return false;
  if (label && rep.label != *label) return false;
  if (measured_from && rep.measured_at < *measured_from) return false;
  if (measured_to && rep.measured_at > *measured_to) return false;
  return true;
}

std::uint64_t RepresentationDb::insert(Representation rep) {
  require_finite(rep.vector);
  if (dim_ != 0 && rep.vector.size() != dim_) throw DimensionMismatch(dim_, rep.vector.size());
  dim_ = rep.vector.size();
  rep.id = next_id_++;
  entries_.push_back(std::move(rep));
  return entries_.back().id;
}

std::vector<Representation> RepresentationDb::query(const RepresentationFilter& filter) const {
  std::vector<Representation> out;
  for (const auto& e : entries_) {
    if (filter.matches(e)) out.push_back(e);
  }
  return out;
}

void RepresentationDb::merge_import(const RepresentationDb& imported) {
  if (imported.empty()) return;
  if (dim_ != 0 && imported.dim_ != dim_) throw DimensionMismatch(dim_, imported.dim_);
  for (const auto& e : imported.entries_) insert(e);
}

RetentionReport RepresentationDb::retain_exemplars(const CfTree& tree, std::size_t cap) {
  if (tree.empty()) throw InvalidArgument("retain_exemplars: the CF-tree is empty");
  if (cap < 1) throw InvalidArgument("retain_exemplars: cap must be positive");
  if (!empty() && tree.dim() != dim_) throw DimensionMismatch(tree.dim(), dim_);

  const auto cents = tree.centroids();
  struct Ranked {
    double dist2;
    std::uint64_t id;
    std::size_t pos;
  };
  std::vector<std::vector<Ranked>> per(cents.size());
  for (std::size_t p = 0; p < entries_.size(); ++p) {
    const auto& v = entries_[p].vector;
    const std::size_t c = nearest_index(cents, v);
    per[c].push_back({squared_distance(v, cents[c]), entries_[p].id, p});
  }

  RetentionReport report;
  std::vector<bool> keep(entries_.size(), false);
  for (std::size_t c = 0; c < per.size(); ++c) {
    auto& list = per[c];
    std::sort(list.begin(), list.end(), [](const Ranked& a, const Ranked& b) {
      return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.id < b.id;
    });
    const std::size_t kept = std::min(cap, list.size());
    for (std::size_t i = 0; i < kept; ++i) keep[list[i].pos] = true;
    report.rows.push_back({c, kept, list.size() - kept});
    report.kept += kept;
    report.dropped += list.size() - kept;
  }

  std::vector<Representation> retained;
  retained.reserve(report.kept);
  for (std::size_t p = 0; p < entries_.size(); ++p) {
    if (keep[p]) retained.push_back(std::move(entries_[p]));
  }
  entries_ = std::move(retained);
  return report;
}

Dataset RepresentationDb::vectors() const {
  Dataset out(dim_);
  for (const auto& e : entries_) out.push_back(e.vector);
  return out;
}

void RepresentationDb::save(std::ostream& out) const {
  for (const auto& e : entries_) {
    ordered_json j;
    j["id"] = e.id;
    j["vector"] = e.vector;
    j["task_id"] = e.task_id;
    j["sensor_type"] = e.sensor_type;
    j["measured_at"] = e.measured_at;
    if (e.label) {
      j["label"] = *e.label;
    } else {
      j["label"] = nullptr;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw Error("failed to write representation database");
}

void RepresentationDb::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save(out);
}

namespace {

Representation parse_record(const std::string& line, std::size_t lineno) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(lineno, "record is not a JSON object");

  static const std::set<std::string> keys{"id", "vector", "task_id", "sensor_type", "measured_at",
                                          "label"};
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw ParseError(lineno, "unknown key '" + key + "'");
  }
  for (const auto& key : keys) {
    if (!j.contains(key)) throw ParseError(lineno, "missing key '" + key + "'");
  }

  Representation rep;
  const auto& id = j["id"];
  if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<std::int64_t>() >= 0)) {
    throw ParseError(lineno, "'id' must be a non-negative integer");
  }
  rep.id = id.get<std::uint64_t>();

  const auto& vec = j["vector"];
  if (!vec.is_array() || vec.empty()) throw ParseError(lineno, "'vector' must be a non-empty array");
  for (const auto& v : vec) {
    if (!v.is_number()) throw ParseError(lineno, "'vector' must contain numbers only");
    rep.vector.push_back(v.get<double>());
  }
  try {
    require_finite(rep.vector);
  } catch (const InvalidArgument& e) {
    throw ParseError(lineno, e.what());
  }

  if (!j["task_id"].is_string()) throw ParseError(lineno, "'task_id' must be a string");
  rep.task_id = j["task_id"].get<std::string>();
  if (!j["sensor_type"].is_string()) throw ParseError(lineno, "'sensor_type' must be a string");
  rep.sensor_type = j["sensor_type"].get<std::string>();
  if (!j["measured_at"].is_number_integer()) {
    throw ParseError(lineno, "'measured_at' must be an integer");
  }
  rep.measured_at = j["measured_at"].get<std::int64_t>();
  const auto& label = j["label"];
  if (label.is_string()) {
    rep.label = label.get<std::string>();
  } else if (!label.is_null()) {
    throw ParseError(lineno, "'label' must be a string or null");
  }
  return rep;
}

}  // namespace

RepresentationDb RepresentationDb::load(std::istream& in) {
  RepresentationDb db;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::uint64_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(lineno, "empty record");
    Representation rep = parse_record(line, lineno);
    if (db.dim_ != 0 && rep.vector.size() != db.dim_) {
      throw ParseError(lineno, "vector dimension " + std::to_string(rep.vector.size()) +
                                   " differs from " + std::to_string(db.dim_));
    }
    if (!seen.insert(rep.id).second) {
      throw ParseError(lineno, "duplicate id " + std::to_string(rep.id));
    }
    db.dim_ = rep.vector.size();
    db.next_id_ = std::max(db.next_id_, rep.id + 1);
    db.entries_.push_back(std::move(rep));
  }
  std::stable_sort(db.entries_.begin(), db.entries_.end(),
                   [](const Representation& a, const Representation& b) { return a.id < b.id; });
  return db;
}

RepresentationDb RepresentationDb::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load(in);
}

}  // namespace birchtl
