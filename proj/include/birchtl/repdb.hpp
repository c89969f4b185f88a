#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "birchtl/cftree.hpp"
#include "birchtl/vecmath.hpp"

namespace birchtl {

// A stored feature vector together with its context.
struct Representation {
  std::uint64_t id = 0;
  FeatureVector vector;
  std::string task_id;
  std::string sensor_type;
  std::int64_t measured_at = 0;  // seconds since epoch, UTC
  std::optional<std::string> label;

  friend bool operator==(const Representation&, const Representation&) = default;
};

// Every provided predicate must hold. The time range is inclusive.
struct RepresentationFilter {
  std::optional<std::string> task_id;
  std::optional<std::string> sensor_type;
  std::optional<std::string> label;
  std::optional<std::int64_t> measured_from;
  std::optional<std::int64_t> measured_to;

  bool matches(const Representation& rep) const;
};

struct RetentionRow {
  std::size_t subcluster;
  std::size_t kept;
  std::size_t dropped;
};

struct RetentionReport {
  std::vector<RetentionRow> rows;  // one per subcluster, in subcluster order
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

// Entries are kept in ascending id order. Reads may run concurrently;
// writes need exclusive access.
class RepresentationDb {
 public:
  RepresentationDb() = default;

  // Stores `rep` under a fresh id (rep.id is ignored) and returns the id.
  std::uint64_t insert(Representation rep);

  std::vector<Representation> query(const RepresentationFilter& filter) const;

  // Appends the imported entries under fresh ids; existing ids stay.
  void merge_import(const RepresentationDb& imported);

  // Per subcluster of `tree` (entries assigned by nearest centroid), keeps
  // the `per_cluster_cap` entries closest to the centroid, ties to the lower
  // id, and drops the rest.
  RetentionReport retain_exemplars(const CfTree& tree, std::size_t per_cluster_cap);

  const std::vector<Representation>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t next_id() const noexcept { return next_id_; }

  // Vectors in entry order.
  Dataset vectors() const;

  // JSON Lines: one object per line with keys id, vector, task_id,
  // sensor_type, measured_at, label. Unknown or missing keys are rejected
  // with a ParseError naming the line.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static RepresentationDb load(std::istream& in);
  static RepresentationDb load(const std::filesystem::path& path);

  // Compares contents (dimension and entries), not the id counter.
  friend bool operator==(const RepresentationDb& a, const RepresentationDb& b) {
    return a.dim_ == b.dim_ && a.entries_ == b.entries_;
  }

 private:
  std::vector<Representation> entries_;
  std::size_t dim_ = 0;
  std::uint64_t next_id_ = 0;
};

}  // namespace birchtl
