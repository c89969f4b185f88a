#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "birchtl/cftree.hpp"
#include "birchtl/repdb.hpp"

namespace birchtl {

// ---------------------------------------------------------------------------
// Transfer demand check

struct DemandCheckConfig {
  std::size_t baseline_window = 10;
  std::size_t recent_window = 5;
  double degradation_ratio = 0.2;  // in (0, 1)

  void validate() const;
};

struct DemandCheckResult {
  bool triggered = false;
  double baseline = 0.0;
  double recent = 0.0;
};

// Metrics are higher-is-better. `recent` is the mean of the last
// recent_window values and `baseline` the mean of the baseline_window values
// just before them. Triggers iff recent < baseline * (1 - degradation_ratio).
DemandCheckResult demand_check(std::span<const double> metric_history,
                               const DemandCheckConfig& config);

// ---------------------------------------------------------------------------
// Similarity check

struct SimilarityConfig {
  double similarity_threshold = 0.6;  // same scale as the BIRCH threshold
  double min_matched_fraction = 0.5;  // in (0, 1]

  void validate() const;
};

enum class TransferOutcome { transfer, no_transfer };

struct TransferCandidate {
  std::string task_id;
  double mean_similarity;   // in [0, 1]
  double matched_fraction;  // in [0, 1]
};

struct QueryMatch {
  std::size_t subcluster;
  double distance;
  bool matched;
  std::optional<std::string> dominant_task;  // none for a subcluster without db entries
};

struct TransferDecision {
  TransferOutcome outcome = TransferOutcome::no_transfer;
  std::vector<TransferCandidate> candidates;  // similarity desc, then task_id asc
  std::vector<QueryMatch> per_vector;         // aligned with the query
};

// Majority task_id of the db entries nearest to each subcluster centroid,
// ties to the lexicographically smaller task_id.
std::vector<std::optional<std::string>> dominant_tasks(const RepresentationDb& db,
                                                       const CfTree& tree);

// Each query vector goes to its nearest subcluster and matches when it lies
// within similarity_threshold of the centroid. A match scores
// 1 - distance / similarity_threshold and counts for the subcluster's
// dominant task. Tasks matching at least min_matched_fraction of the query
// become candidates.
TransferDecision similarity_check(const RepresentationDb& db, const CfTree& tree,
                                  const Dataset& query, const SimilarityConfig& config = {});

// First min(top_k, candidates) task ids; empty without a transfer.
std::vector<std::string> select_transfer_cases(const TransferDecision& decision,
                                               std::size_t top_k);

}  // namespace birchtl
