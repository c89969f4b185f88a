#include "birchtl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "birchtl/error.hpp"

namespace birchtl {

void DemandCheckConfig::validate() const {
  if (baseline_window < 1 || recent_window < 1) {
    throw InvalidArgument("demand check windows must be >= 1");
  }
  if (!(degradation_ratio > 0.0 && degradation_ratio < 1.0)) {
    throw InvalidArgument("degradation_ratio must lie in (0, 1)");
  }
}

DemandCheckResult demand_check(std::span<const double> history, const DemandCheckConfig& config) {
  config.validate();
  const std::size_t need = config.baseline_window + config.recent_window;
  if (history.size() < need) {
    throw InvalidArgument("demand check needs " + std::to_string(need) +
                          " metric values, got " + std::to_string(history.size()));
  }
  for (double v : history) {
    if (!std::isfinite(v)) throw InvalidArgument("metric history contains a non-finite value");
  }
  const auto recent = history.last(config.recent_window);
  const auto baseline =
      history.subspan(history.size() - need, config.baseline_window);

  DemandCheckResult res;
  res.baseline = std::accumulate(baseline.begin(), baseline.end(), 0.0) /
                 static_cast<double>(baseline.size());
  res.recent = std::accumulate(recent.begin(), recent.end(), 0.0) /
               static_cast<double>(recent.size());
  res.triggered = res.recent < res.baseline * (1.0 - config.degradation_ratio);
  return res;
}

void SimilarityConfig::validate() const {
  if (!(similarity_threshold > 0.0)) throw InvalidArgument("similarity_threshold must be positive");
  if (!(min_matched_fraction > 0.0 && min_matched_fraction <= 1.0)) {
    throw InvalidArgument("min_matched_fraction must lie in (0, 1]");
  }
}

std::vector<std::optional<std::string>> dominant_tasks(const RepresentationDb& db,
                                                       const CfTree& tree) {
  if (tree.empty()) throw InvalidArgument("the CF-tree is empty");
  const auto cents = tree.centroids();
  std::vector<std::map<std::string, std::size_t>> votes(cents.size());
  for (const auto& e : db.entries()) {
    if (e.vector.size() != tree.dim()) throw DimensionMismatch(tree.dim(), e.vector.size());
    ++votes[nearest_index(cents, e.vector)][e.task_id];
  }
  std::vector<std::optional<std::string>> out(cents.size());
  for (std::size_t c = 0; c < cents.size(); ++c) {
    std::size_t best = 0;
    // std::map iterates task ids in ascending order, so strict > keeps the
    // lexicographically smallest among equal counts.
    for (const auto& [task, count] : votes[c]) {
      if (count > best) {
        best = count;
        out[c] = task;
      }
    }
  }
  return out;
}

TransferDecision similarity_check(const RepresentationDb& db, const CfTree& tree,
                                  const Dataset& query, const SimilarityConfig& config) {
  config.validate();
  if (db.empty()) throw InvalidArgument("similarity check against an empty database");
  if (tree.empty()) throw InvalidArgument("similarity check with an empty CF-tree");
  if (query.empty()) throw InvalidArgument("similarity check needs at least one query vector");
  if (query.dim() != tree.dim()) throw DimensionMismatch(tree.dim(), query.dim());
  if (db.dim() != tree.dim()) throw DimensionMismatch(tree.dim(), db.dim());

  const auto cents = tree.centroids();
  const auto dominant = dominant_tasks(db, tree);

  struct Tally {
    std::size_t matched = 0;
    double similarity_sum = 0.0;
  };
  std::map<std::string, Tally> tally;

  TransferDecision decision;
  decision.per_vector.reserve(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto x = query.row(i);
    const std::size_t c = nearest_index(cents, x);
    const double dist = euclidean_distance(x, cents[c]);
    const bool matched = dist <= config.similarity_threshold && dominant[c].has_value();
    decision.per_vector.push_back({c, dist, matched, dominant[c]});
    if (matched) {
      auto& t = tally[*dominant[c]];
      ++t.matched;
      t.similarity_sum += std::clamp(1.0 - dist / config.similarity_threshold, 0.0, 1.0);
    }
  }

  const double total = static_cast<double>(query.size());
  for (const auto& [task, t] : tally) {
    const double fraction = static_cast<double>(t.matched) / total;
    if (fraction >= config.min_matched_fraction) {
      decision.candidates.push_back(
          {task, t.similarity_sum / static_cast<double>(t.matched), fraction});
    }
  }
  std::stable_sort(decision.candidates.begin(), decision.candidates.end(),
                   [](const TransferCandidate& a, const TransferCandidate& b) {
                     if (a.mean_similarity != b.mean_similarity) {
                       return a.mean_similarity > b.mean_similarity;
                     }
                     return a.task_id < b.task_id;
                   });
  decision.outcome =
      decision.candidates.empty() ? TransferOutcome::no_transfer : TransferOutcome::transfer;
  return decision;
}

std::vector<std::string> select_transfer_cases(const TransferDecision& decision, std::size_t top_k) {
  std::vector<std::string> out;
  if (decision.outcome == TransferOutcome::no_transfer) return out;
  for (const auto& c : decision.candidates) {
    if (out.size() == top_k) break;
    out.push_back(c.task_id);
  }
  return out;
}

}  // namespace birchtl
