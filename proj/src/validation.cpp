#include "birchtl/validation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <thread>

#include "birchtl/error.hpp"

namespace birchtl {

namespace {

void check_inputs(const Dataset& data, std::span<const int> labels) {
  if (data.empty()) throw InvalidArgument("silhouette: empty data");
  if (labels.size() != data.size()) {
    throw InvalidArgument("silhouette: one label per sample is required");
  }
}

}  // namespace

SilhouetteReport silhouette(const Dataset& data, std::span<const int> labels, unsigned threads) {
  check_inputs(data, labels);

  SilhouetteReport rep;
  std::map<int, std::size_t> slot_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      ++rep.excluded_noise_count;
    } else {
      slot_of.emplace(labels[i], 0);
      rep.sample_indices.push_back(i);
    }
  }
  if (slot_of.size() < 2) {
    throw InvalidArgument("silhouette undefined: fewer than 2 clusters after noise exclusion");
  }

  std::vector<int> slot_label;
  for (auto& [label, slot] : slot_of) {
    slot = slot_label.size();
    slot_label.push_back(label);
  }
  const std::size_t k = slot_label.size();
  const std::size_t m = rep.sample_indices.size();
  std::vector<std::size_t> slot(m), sizes(k, 0);
  for (std::size_t s = 0; s < m; ++s) {
    slot[s] = slot_of[labels[rep.sample_indices[s]]];
    ++sizes[slot[s]];
  }

  rep.per_sample.assign(m, 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> sums(k);
    for (std::size_t s = begin; s < end; ++s) {
      const std::size_t own = slot[s];
      if (sizes[own] == 1) continue;
      std::fill(sums.begin(), sums.end(), 0.0);
      const auto x = data.row(rep.sample_indices[s]);
      for (std::size_t t = 0; t < m; ++t) {
        if (t != s) sums[slot[t]] += euclidean_distance(x, data.row(rep.sample_indices[t]));
      }
      const double a = sums[own] / static_cast<double>(sizes[own] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
      }
      const double denom = std::max(a, b);
      rep.per_sample[s] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (m + 63) / 64));
  if (workers <= 1) {
    work(0, m);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (m + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(m, w * chunk);
      const std::size_t end = std::min(m, begin + chunk);
      pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  std::vector<double> cluster_sum(k, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    total += rep.per_sample[s];
    cluster_sum[slot[s]] += rep.per_sample[s];
  }
  rep.mean_si = total / static_cast<double>(m);
  for (std::size_t c = 0; c < k; ++c) {
    rep.per_cluster.push_back({slot_label[c], sizes[c], cluster_sum[c] / static_cast<double>(sizes[c])});
  }
  return rep;
}

double silhouette_oracle(const Dataset& data, std::span<const int> labels) {
  check_inputs(data, labels);

  std::map<int, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) clusters[labels[i]].push_back(i);
  }
  if (clusters.size() < 2) {
    throw InvalidArgument("silhouette undefined: fewer than 2 clusters after noise exclusion");
  }

  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [label, members] : clusters) {
    for (std::size_t j : members) {
      ++n;
      if (members.size() == 1) continue;

      double a = 0.0;
      for (std::size_t other : members) {
        if (other != j) a += euclidean_distance(data.row(j), data.row(other));
      }
      a /= static_cast<double>(members.size() - 1);

      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other_label, other_members] : clusters) {
        if (other_label == label) continue;
        double mean = 0.0;
        for (std::size_t o : other_members) mean += euclidean_distance(data.row(j), data.row(o));
        mean /= static_cast<double>(other_members.size());
        if (mean < b) b = mean;
      }

      if (std::max(a, b) > 0.0) sum += (b - a) / std::max(a, b);
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace birchtl
