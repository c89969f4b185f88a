#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// under test beyond the Dataset container.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "birchtl/vecmath.hpp"

namespace oracle {

inline double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Root mean squared distance of the points to their mean.
inline double radius_of(const std::vector<std::vector<double>>& pts) {
  const std::size_t d = pts.front().size();
  std::vector<double> c(d, 0.0);
  for (const auto& p : pts)
    for (std::size_t j = 0; j < d; ++j) c[j] += p[j] / static_cast<double>(pts.size());
  double s = 0.0;
  for (const auto& p : pts)
    for (std::size_t j = 0; j < d; ++j) s += (p[j] - c[j]) * (p[j] - c[j]);
  return std::sqrt(s / static_cast<double>(pts.size()));
}

// Labels renumbered by first appearance, so equal partitions compare equal.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> m;
  std::vector<int> out;
  for (int l : labels) {
    if (l < 0) {
      out.push_back(-1);
      continue;
    }
    auto it = m.try_emplace(l, static_cast<int>(m.size())).first;
    out.push_back(it->second);
  }
  return out;
}

inline double sse(const birchtl::Dataset& data, const std::vector<int>& labels, int k) {
  const std::size_t d = data.dim();
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
  std::vector<double> cnt(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) sum[labels[i]][j] += r[j];
    cnt[labels[i]] += 1.0;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double m = sum[labels[i]][j] / cnt[labels[i]];
      s += (r[j] - m) * (r[j] - m);
    }
  }
  return s;
}

// Minimum within-cluster SSE over every partition of the samples into
// exactly k non-empty groups (restricted growth strings).
inline double brute_force_min_sse(const birchtl::Dataset& data, int k) {
  const std::size_t n = data.size();
  std::vector<int> labels(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == n) {
      if (used == k) best = std::min(best, sse(data, labels, k));
      return;
    }
    if (static_cast<int>(n - i) < k - used) return;
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      labels[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

// Connected components of the graph joining samples at distance <= t.
inline std::vector<int> threshold_components(const birchtl::Dataset& data, double t) {
  const std::size_t n = data.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist(data.row(i), data.row(j)) <= t) parent[find(i)] = find(j);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(find(i));
  return canonical(labels);
}

// Closed-form eigenvalues of a symmetric 2x2 matrix, descending.
inline std::pair<double, double> eig2(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {mid + rad, mid - rad};
}

}  // namespace oracle
