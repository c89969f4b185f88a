#include "birchtl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "birchtl/cftree.hpp"
#include "birchtl/error.hpp"
#include "birchtl/random.hpp"

namespace birchtl {

std::size_t LabelAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

LabelAssignment relabel_by_first_appearance(const std::vector<int>& raw) {
  LabelAssignment out;
  out.labels.reserve(raw.size());
  std::map<int, int> renum;
  for (int l : raw) {
    if (l < 0) {
      out.labels.push_back(kNoise);
      continue;
    }
    auto [it, inserted] = renum.try_emplace(l, static_cast<int>(renum.size()));
    out.labels.push_back(it->second);
  }
  out.k = renum.size();
  return out;
}

namespace {

void check_k(const Dataset& data, std::size_t k) {
  if (data.empty()) throw InvalidArgument("k-means: empty data");
  if (k < 1 || k > data.size()) throw InvalidArgument("k-means: k must lie in [1, n]");
}

std::vector<int> assign_nearest(const Dataset& data, const std::vector<FeatureVector>& centroids) {
  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    labels[i] = static_cast<int>(nearest_index(centroids, data.row(i)));
  }
  return labels;
}

}  // namespace

std::vector<FeatureVector> pick_initial_centroids(const Dataset& data, std::size_t k,
                                                  std::uint64_t seed) {
  check_k(data, k);
  Rng rng(seed);
  std::vector<FeatureVector> out;
  for (auto i : rng.sample_without_replacement(data.size(), k)) {
    auto r = data.row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

double sum_squared_error(const Dataset& data, const std::vector<FeatureVector>& centroids,
                         const std::vector<int>& labels) {
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sse += squared_distance(data.row(i), centroids.at(static_cast<std::size_t>(labels[i])));
  }
  return sse;
}

KMeansResult kmeans_fit(const Dataset& data, std::size_t k,
                        std::vector<FeatureVector> centroids, std::size_t max_iter) {
  check_k(data, k);
  if (centroids.size() != k) throw InvalidArgument("k-means: need exactly k initial centroids");
  for (const auto& c : centroids) {
    if (c.size() != data.dim()) throw DimensionMismatch(data.dim(), c.size());
  }
  if (max_iter < 1) throw InvalidArgument("k-means: max_iter must be positive");

  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  KMeansResult res;
  std::vector<int> labels, previous;
  bool converged = false;
  for (std::size_t it = 0; it < max_iter; ++it) {
    labels = assign_nearest(data, centroids);
    if (labels == previous) {
      converged = true;
      break;
    }

    std::vector<std::size_t> counts(k, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Reseed with the sample farthest from its centroid, taken from a
      // cluster that can spare it.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (counts[own] < 2) continue;
        const double dd = squared_distance(data.row(i), centroids[own]);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      if (far == n) break;
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      counts[c] = 1;
    }

    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = data.row(i);
      auto& c = centroids[static_cast<std::size_t>(labels[i])];
      for (std::size_t j = 0; j < d; ++j) c[j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double cnt = static_cast<double>(counts[c]);
      for (auto& v : centroids[c]) v /= cnt;
    }
    ++res.iterations;
    previous = labels;
  }
  if (!converged) labels = assign_nearest(data, centroids);

  res.sse = sum_squared_error(data, centroids, labels);
  res.assignment.labels = std::move(labels);
  res.assignment.k = k;
  res.centroids = std::move(centroids);
  return res;
}

KMeansResult minibatch_kmeans_fit(const Dataset& data, std::size_t k, std::size_t batch_size,
                                  std::uint64_t seed, std::size_t max_iter) {
  check_k(data, k);
  if (batch_size < 1) throw InvalidArgument("mini-batch k-means: batch_size must be positive");
  if (max_iter < 1) throw InvalidArgument("mini-batch k-means: max_iter must be positive");

  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  Rng rng(seed);
  std::vector<FeatureVector> centroids;
  for (auto i : rng.sample_without_replacement(n, k)) {
    auto r = data.row(i);
    centroids.emplace_back(r.begin(), r.end());
  }

  std::vector<std::size_t> counts(k, 0);
  std::vector<std::size_t> batch;
  std::vector<std::size_t> cached;
  KMeansResult res;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (batch_size >= n) {
      batch.resize(n);
      for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    } else {
      batch = rng.sample_without_replacement(n, batch_size);
    }
    cached.resize(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      cached[b] = nearest_index(centroids, data.row(batch[b]));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::size_t c = cached[b];
      const double lr = 1.0 / static_cast<double>(++counts[c]);
      auto r = data.row(batch[b]);
      for (std::size_t j = 0; j < d; ++j) centroids[c][j] = (1.0 - lr) * centroids[c][j] + lr * r[j];
    }
    ++res.iterations;
  }

  res.assignment.labels = assign_nearest(data, centroids);
  res.assignment.k = k;
  res.sse = sum_squared_error(data, centroids, res.assignment.labels);
  res.centroids = std::move(centroids);
  return res;
}

DbscanResult dbscan_fit(const Dataset& data, double eps, std::size_t min_samples) {
  if (!(eps > 0.0)) throw InvalidArgument("DBSCAN: eps must be positive");
  if (min_samples < 1) throw InvalidArgument("DBSCAN: min_samples must be >= 1");

  const std::size_t n = data.size();
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbors(n);
  DbscanResult res;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (squared_distance(data.row(i), data.row(j)) <= eps2) neighbors[i].push_back(j);
    }
    res.neighborhood_entries += neighbors[i].size();
  }

  res.core.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.core[i] = neighbors[i].size() >= min_samples;

  // Connected components of the core points.
  std::vector<int> raw(n, kNoise);
  int next = 0;
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.core[i] || raw[i] != kNoise) continue;
    raw[i] = next;
    frontier.push_back(i);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (auto q : neighbors[p]) {
        if (res.core[q] && raw[q] == kNoise) {
          raw[q] = next;
          frontier.push_back(q);
        }
      }
    }
    ++next;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (res.core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (auto q : neighbors[i]) {
      if (!res.core[q]) continue;
      const double dd = squared_distance(data.row(i), data.row(q));
      if (dd < best) {
        best = dd;
        raw[i] = raw[q];
      }
    }
  }

  res.assignment = relabel_by_first_appearance(raw);
  return res;
}

AgglomerativeResult agglomerative_fit(const Dataset& data, Linkage linkage,
                                      AgglomerativeStop stop) {
  if (data.empty()) throw InvalidArgument("agglomerative: empty data");
  const std::size_t n = data.size();

  std::size_t target = 1;
  double max_distance = std::numeric_limits<double>::infinity();
  if (const auto* c = std::get_if<ClusterCount>(&stop)) {
    if (c->k < 1 || c->k > n) throw InvalidArgument("agglomerative: cluster count must lie in [1, n]");
    target = c->k;
  } else {
    const double t = std::get<DistanceThreshold>(stop).distance;
    if (std::isnan(t) || t < 0.0) throw InvalidArgument("agglomerative: distance threshold must be >= 0");
    max_distance = t;
  }

  // Condensed upper-triangular distance matrix.
  AgglomerativeResult res;
  res.distance_entries = n * (n - 1) / 2;
  std::vector<double> dist(res.distance_entries);
  auto idx = [n](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist[idx(i, j)] = euclidean_distance(data.row(i), data.row(j));
  }

  std::vector<bool> active(n, true);
  std::vector<std::size_t> cluster_id(n), sizes(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    cluster_id[i] = i;
    members[i] = {i};
  }

  // nn[i]: closest active j > i, ties to the lower j; n when none.
  std::vector<std::size_t> nn(n, n);
  auto rescan = [&](std::size_t i) {
    nn[i] = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double dd = dist[idx(i, j)];
      if (dd < best) {
        best = dd;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  std::size_t clusters = n;
  while (clusters > target) {
    std::size_t bi = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      const double dd = dist[idx(i, nn[i])];
      if (dd < best) {
        best = dd;
        bi = i;
      }
    }
    if (bi == n || best > max_distance) break;
    const std::size_t i = bi, j = nn[bi];

    res.merges.push_back({cluster_id[i], cluster_id[j], best, sizes[i] + sizes[j]});
    cluster_id[i] = n + res.merges.size() - 1;
    sizes[i] += sizes[j];
    members[i].insert(members[i].end(), members[j].begin(), members[j].end());
    members[j].clear();
    active[j] = false;
    --clusters;

    for (std::size_t r = 0; r < n; ++r) {
      if (!active[r] || r == i) continue;
      double& dri = dist[idx(r, i)];
      const double drj = dist[idx(r, j)];
      dri = linkage == Linkage::single ? std::min(dri, drj) : std::max(dri, drj);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (!active[r]) continue;
      if (r == i || nn[r] == i || nn[r] == j) {
        rescan(r);
      } else if (r < i) {
        const double dri = dist[idx(r, i)];
        const double cur = dist[idx(r, nn[r])];
        if (dri < cur || (dri == cur && i < nn[r])) nn[r] = i;
      }
    }
  }

  std::vector<int> raw(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (auto m : members[c]) raw[m] = static_cast<int>(c);
  }
  res.assignment = relabel_by_first_appearance(raw);
  return res;
}

}  // namespace birchtl
