#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "birchtl/vecmath.hpp"

namespace birchtl {

// Label reserved for density-based noise.
inline constexpr int kNoise = -1;

struct LabelAssignment {
  std::vector<int> labels;  // kNoise or a cluster index in [0, k)
  std::size_t k = 0;

  std::size_t noise_count() const;
};

// Renumbers non-negative labels in order of first appearance; negative
// labels become kNoise.
LabelAssignment relabel_by_first_appearance(const std::vector<int>& raw);

// ---------------------------------------------------------------------------
// k-means

// k distinct samples drawn as the first k positions of a partial
// Fisher-Yates shuffle driven by Rng(seed).
std::vector<FeatureVector> pick_initial_centroids(const Dataset& data, std::size_t k,
                                                  std::uint64_t seed);

struct KMeansResult {
  std::vector<FeatureVector> centroids;
  LabelAssignment assignment;
  std::size_t iterations = 0;
  double sse = 0.0;
};

// Lloyd iteration until the assignment is stable or max_iter update steps
// have run. An empty cluster is reseeded with the sample farthest from its
// own centroid.
KMeansResult kmeans_fit(const Dataset& data, std::size_t k,
                        std::vector<FeatureVector> initial_centroids, std::size_t max_iter);

// Mini-batch k-means (Sculley). Initial centroids come from
// pick_initial_centroids(data, k, seed); every iteration then draws
// batch_size distinct samples from the same generator (the whole dataset
// in order once batch_size >= n) and moves each centroid towards its
// assigned samples with learning rate 1 / (lifetime count).
KMeansResult minibatch_kmeans_fit(const Dataset& data, std::size_t k, std::size_t batch_size,
                                  std::uint64_t seed, std::size_t max_iter);

double sum_squared_error(const Dataset& data, const std::vector<FeatureVector>& centroids,
                         const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// DBSCAN

struct DbscanResult {
  LabelAssignment assignment;
  std::vector<bool> core;
  std::size_t neighborhood_entries = 0;  // stored neighbour indices
};

// Closed-ball neighbourhoods (distance <= eps) that include the point
// itself. Core points are clustered by density reachability; a border
// point joins the cluster of its nearest core neighbour, which makes the
// partition independent of the input order.
DbscanResult dbscan_fit(const Dataset& data, double eps, std::size_t min_samples);

// ---------------------------------------------------------------------------
// Agglomerative

enum class Linkage { single, complete };

struct ClusterCount {
  std::size_t k;
};
struct DistanceThreshold {
  double distance;  // merge while the closest pair is at most this far apart
};
using AgglomerativeStop = std::variant<ClusterCount, DistanceThreshold>;

// Cluster ids follow the usual dendrogram convention: samples are 0..n-1,
// the cluster formed by merge m is n + m.
struct Merge {
  std::size_t a;
  std::size_t b;
  double distance;
  std::size_t size;
};

struct AgglomerativeResult {
  LabelAssignment assignment;
  std::vector<Merge> merges;
  std::size_t distance_entries = 0;  // n(n-1)/2
};

AgglomerativeResult agglomerative_fit(const Dataset& data, Linkage linkage,
                                      AgglomerativeStop stop);

}  // namespace birchtl
