#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "birchtl/vecmath.hpp"

namespace birchtl {

// BIRCH clustering feature: sample count, linear sum and sum of squared
// norms. Additive under merge.
struct ClusteringFeature {
  std::uint64_t n = 0;
  FeatureVector ls;
  double ss = 0.0;

  std::size_t dim() const noexcept { return ls.size(); }
  FeatureVector centroid() const;
  // sqrt(ss/n - |ls/n|^2), with the variance clamped at zero.
  double radius() const;
  double squared_distance_to_centroid(std::span<const double> x) const;

  ClusteringFeature& operator+=(const ClusteringFeature& other);

  friend bool operator==(const ClusteringFeature&, const ClusteringFeature&) = default;
};

ClusteringFeature cf_from_point(std::span<const double> x);
ClusteringFeature cf_merge(const ClusteringFeature& a, const ClusteringFeature& b);

struct BirchParams {
  double threshold = 0.6;            // maximum radius of a leaf subcluster
  std::size_t branching_factor = 50;  // maximum entries per node

  void validate() const;

  friend bool operator==(const BirchParams&, const BirchParams&) = default;
};

struct Subcluster {
  ClusteringFeature cf;
  FeatureVector centroid;
};

struct ClusterModel {
  std::vector<FeatureVector> centroids;
  std::vector<int> labels;

  std::size_t k() const noexcept { return centroids.size(); }
};

// Height-balanced CF-tree. Leaf entries are the subclusters; they are
// enumerated left to right, which defines the subcluster index used by
// insert(), predict() and subclusters().
//
// Mutation needs exclusive access; const members are safe to call
// concurrently.
class CfTree {
 public:
  explicit CfTree(BirchParams params = {});
  ~CfTree();
  CfTree(const CfTree& other);
  CfTree& operator=(const CfTree& other);
  CfTree(CfTree&&) noexcept;
  CfTree& operator=(CfTree&&) noexcept;

  const BirchParams& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t total_count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  // Inserts one sample; returns the index of the subcluster that absorbed it
  // (or the new subcluster created for it).
  std::size_t insert(std::span<const double> x);
  // Inserts every row of `chunk` in order. Equivalent to calling insert()
  // on each row, without computing the returned indices.
  void insert_all(const Dataset& chunk);

  // Nearest subcluster centroid, ties to the lower index. Does not modify
  // the tree.
  std::size_t predict(std::span<const double> x) const;
  std::vector<std::size_t> predict(const Dataset& data) const;

  std::vector<Subcluster> subclusters() const;
  std::vector<FeatureVector> centroids() const;
  std::size_t subcluster_count() const;
  std::size_t node_count() const;
  std::size_t height() const;

  // Centroids plus a label for every row of `data`, each label being the
  // nearest final centroid.
  ClusterModel model(const Dataset& data) const;

  // Returns one message per violated structural invariant (entry CFs equal
  // the merge of their children, node sizes, leaf radii, root count).
  std::vector<std::string> audit(double rel_tol = 1e-9) const;

  // Exact structural equality, including every floating point value.
  friend bool operator==(const CfTree& a, const CfTree& b);

  std::string to_json() const;
  static CfTree from_json(const std::string& text);

  struct Node;

 private:
  BirchParams params_;
  std::size_t dim_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t next_uid_ = 0;
  std::unique_ptr<Node> root_;

  std::uint64_t insert_point(std::span<const double> x);
};

// One-shot fit: folds insert() over the rows of `data` in order, then
// resolves labels against the final centroids.
struct BirchFit {
  CfTree tree;
  ClusterModel model;
};
BirchFit birch_fit(const BirchParams& params, const Dataset& data);

// Same as birch_fit, but inserting the chunks one after another.
BirchFit birch_fit_chunked(const BirchParams& params, const std::vector<Dataset>& chunks);

// Index of the nearest centroid (ties to the lower index).
std::size_t nearest_index(std::span<const FeatureVector> centroids, std::span<const double> x);

}  // namespace birchtl
