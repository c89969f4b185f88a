#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "birchtl/vecmath.hpp"

namespace birchtl {

struct ClusterSilhouette {
  int label;
  std::size_t size;
  double mean;
};

struct SilhouetteReport {
  // s-values of the scored samples (noise excluded), aligned with
  // sample_indices.
  std::vector<double> per_sample;
  std::vector<std::size_t> sample_indices;
  std::vector<ClusterSilhouette> per_cluster;  // ascending label
  double mean_si = 0.0;
  std::size_t excluded_noise_count = 0;
};

// Silhouette index over the samples with a non-negative label; negative
// labels count as noise and are skipped. Clusters are the distinct
// non-negative labels, which need not be contiguous. A sample alone in its
// cluster scores 0. Values lie in [-1, 1].
//
// Work is split across `threads` workers (0 = hardware concurrency); the
// result does not depend on the split.
SilhouetteReport silhouette(const Dataset& data, std::span<const int> labels,
                            unsigned threads = 0);

// Mean silhouette by direct transcription of the definition: loop over
// clusters, over members, over every other cluster. Used to cross-check
// silhouette().
double silhouette_oracle(const Dataset& data, std::span<const int> labels);

}  // namespace birchtl
