#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "birchtl/dataset_io.hpp"

namespace birchtl {

// Stand-in for a production dataset: ppv_count groups ("production process
// variants") of samples_per_ppv feature vectors each.
//
// Group centres sit on a regular simplex (scaled unit vectors) with every
// pairwise distance equal to `separation` when ppv_count <= dim, or are drawn
// as Gaussian points with expected pairwise distance `separation` otherwise.
// Samples are centre + isotropic Gaussian noise with per-coordinate standard
// deviation spread / sqrt(dim). The expected squared distance of a sample
// from its centre is therefore spread^2 whatever the dimension, so the
// within-group radius that a BIRCH threshold is compared against does not
// change with dim.
struct SyntheticSpec {
  std::size_t ppv_count = 10;
  std::size_t samples_per_ppv = 100;
  std::size_t dim = 50;
  double separation = 3.0;
  double spread = 0.45;
  std::uint64_t seed = 0;

  void validate() const;
};

// Rows are grouped by PPV: all samples of PPV 0, then PPV 1, and so on.
LabeledDataset gen_synthetic(const SyntheticSpec& spec);

// Rows reordered by a seeded uniform permutation.
LabeledDataset shuffled(const LabeledDataset& ds, std::uint64_t seed);

// The rows of each PPV in `order`, one chunk per PPV, keeping row order.
std::vector<Dataset> chunks_by_ppv(const LabeledDataset& ds, std::span<const int> order);

// Distinct PPV ids in ascending order.
std::vector<int> ppv_ids(const LabeledDataset& ds);

}  // namespace birchtl
