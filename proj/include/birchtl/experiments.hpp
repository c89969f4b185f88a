#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "birchtl/cftree.hpp"
#include "birchtl/report.hpp"
#include "birchtl/synthetic.hpp"

namespace birchtl {

// Runners for the evaluation protocols. Each one is deterministic in its
// inputs: the CSV output is byte-identical across reruns unless `timing`
// adds a wall-clock column.
struct RunOptions {
  BirchParams birch;
  bool timing = false;
};

// `count` PPV orders drawn as seeded uniform permutations. The first orders
// are the same for every count, so sequence i always means the same order.
std::vector<std::vector<int>> ppv_sequences(const std::vector<int>& ppv_ids, std::size_t count,
                                            std::uint64_t seed);

// Silhouette of a fitted labelling; NaN with `note` set when undefined.
double silhouette_or_nan(const Dataset& data, const std::vector<int>& labels, std::string& note);

// Training strategy and data sequence. For each PPV order: one fit over the
// concatenation (single training) and one fit inserting a PPV at a time
// (sequential training), plus a final row for all samples mixed.
// Columns: sequence_no, si_single, si_sequential, n_clusters,
// n_clusters_sequential, tree_identical, ppv_order, note.
ExperimentReport exp_sequence(const LabeledDataset& grouped, std::size_t permutation_count,
                              std::uint64_t seed, const RunOptions& opts = {});

// Repeats the fit of the first `sequence_count` orders of exp_sequence
// `repeats` times each and records the number of distinct (SI, k) outcomes.
ExperimentReport exp_reproducibility(const LabeledDataset& grouped, std::size_t repeats,
                                     std::size_t sequence_count, std::uint64_t seed,
                                     const RunOptions& opts = {});

// Dimensionality: matched-structure datasets at each source dim (all
// samples mixed), a native row, then one row per PCA target <= source dim.
ExperimentReport exp_dimensionality(const SyntheticSpec& spec,
                                    const std::vector<std::size_t>& source_dims,
                                    const std::vector<std::size_t>& target_dims,
                                    const RunOptions& opts = {});

// Volume: SI over the grid samples_per_ppv x threshold, with the standard
// deviation of SI across volumes per threshold in the summary.
ExperimentReport exp_volume(const SyntheticSpec& spec,
                            const std::vector<std::size_t>& samples_per_ppv,
                            const std::vector<double>& thresholds, const RunOptions& opts = {});

struct BenchConfig {
  std::vector<std::string> algorithms{"birch", "kmeans", "minibatch_kmeans", "dbscan",
                                      "agglomerative"};
  std::vector<std::size_t> sizes{200, 400, 800, 1600};
  BirchParams birch;
  std::size_t kmeans_max_iter = 100;
  std::size_t minibatch_size = 100;
  double dbscan_eps = 0.6;
  std::size_t dbscan_min_samples = 5;
};

// Wall time and model-size proxy per algorithm and size, with log-log
// growth exponents in the summary.
ExperimentReport bench_scaling(const SyntheticSpec& spec, const BenchConfig& config);

// Least-squares slope of log(y) against log(x).
double growth_exponent(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace birchtl
