#include "birchtl/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "birchtl/baselines.hpp"
#include "birchtl/error.hpp"
#include "birchtl/random.hpp"
#include "birchtl/validation.hpp"

namespace birchtl {

namespace {

// Derives the sample-mixing stream from the user seed.
constexpr std::uint64_t kMixSeed = 0x6d69786564ULL;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Cell real_or_empty(double v) {
  if (std::isnan(v)) return std::monostate{};
  return v;
}

Cell as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

std::string join_order(const std::vector<int>& order) {
  std::ostringstream out;
  for (std::size_t i = 0; i < order.size(); ++i) out << (i ? " " : "") << order[i];
  return out.str();
}

Dataset concat(const std::vector<Dataset>& chunks) {
  Dataset out;
  for (const auto& c : chunks) {
    for (std::size_t i = 0; i < c.size(); ++i) out.push_back(c.row(i));
  }
  return out;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

void add_birch_parameters(ExperimentReport& rep, const BirchParams& p) {
  rep.parameters.emplace_back("threshold", p.threshold);
  rep.parameters.emplace_back("branching_factor", as_int(p.branching_factor));
}

}  // namespace

std::vector<std::vector<int>> ppv_sequences(const std::vector<int>& ids, std::size_t count,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<int> order;
    for (auto i : rng.permutation(ids.size())) order.push_back(ids[i]);
    out.push_back(std::move(order));
  }
  return out;
}

double silhouette_or_nan(const Dataset& data, const std::vector<int>& labels, std::string& note) {
  try {
    return silhouette(data, labels).mean_si;
  } catch (const InvalidArgument& e) {
    note = e.what();
    return std::nan("");
  }
}

ExperimentReport exp_sequence(const LabeledDataset& grouped, std::size_t permutation_count,
                              std::uint64_t seed, const RunOptions& opts) {
  ExperimentReport rep;
  rep.name = "sequence";
  add_birch_parameters(rep, opts.birch);
  rep.parameters.emplace_back("permutation_count", as_int(permutation_count));
  rep.parameters.emplace_back("seed", static_cast<std::int64_t>(seed));
  rep.columns = {"sequence_no",           "si_single",      "si_sequential", "n_clusters",
                 "n_clusters_sequential", "tree_identical", "ppv_order",     "note"};
  if (opts.timing) rep.columns.push_back("runtime_ms");

  const auto ids = ppv_ids(grouped);
  bool all_identical = true;
  std::set<std::size_t> cluster_counts;
  const auto orders = ppv_sequences(ids, permutation_count, seed);
  for (std::size_t s = 0; s < orders.size(); ++s) {
    const auto chunks = chunks_by_ppv(grouped, orders[s]);
    const Dataset data = concat(chunks);
    const auto start = Clock::now();
    const auto single = birch_fit(opts.birch, data);
    const double ms = elapsed_ms(start);
    const auto sequential = birch_fit_chunked(opts.birch, chunks);

    std::string note;
    const double si_single = silhouette_or_nan(data, single.model.labels, note);
    const double si_seq = silhouette_or_nan(data, sequential.model.labels, note);
    const bool identical = single.tree == sequential.tree &&
                           single.model.labels == sequential.model.labels &&
                           (si_single == si_seq || (std::isnan(si_single) && std::isnan(si_seq)));
    all_identical = all_identical && identical;
    cluster_counts.insert(single.model.k());

    std::vector<Cell> row{as_int(s + 1),
                          real_or_empty(si_single),
                          real_or_empty(si_seq),
                          as_int(single.model.k()),
                          as_int(sequential.model.k()),
                          identical,
                          join_order(orders[s]),
                          note};
    if (opts.timing) row.emplace_back(ms);
    rep.add_row(std::move(row));
  }

  {
    const auto mixed = shuffled(grouped, seed ^ kMixSeed);
    const auto start = Clock::now();
    const auto fit = birch_fit(opts.birch, mixed.data);
    const double ms = elapsed_ms(start);
    std::string note;
    const double si = silhouette_or_nan(mixed.data, fit.model.labels, note);
    std::vector<Cell> row{std::string("mixed"), real_or_empty(si), std::monostate{},
                          as_int(fit.model.k()), std::monostate{},  std::monostate{},
                          std::string("mixed"),  note};
    if (opts.timing) row.emplace_back(ms);
    rep.add_row(std::move(row));
  }

  rep.summary.emplace_back("all_sequences_identical", all_identical);
  rep.summary.emplace_back("min_clusters", as_int(cluster_counts.empty() ? 0 : *cluster_counts.begin()));
  rep.summary.emplace_back("max_clusters", as_int(cluster_counts.empty() ? 0 : *cluster_counts.rbegin()));
  return rep;
}

ExperimentReport exp_reproducibility(const LabeledDataset& grouped, std::size_t repeats,
                                     std::size_t sequence_count, std::uint64_t seed,
                                     const RunOptions& opts) {
  if (repeats < 2) throw InvalidArgument("reproducibility needs at least 2 repeats");
  ExperimentReport rep;
  rep.name = "reproducibility";
  add_birch_parameters(rep, opts.birch);
  rep.parameters.emplace_back("repeats", as_int(repeats));
  rep.parameters.emplace_back("sequence_count", as_int(sequence_count));
  rep.parameters.emplace_back("seed", static_cast<std::int64_t>(seed));
  rep.columns = {"sequence_no", "repeat", "si", "n_clusters", "note"};
  if (opts.timing) rep.columns.push_back("runtime_ms");

  const auto orders = ppv_sequences(ppv_ids(grouped), sequence_count, seed);
  double max_dev = 0.0;
  bool all_single = true;
  for (std::size_t s = 0; s < orders.size(); ++s) {
    const Dataset data = concat(chunks_by_ppv(grouped, orders[s]));
    std::set<std::pair<std::uint64_t, std::size_t>> outcomes;
    std::vector<double> sis;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = Clock::now();
      const auto fit = birch_fit(opts.birch, data);
      const double ms = elapsed_ms(start);
      std::string note;
      const double si = silhouette_or_nan(data, fit.model.labels, note);
      outcomes.emplace(std::bit_cast<std::uint64_t>(si), fit.model.k());
      sis.push_back(si);

      std::vector<Cell> row{as_int(s + 1), as_int(r + 1), real_or_empty(si), as_int(fit.model.k()),
                            note};
      if (opts.timing) row.emplace_back(ms);
      rep.add_row(std::move(row));
    }
    for (double a : sis) {
      for (double b : sis) {
        if (!std::isnan(a) && !std::isnan(b)) max_dev = std::max(max_dev, std::abs(a - b));
      }
    }
    rep.summary.emplace_back("sequence_" + std::to_string(s + 1) + "_distinct_outcomes",
                             as_int(outcomes.size()));
    all_single = all_single && outcomes.size() == 1;
  }
  rep.summary.emplace_back("max_abs_si_deviation", max_dev);
  rep.summary.emplace_back("reproducible", all_single);
  return rep;
}

ExperimentReport exp_dimensionality(const SyntheticSpec& spec,
                                    const std::vector<std::size_t>& source_dims,
                                    const std::vector<std::size_t>& target_dims,
                                    const RunOptions& opts) {
  if (source_dims.empty() || target_dims.empty()) {
    throw InvalidArgument("dimensionality experiment needs source and target dims");
  }
  const std::size_t max_source = *std::max_element(source_dims.begin(), source_dims.end());
  for (auto t : target_dims) {
    if (t < 1) throw InvalidArgument("PCA target dims must be positive");
    if (t > max_source) {
      throw InvalidArgument("PCA target dim " + std::to_string(t) + " exceeds every source dim");
    }
  }

  ExperimentReport rep;
  rep.name = "dimensionality";
  add_birch_parameters(rep, opts.birch);
  rep.parameters.emplace_back("ppv_count", as_int(spec.ppv_count));
  rep.parameters.emplace_back("samples_per_ppv", as_int(spec.samples_per_ppv));
  rep.parameters.emplace_back("separation", spec.separation);
  rep.parameters.emplace_back("spread", spec.spread);
  rep.parameters.emplace_back("seed", static_cast<std::int64_t>(spec.seed));
  rep.columns = {"source_dim", "target_dim", "pca", "si", "n_clusters", "explained_variance_ratio",
                 "note"};
  if (opts.timing) rep.columns.push_back("runtime_ms");
  rep.plot_columns = {"target_dim", "source_dim", "si"};

  for (auto src : source_dims) {
    SyntheticSpec s = spec;
    s.dim = src;
    const auto mixed = shuffled(gen_synthetic(s), spec.seed ^ kMixSeed);

    auto run = [&](const Dataset& data, std::size_t target, bool pca, double ratio) {
      const auto start = Clock::now();
      const auto fit = birch_fit(opts.birch, data);
      const double ms = elapsed_ms(start);
      std::string note;
      const double si = silhouette_or_nan(data, fit.model.labels, note);
      std::vector<Cell> row{as_int(src), as_int(target),       pca, real_or_empty(si),
                            as_int(fit.model.k()), real_or_empty(ratio), note};
      if (opts.timing) row.emplace_back(ms);
      rep.add_row(std::move(row));
    };

    run(mixed.data, src, false, 1.0);
    for (auto target : target_dims) {
      if (target > src) continue;
      const auto model = pca_fit(mixed.data, target);
      const double kept =
          std::accumulate(model.explained_variance.begin(), model.explained_variance.end(), 0.0);
      const double ratio = model.total_variance > 0.0 ? kept / model.total_variance : 1.0;
      run(pca_transform(model, mixed.data), target, true, ratio);
    }
  }
  return rep;
}

ExperimentReport exp_volume(const SyntheticSpec& spec,
                            const std::vector<std::size_t>& samples_per_ppv,
                            const std::vector<double>& thresholds, const RunOptions& opts) {
  if (samples_per_ppv.empty() || thresholds.empty()) {
    throw InvalidArgument("volume experiment needs sample counts and thresholds");
  }
  for (double t : thresholds) {
    if (std::isnan(t) || t < 0.0) throw InvalidArgument("BIRCH thresholds must be >= 0");
  }

  ExperimentReport rep;
  rep.name = "volume";
  rep.parameters.emplace_back("branching_factor", as_int(opts.birch.branching_factor));
  rep.parameters.emplace_back("ppv_count", as_int(spec.ppv_count));
  rep.parameters.emplace_back("dim", as_int(spec.dim));
  rep.parameters.emplace_back("separation", spec.separation);
  rep.parameters.emplace_back("spread", spec.spread);
  rep.parameters.emplace_back("seed", static_cast<std::int64_t>(spec.seed));
  rep.columns = {"samples_per_ppv", "threshold", "n_samples", "si", "n_clusters", "note"};
  if (opts.timing) rep.columns.push_back("runtime_ms");
  rep.plot_columns = {"threshold", "samples_per_ppv", "si"};

  std::vector<std::vector<double>> si_by_threshold(thresholds.size());
  for (auto spp : samples_per_ppv) {
    SyntheticSpec s = spec;
    s.samples_per_ppv = spp;
    const auto mixed = shuffled(gen_synthetic(s), spec.seed ^ kMixSeed);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      BirchParams p = opts.birch;
      p.threshold = thresholds[t];
      const auto start = Clock::now();
      const auto fit = birch_fit(p, mixed.data);
      const double ms = elapsed_ms(start);
      std::string note;
      const double si = silhouette_or_nan(mixed.data, fit.model.labels, note);
      if (!std::isnan(si)) si_by_threshold[t].push_back(si);
      std::vector<Cell> row{as_int(spp),          thresholds[t],         as_int(mixed.data.size()),
                            real_or_empty(si),    as_int(fit.model.k()), note};
      if (opts.timing) row.emplace_back(ms);
      rep.add_row(std::move(row));
    }
  }

  double max_std = 0.0;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const double sd = population_std(si_by_threshold[t]);
    rep.summary.emplace_back("si_std@" + format_double(thresholds[t]), real_or_empty(sd));
    if (!std::isnan(sd)) max_std = std::max(max_std, sd);
  }
  rep.summary.emplace_back("max_si_std", max_std);
  return rep;
}

double growth_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (den == 0.0) return std::nan("");
  return (m * sxy - sx * sy) / den;
}

ExperimentReport bench_scaling(const SyntheticSpec& spec, const BenchConfig& config) {
  if (config.sizes.empty()) throw InvalidArgument("bench needs at least one size");
  if (!std::is_sorted(config.sizes.begin(), config.sizes.end()) || config.sizes.front() < 1) {
    throw InvalidArgument("bench sizes must be positive and ascending");
  }
  static const std::set<std::string> known{"birch", "kmeans", "minibatch_kmeans", "dbscan",
                                           "agglomerative"};
  for (const auto& a : config.algorithms) {
    if (!known.contains(a)) throw InvalidArgument("unknown algorithm '" + a + "'");
  }

  ExperimentReport rep;
  rep.name = "bench";
  add_birch_parameters(rep, config.birch);
  rep.parameters.emplace_back("dim", as_int(spec.dim));
  rep.parameters.emplace_back("ppv_count", as_int(spec.ppv_count));
  rep.parameters.emplace_back("seed", static_cast<std::int64_t>(spec.seed));
  rep.columns = {"algorithm", "n", "seconds", "model_size", "model_unit", "n_clusters"};

  const std::size_t largest = config.sizes.back();
  SyntheticSpec s = spec;
  s.samples_per_ppv = (largest + spec.ppv_count - 1) / spec.ppv_count;
  const auto pool = shuffled(gen_synthetic(s), spec.seed ^ kMixSeed);
  const std::size_t k = std::min(spec.ppv_count, config.sizes.front());

  for (const auto& algo : config.algorithms) {
    std::vector<double> ns, secs, sizes;
    for (auto n : config.sizes) {
      std::vector<std::size_t> rows(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      const Dataset data = pool.data.select(rows);

      double model_size = 0.0;
      std::string unit;
      std::size_t clusters = 0;
      const auto start = Clock::now();
      if (algo == "birch") {
        const auto fit = birch_fit(config.birch, data);
        model_size = static_cast<double>(fit.tree.node_count() + fit.tree.subcluster_count());
        unit = "nodes+subclusters";
        clusters = fit.model.k();
      } else if (algo == "kmeans") {
        const auto fit = kmeans_fit(data, k, pick_initial_centroids(data, k, spec.seed),
                                    config.kmeans_max_iter);
        model_size = static_cast<double>(k * data.dim() * sizeof(double));
        unit = "bytes";
        clusters = fit.assignment.k;
      } else if (algo == "minibatch_kmeans") {
        const auto fit = minibatch_kmeans_fit(data, k, config.minibatch_size, spec.seed,
                                              config.kmeans_max_iter);
        model_size = static_cast<double>(k * data.dim() * sizeof(double));
        unit = "bytes";
        clusters = fit.assignment.k;
      } else if (algo == "dbscan") {
        const auto fit = dbscan_fit(data, config.dbscan_eps, config.dbscan_min_samples);
        model_size = static_cast<double>(fit.neighborhood_entries * sizeof(std::size_t));
        unit = "bytes";
        clusters = fit.assignment.k;
      } else {
        const auto fit = agglomerative_fit(data, Linkage::single, ClusterCount{k});
        model_size = static_cast<double>(fit.distance_entries * sizeof(double));
        unit = "bytes";
        clusters = fit.assignment.k;
      }
      const double sec = elapsed_ms(start) / 1000.0;

      rep.add_row({algo, as_int(n), sec, model_size, unit, as_int(clusters)});
      ns.push_back(static_cast<double>(n));
      secs.push_back(std::max(sec, 1e-9));
      sizes.push_back(std::max(model_size, 1.0));
    }
    rep.summary.emplace_back(algo + "_time_exponent", real_or_empty(growth_exponent(ns, secs)));
    rep.summary.emplace_back(algo + "_memory_exponent", real_or_empty(growth_exponent(ns, sizes)));
  }
  return rep;
}

}  // namespace birchtl
