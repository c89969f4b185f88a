#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "birchtl/cftree.hpp"
#include "birchtl/dataset_io.hpp"
#include "birchtl/error.hpp"
#include "birchtl/experiments.hpp"
#include "birchtl/repdb.hpp"
#include "birchtl/report.hpp"
#include "birchtl/synthetic.hpp"
#include "birchtl/transfer.hpp"
#include "birchtl/validation.hpp"

namespace fs = std::filesystem;
using namespace birchtl;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

// Thrown for inconsistent flag combinations that CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  double threshold = 0.6;
  std::size_t branching = 50;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string in;
  std::string out;
  bool timing = false;

  BirchParams birch() const { return BirchParams{threshold, branching}; }
  ReportFormat report_format() const { return parse_report_format(format); }
};

void write_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed to write " + path);
}

std::string summary_line(const ExperimentReport& rep) {
  std::string s;
  for (const auto& [k, v] : rep.summary) {
    s += k + "=";
    if (std::holds_alternative<double>(v)) {
      s += format_double(std::get<double>(v));
    } else if (std::holds_alternative<std::int64_t>(v)) {
      s += std::to_string(std::get<std::int64_t>(v));
    } else if (std::holds_alternative<bool>(v)) {
      s += std::get<bool>(v) ? "true" : "false";
    } else if (std::holds_alternative<std::string>(v)) {
      s += std::get<std::string>(v);
    }
    s += " ";
  }
  return s;
}

// CSV has no place for the summary, so it goes to stderr.
void output_report(const ExperimentReport& rep, const Common& c) {
  if (c.report_format() == ReportFormat::csv && !rep.summary.empty()) {
    std::cerr << summary_line(rep) << "\n";
  }
  if (c.out.empty()) {
    std::cout << (c.report_format() == ReportFormat::csv ? to_csv(rep) : to_json(rep));
  } else {
    emit_report(rep, c.report_format(), c.out);
  }
}

std::string require_in(const Common& c) {
  if (c.in.empty()) throw UsageError("--in is required");
  return c.in;
}

CfTree load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return CfTree::from_json(buf.str());
}

void save_model(const CfTree& tree, const std::string& path) { write_text(tree.to_json() + "\n", path); }

RepresentationDb load_db_or_empty(const std::string& path) {
  if (!fs::exists(path)) return RepresentationDb{};
  return RepresentationDb::load(fs::path(path));
}

Cell opt_text(const std::optional<std::string>& s) {
  if (!s) return std::monostate{};
  return *s;
}

void add_spec_options(CLI::App* app, SyntheticSpec& spec) {
  app->add_option("--ppv-count", spec.ppv_count, "Number of PPV groups")->capture_default_str();
  app->add_option("--samples-per-ppv", spec.samples_per_ppv, "Samples per PPV")
      ->capture_default_str();
  app->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
  app->add_option("--separation", spec.separation, "Pairwise distance of PPV centres")
      ->capture_default_str();
  app->add_option("--spread", spec.spread, "Expected distance of a sample from its centre")
      ->capture_default_str();
}

// Uses --in when given (it must carry a ppv column), the synthetic
// generator otherwise.
LabeledDataset grouped_input(const Common& c, SyntheticSpec spec) {
  if (!c.in.empty()) {
    auto ds = read_dataset_csv(fs::path(c.in));
    if (!ds.has_ppv()) throw InvalidArgument(c.in + " has no ppv column");
    return ds;
  }
  spec.seed = c.seed;
  return gen_synthetic(spec);
}

// ---------------------------------------------------------------------------

void run_gen(const Common& c, SyntheticSpec spec, bool shuffle) {
  spec.seed = c.seed;
  auto ds = gen_synthetic(spec);
  if (shuffle) ds = shuffled(ds, c.seed);
  if (c.out.empty()) {
    write_dataset_csv(std::cout, ds);
  } else {
    write_dataset_csv(fs::path(c.out), ds);
  }
}

void run_fit(const Common& c, const std::string& model_path, const std::string& labels_path) {
  const auto ds = read_dataset_csv(fs::path(require_in(c)));
  const auto fit = birch_fit(c.birch(), ds.data);
  if (!model_path.empty()) save_model(fit.tree, model_path);
  if (!labels_path.empty()) {
    std::ostringstream text;
    write_labels_csv(text, fit.model.labels);
    write_text(text.str(), labels_path);
  }
  std::string note;
  const double si = silhouette_or_nan(ds.data, fit.model.labels, note);

  ExperimentReport rep;
  rep.name = "fit";
  rep.parameters = {{"threshold", c.threshold},
                    {"branching_factor", static_cast<std::int64_t>(c.branching)}};
  rep.columns = {"n_samples", "dim", "n_clusters", "si", "node_count", "height", "note"};
  rep.add_row({static_cast<std::int64_t>(ds.data.size()), static_cast<std::int64_t>(ds.data.dim()),
               static_cast<std::int64_t>(fit.model.k()),
               std::isnan(si) ? Cell{} : Cell{si}, static_cast<std::int64_t>(fit.tree.node_count()),
               static_cast<std::int64_t>(fit.tree.height()), note});
  output_report(rep, c);
}

void run_predict(const Common& c, const std::string& model_path) {
  if (model_path.empty()) throw UsageError("--model is required");
  const auto tree = load_model(model_path);
  const auto ds = read_dataset_csv(fs::path(require_in(c)));
  const auto idx = tree.predict(ds.data);
  std::ostringstream text;
  write_labels_csv(text, std::vector<int>(idx.begin(), idx.end()));
  write_text(text.str(), c.out);
}

void run_silhouette(const Common& c, const std::string& labels_path) {
  const auto ds = read_dataset_csv(fs::path(require_in(c)));
  std::vector<int> labels;
  if (!labels_path.empty()) {
    labels = read_labels_csv(fs::path(labels_path));
  } else if (ds.has_ppv()) {
    labels = ds.ppv;
  } else {
    throw UsageError("--labels is required when the dataset has no ppv column");
  }
  if (labels.size() != ds.data.size()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) + " differs from " +
                          std::to_string(ds.data.size()) + " samples");
  }
  const auto r = silhouette(ds.data, labels);
  ExperimentReport rep;
  rep.name = "silhouette";
  rep.columns = {"label", "size", "mean_si"};
  for (const auto& pc : r.per_cluster) {
    rep.add_row({static_cast<std::int64_t>(pc.label), static_cast<std::int64_t>(pc.size), pc.mean});
  }
  rep.summary = {{"mean_si", r.mean_si},
                 {"excluded_noise", static_cast<std::int64_t>(r.excluded_noise_count)}};
  output_report(rep, c);
}

struct DbArgs {
  std::string db;
  std::string task_id;
  std::string sensor_type;
  std::optional<std::int64_t> measured_at;
  std::optional<std::string> label;
  std::optional<std::int64_t> from;
  std::optional<std::int64_t> to;
  std::string model;
  std::size_t cap = 1;
};

std::string require_db(const DbArgs& a) {
  if (a.db.empty()) throw UsageError("--db is required");
  return a.db;
}

void run_db_insert(const Common& c, const DbArgs& a) {
  if (a.task_id.empty() || a.sensor_type.empty() || !a.measured_at) {
    throw UsageError("db insert needs --task-id, --sensor-type and --measured-at");
  }
  auto db = load_db_or_empty(require_db(a));
  const auto ds = read_dataset_csv(fs::path(require_in(c)));
  for (std::size_t i = 0; i < ds.data.size(); ++i) {
    const auto row = ds.data.row(i);
    db.insert(Representation{0, FeatureVector(row.begin(), row.end()), a.task_id, a.sensor_type,
                             *a.measured_at, a.label});
  }
  db.save(fs::path(c.out.empty() ? a.db : c.out));
  std::cerr << "inserted " << ds.data.size() << " entries, " << db.size() << " total\n";
}

void run_db_query(const Common& c, const DbArgs& a) {
  const auto db = RepresentationDb::load(fs::path(require_db(a)));
  RepresentationFilter f;
  if (!a.task_id.empty()) f.task_id = a.task_id;
  if (!a.sensor_type.empty()) f.sensor_type = a.sensor_type;
  f.label = a.label;
  f.measured_from = a.from;
  f.measured_to = a.to;
  const auto hits = db.query(f);

  ExperimentReport rep;
  rep.name = "db-query";
  rep.columns = {"id", "task_id", "sensor_type", "measured_at", "label"};
  for (std::size_t j = 0; j < db.dim(); ++j) rep.columns.push_back("f" + std::to_string(j));
  for (const auto& e : hits) {
    std::vector<Cell> row{static_cast<std::int64_t>(e.id), e.task_id, e.sensor_type, e.measured_at,
                          opt_text(e.label)};
    for (double v : e.vector) row.emplace_back(v);
    rep.add_row(std::move(row));
  }
  output_report(rep, c);
}

void run_db_retain(const Common& c, const DbArgs& a) {
  auto db = RepresentationDb::load(fs::path(require_db(a)));
  const CfTree tree = a.model.empty() ? birch_fit(c.birch(), db.vectors()).tree : load_model(a.model);
  const auto report = db.retain_exemplars(tree, a.cap);
  db.save(fs::path(c.out.empty() ? a.db : c.out));
  std::cerr << "kept " << report.kept << ", dropped " << report.dropped << "\n";
}

void run_db_save(const Common& c, const DbArgs& a) {
  // Rewrites a database in canonical form (ascending ids, round-trip numbers).
  const auto db = RepresentationDb::load(fs::path(c.in.empty() ? require_db(a) : c.in));
  if (c.out.empty()) throw UsageError("--out is required");
  db.save(fs::path(c.out));
}

void run_db_load(const Common& c, const DbArgs& a) {
  const auto db = RepresentationDb::load(fs::path(c.in.empty() ? require_db(a) : c.in));
  std::map<std::string, std::size_t> per_task;
  for (const auto& e : db.entries()) ++per_task[e.task_id];
  ExperimentReport rep;
  rep.name = "db-load";
  rep.columns = {"task_id", "entries"};
  for (const auto& [task, n] : per_task) rep.add_row({task, static_cast<std::int64_t>(n)});
  rep.summary = {{"entries", static_cast<std::int64_t>(db.size())},
                 {"dim", static_cast<std::int64_t>(db.dim())},
                 {"next_id", static_cast<std::int64_t>(db.next_id())}};
  output_report(rep, c);
}

void run_db_merge(const Common& c, const DbArgs& a) {
  auto db = load_db_or_empty(require_db(a));
  const auto imported = RepresentationDb::load(fs::path(require_in(c)));
  db.merge_import(imported);
  db.save(fs::path(c.out.empty() ? a.db : c.out));
  std::cerr << "imported " << imported.size() << " entries, " << db.size() << " total\n";
}

void run_demand_check(const Common& c, const DemandCheckConfig& cfg) {
  const auto history = read_metric_history(fs::path(require_in(c)));
  const auto r = demand_check(history, cfg);
  ExperimentReport rep;
  rep.name = "demand-check";
  rep.parameters = {{"baseline_window", static_cast<std::int64_t>(cfg.baseline_window)},
                    {"recent_window", static_cast<std::int64_t>(cfg.recent_window)},
                    {"degradation_ratio", cfg.degradation_ratio}};
  rep.columns = {"triggered", "baseline", "recent"};
  rep.add_row({r.triggered, r.baseline, r.recent});
  output_report(rep, c);
}

void run_similarity_check(const Common& c, const DbArgs& a, std::optional<double> sim_threshold,
                          double min_fraction, std::size_t top_k, bool per_vector) {
  const auto db = RepresentationDb::load(fs::path(require_db(a)));
  const auto query = read_dataset_csv(fs::path(require_in(c)));
  const CfTree tree = a.model.empty() ? birch_fit(c.birch(), db.vectors()).tree : load_model(a.model);
  const SimilarityConfig cfg{sim_threshold.value_or(c.threshold), min_fraction};
  const auto d = similarity_check(db, tree, query.data, cfg);

  ExperimentReport rep;
  rep.name = "similarity-check";
  rep.parameters = {{"similarity_threshold", cfg.similarity_threshold},
                    {"min_matched_fraction", cfg.min_matched_fraction}};
  if (per_vector) {
    rep.columns = {"query_index", "subcluster", "distance", "matched", "dominant_task"};
    for (std::size_t i = 0; i < d.per_vector.size(); ++i) {
      const auto& m = d.per_vector[i];
      rep.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(m.subcluster), m.distance,
                   m.matched, opt_text(m.dominant_task)});
    }
  } else {
    rep.columns = {"rank", "task_id", "mean_similarity", "matched_fraction"};
    for (std::size_t i = 0; i < d.candidates.size(); ++i) {
      const auto& cand = d.candidates[i];
      rep.add_row({static_cast<std::int64_t>(i + 1), cand.task_id, cand.mean_similarity,
                   cand.matched_fraction});
    }
  }
  std::string selected;
  for (const auto& t : select_transfer_cases(d, top_k)) selected += (selected.empty() ? "" : " ") + t;
  rep.summary = {{"outcome", std::string(d.outcome == TransferOutcome::transfer ? "transfer"
                                                                                 : "no_transfer")},
                 {"selected", selected}};
  output_report(rep, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BIRCH-based clustering, transfer case selection and experiment runners", "birchtl"};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  app.add_option("--threshold", c.threshold, "BIRCH threshold")->capture_default_str();
  app.add_option("--branching", c.branching, "BIRCH branching factor")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--format", c.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--in", c.in, "Input file");
  app.add_option("--out", c.out, "Output file (stdout when omitted)");
  app.add_flag("--timing", c.timing, "Add wall-clock columns to experiment reports");

  SyntheticSpec spec;
  bool shuffle = false;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic PPV dataset");
  add_spec_options(gen, spec);
  gen->add_flag("--shuffle", shuffle, "Mix the rows instead of grouping them by PPV");

  std::string model_path, labels_path;
  auto* fit = app.add_subcommand("fit", "Fit a CF-tree to a dataset");
  fit->add_option("--model", model_path, "Write the fitted tree here (JSON)");
  fit->add_option("--labels", labels_path, "Write the cluster labels here (CSV)");

  auto* predict = app.add_subcommand("predict", "Assign samples to the subclusters of a fitted tree");
  predict->add_option("--model", model_path, "Fitted tree (JSON)")->required();

  auto* sil = app.add_subcommand("silhouette", "Silhouette index of a labelled dataset");
  sil->add_option("--labels", labels_path, "Labels CSV (defaults to the ppv column)");

  DbArgs dba;
  auto* db = app.add_subcommand("db", "Representation database operations");
  db->require_subcommand(1);
  db->add_option("--db", dba.db, "Database file (JSON Lines)");
  auto* db_insert = db->add_subcommand("insert", "Store the rows of --in with shared metadata");
  db_insert->add_option("--task-id", dba.task_id)->required();
  db_insert->add_option("--sensor-type", dba.sensor_type)->required();
  db_insert->add_option("--measured-at", dba.measured_at, "Epoch seconds, UTC")->required();
  db_insert->add_option("--label", dba.label);
  auto* db_query = db->add_subcommand("query", "List entries matching every given filter");
  db_query->add_option("--task-id", dba.task_id);
  db_query->add_option("--sensor-type", dba.sensor_type);
  db_query->add_option("--label", dba.label);
  db_query->add_option("--from", dba.from, "Earliest measured_at (inclusive)");
  db_query->add_option("--to", dba.to, "Latest measured_at (inclusive)");
  auto* db_retain = db->add_subcommand("retain", "Keep the entries closest to each centroid");
  db_retain->add_option("--model", dba.model, "Fitted tree (fits one on the db when omitted)");
  db_retain->add_option("--cap", dba.cap, "Entries kept per subcluster")->capture_default_str();
  auto* db_save = db->add_subcommand("save", "Rewrite a database in canonical form");
  auto* db_load = db->add_subcommand("load", "Validate a database and summarise it");
  auto* db_merge = db->add_subcommand("merge", "Append the entries of --in under fresh ids");

  DemandCheckConfig dcfg;
  auto* demand = app.add_subcommand("demand-check", "Check a metric history for degradation");
  demand->add_option("--baseline-window", dcfg.baseline_window)->capture_default_str();
  demand->add_option("--recent-window", dcfg.recent_window)->capture_default_str();
  demand->add_option("--degradation-ratio", dcfg.degradation_ratio)->capture_default_str();

  std::optional<double> sim_threshold;
  double min_fraction = 0.5;
  std::size_t top_k = 3;
  bool per_vector = false;
  auto* simc = app.add_subcommand("similarity-check", "Rank stored tasks by similarity to --in");
  simc->add_option("--db", dba.db, "Database file (JSON Lines)")->required();
  simc->add_option("--model", dba.model, "Fitted tree (fits one on the db when omitted)");
  simc->add_option("--similarity-threshold", sim_threshold, "Defaults to --threshold");
  simc->add_option("--min-matched-fraction", min_fraction)->capture_default_str();
  simc->add_option("--top-k", top_k)->capture_default_str();
  simc->add_flag("--per-vector", per_vector, "Report the per-vector matches instead");

  std::size_t permutations = 10, repeats = 10, sequences = 2;
  auto* seq = app.add_subcommand("exp-sequence", "Single versus sequential training");
  add_spec_options(seq, spec);
  seq->add_option("--permutations", permutations)->capture_default_str();

  auto* repro = app.add_subcommand("exp-repro", "Repeated fits of fixed sequences");
  add_spec_options(repro, spec);
  repro->add_option("--repeats", repeats)->capture_default_str();
  repro->add_option("--sequences", sequences)->capture_default_str();

  std::vector<std::size_t> source_dims{50, 100, 150}, targets{2, 10, 25, 50, 100};
  auto* dim = app.add_subcommand("exp-dim", "Cluster structure under PCA reduction");
  add_spec_options(dim, spec);
  dim->add_option("--source-dims", source_dims)->delimiter(',')->capture_default_str();
  dim->add_option("--targets", targets)->delimiter(',')->capture_default_str();

  std::vector<std::size_t> volumes{100, 200, 300, 400};
  std::vector<double> thresholds;
  for (int i = 0; i <= 10; ++i) thresholds.push_back(i / 10.0);
  auto* vol = app.add_subcommand("exp-volume", "Silhouette across data volumes and thresholds");
  add_spec_options(vol, spec);
  vol->add_option("--samples", volumes, "Samples per PPV")->delimiter(',')->capture_default_str();
  vol->add_option("--thresholds", thresholds)->delimiter(',');

  BenchConfig bcfg;
  auto* bench = app.add_subcommand("bench", "Runtime and model-size scaling of the clusterers");
  add_spec_options(bench, spec);
  bench->add_option("--algorithms", bcfg.algorithms)
      ->delimiter(',')
      ->check(CLI::IsMember({"birch", "kmeans", "minibatch_kmeans", "dbscan", "agglomerative"}))
      ->capture_default_str();
  bench->add_option("--sizes", bcfg.sizes)->delimiter(',')->capture_default_str();
  bench->add_option("--dbscan-eps", bcfg.dbscan_eps)->capture_default_str();
  bench->add_option("--dbscan-min-samples", bcfg.dbscan_min_samples)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    const RunOptions opts{c.birch(), c.timing};
    c.birch().validate();
    (void)c.report_format();
    if (*gen) {
      run_gen(c, spec, shuffle);
    } else if (*fit) {
      run_fit(c, model_path, labels_path);
    } else if (*predict) {
      run_predict(c, model_path);
    } else if (*sil) {
      run_silhouette(c, labels_path);
    } else if (*db) {
      if (*db_insert) run_db_insert(c, dba);
      if (*db_query) run_db_query(c, dba);
      if (*db_retain) run_db_retain(c, dba);
      if (*db_save) run_db_save(c, dba);
      if (*db_load) run_db_load(c, dba);
      if (*db_merge) run_db_merge(c, dba);
    } else if (*demand) {
      run_demand_check(c, dcfg);
    } else if (*simc) {
      run_similarity_check(c, dba, sim_threshold, min_fraction, top_k, per_vector);
    } else if (*seq) {
      output_report(exp_sequence(grouped_input(c, spec), permutations, c.seed, opts), c);
    } else if (*repro) {
      output_report(exp_reproducibility(grouped_input(c, spec), repeats, sequences, c.seed, opts),
                        c);
    } else if (*dim) {
      spec.seed = c.seed;
      output_report(exp_dimensionality(spec, source_dims, targets, opts), c);
    } else if (*vol) {
      spec.seed = c.seed;
      output_report(exp_volume(spec, volumes, thresholds, opts), c);
    } else if (*bench) {
      spec.seed = c.seed;
      bcfg.birch = c.birch();
      output_report(bench_scaling(spec, bcfg), c);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
