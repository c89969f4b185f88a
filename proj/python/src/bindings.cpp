#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "birchtl/baselines.hpp"
#include "birchtl/cftree.hpp"
#include "birchtl/error.hpp"
#include "birchtl/experiments.hpp"
#include "birchtl/repdb.hpp"
#include "birchtl/synthetic.hpp"
#include "birchtl/transfer.hpp"
#include "birchtl/validation.hpp"

namespace py = pybind11;
using namespace birchtl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array of samples");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  Dataset ds;
  const double* p = a.data();
  for (std::size_t i = 0; i < n; ++i) ds.push_back(std::span<const double>(p + i * d, d));
  return ds;
}

Array to_array(const Dataset& ds) {
  Array out({ds.size(), ds.dim()});
  std::copy(ds.values().begin(), ds.values().end(), out.mutable_data());
  return out;
}

py::array_t<int> to_int_array(const std::vector<int>& v) {
  py::array_t<int> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<int> to_labels(const py::array_t<int, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<int>(a.data(), a.data() + a.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "BIRCH clustering, silhouette validation and transfer case selection";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<BirchParams>(m, "BirchParams")
      .def(py::init([](double threshold, std::size_t branching_factor) {
             return BirchParams{threshold, branching_factor};
           }),
           py::arg("threshold") = 0.6, py::arg("branching_factor") = 50)
      .def_readwrite("threshold", &BirchParams::threshold)
      .def_readwrite("branching_factor", &BirchParams::branching_factor);

  py::class_<CfTree>(m, "CfTree")
      .def(py::init<BirchParams>(), py::arg("params") = BirchParams{})
      .def("insert", [](CfTree& t, const std::vector<double>& x) { return t.insert(x); })
      .def("insert_all", [](CfTree& t, const Array& a) { t.insert_all(to_dataset(a)); })
      .def("predict", [](const CfTree& t, const Array& a) {
        const auto idx = t.predict(to_dataset(a));
        return to_int_array(std::vector<int>(idx.begin(), idx.end()));
      })
      .def("centroids", [](const CfTree& t) { return to_array(Dataset::from_rows(t.centroids())); })
      .def("subcluster_sizes",
           [](const CfTree& t) {
             std::vector<std::uint64_t> n;
             for (const auto& s : t.subclusters()) n.push_back(s.cf.n);
             return n;
           })
      .def_property_readonly("subcluster_count", &CfTree::subcluster_count)
      .def_property_readonly("node_count", &CfTree::node_count)
      .def_property_readonly("height", &CfTree::height)
      .def_property_readonly("dim", &CfTree::dim)
      .def_property_readonly("total_count", &CfTree::total_count)
      .def("audit", &CfTree::audit, py::arg("rel_tol") = 1e-9)
      .def("to_json", &CfTree::to_json)
      .def_static("from_json", &CfTree::from_json)
      .def("__eq__", [](const CfTree& a, const CfTree& b) { return a == b; });

  m.def(
      "birch_fit",
      [](const Array& data, double threshold, std::size_t branching_factor) {
        auto fit = birch_fit(BirchParams{threshold, branching_factor}, to_dataset(data));
        return py::make_tuple(std::move(fit.tree), to_int_array(fit.model.labels));
      },
      py::arg("data"), py::arg("threshold") = 0.6, py::arg("branching_factor") = 50,
      "Fits a CF-tree and returns (tree, labels).");

  m.def(
      "silhouette",
      [](const Array& data, const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
        const auto r = silhouette(to_dataset(data), to_labels(labels));
        py::dict out;
        out["mean"] = r.mean_si;
        out["per_sample"] = r.per_sample;
        out["sample_indices"] = r.sample_indices;
        out["excluded_noise"] = r.excluded_noise_count;
        return out;
      },
      py::arg("data"), py::arg("labels"));

  m.def(
      "kmeans",
      [](const Array& data, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
        const auto ds = to_dataset(data);
        const auto r = kmeans_fit(ds, k, pick_initial_centroids(ds, k, seed), max_iter);
        return py::make_tuple(to_array(Dataset::from_rows(r.centroids)),
                              to_int_array(r.assignment.labels), r.sse);
      },
      py::arg("data"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iter") = 100);

  m.def(
      "minibatch_kmeans",
      [](const Array& data, std::size_t k, std::size_t batch_size, std::uint64_t seed,
         std::size_t max_iter) {
        const auto r = minibatch_kmeans_fit(to_dataset(data), k, batch_size, seed, max_iter);
        return py::make_tuple(to_array(Dataset::from_rows(r.centroids)),
                              to_int_array(r.assignment.labels), r.sse);
      },
      py::arg("data"), py::arg("k"), py::arg("batch_size") = 100, py::arg("seed") = 0,
      py::arg("max_iter") = 100);

  m.def(
      "dbscan",
      [](const Array& data, double eps, std::size_t min_samples) {
        return to_int_array(dbscan_fit(to_dataset(data), eps, min_samples).assignment.labels);
      },
      py::arg("data"), py::arg("eps"), py::arg("min_samples"));

  m.def(
      "agglomerative",
      [](const Array& data, const std::string& linkage, std::optional<std::size_t> n_clusters,
         std::optional<double> distance_threshold) {
        if (n_clusters.has_value() == distance_threshold.has_value()) {
          throw InvalidArgument("give exactly one of n_clusters and distance_threshold");
        }
        Linkage l;
        if (linkage == "single") {
          l = Linkage::single;
        } else if (linkage == "complete") {
          l = Linkage::complete;
        } else {
          throw InvalidArgument("linkage must be 'single' or 'complete'");
        }
        const AgglomerativeStop stop = n_clusters ? AgglomerativeStop{ClusterCount{*n_clusters}}
                                                  : AgglomerativeStop{DistanceThreshold{*distance_threshold}};
        return to_int_array(agglomerative_fit(to_dataset(data), l, stop).assignment.labels);
      },
      py::arg("data"), py::arg("linkage") = "single", py::arg("n_clusters") = py::none(),
      py::arg("distance_threshold") = py::none());

  m.def(
      "gen_synthetic",
      [](std::size_t ppv_count, std::size_t samples_per_ppv, std::size_t dim, double separation,
         double spread, std::uint64_t seed) {
        const auto ds = gen_synthetic(
            SyntheticSpec{ppv_count, samples_per_ppv, dim, separation, spread, seed});
        return py::make_tuple(to_array(ds.data), to_int_array(ds.ppv));
      },
      py::arg("ppv_count") = 10, py::arg("samples_per_ppv") = 100, py::arg("dim") = 50,
      py::arg("separation") = 3.0, py::arg("spread") = 0.45, py::arg("seed") = 0);

  py::class_<Representation>(m, "Representation")
      .def(py::init([](std::vector<double> vector, std::string task_id, std::string sensor_type,
                       std::int64_t measured_at, std::optional<std::string> label) {
             return Representation{0, std::move(vector), std::move(task_id),
                                   std::move(sensor_type), measured_at, std::move(label)};
           }),
           py::arg("vector"), py::arg("task_id"), py::arg("sensor_type"), py::arg("measured_at"),
           py::arg("label") = py::none())
      .def_readonly("id", &Representation::id)
      .def_readonly("vector", &Representation::vector)
      .def_readonly("task_id", &Representation::task_id)
      .def_readonly("sensor_type", &Representation::sensor_type)
      .def_readonly("measured_at", &Representation::measured_at)
      .def_readonly("label", &Representation::label);

  py::class_<RepresentationDb>(m, "RepresentationDb")
      .def(py::init<>())
      .def("insert", &RepresentationDb::insert)
      .def(
          "query",
          [](const RepresentationDb& db, std::optional<std::string> task_id,
             std::optional<std::string> sensor_type, std::optional<std::string> label,
             std::optional<std::int64_t> measured_from, std::optional<std::int64_t> measured_to) {
            return db.query(RepresentationFilter{task_id, sensor_type, label, measured_from,
                                                 measured_to});
          },
          py::arg("task_id") = py::none(), py::arg("sensor_type") = py::none(),
          py::arg("label") = py::none(), py::arg("measured_from") = py::none(),
          py::arg("measured_to") = py::none())
      .def("merge_import", &RepresentationDb::merge_import)
      .def("retain_exemplars",
           [](RepresentationDb& db, const CfTree& tree, std::size_t cap) {
             const auto r = db.retain_exemplars(tree, cap);
             return py::make_tuple(r.kept, r.dropped);
           })
      .def("vectors", [](const RepresentationDb& db) { return to_array(db.vectors()); })
      .def_property_readonly("entries", &RepresentationDb::entries)
      .def("__len__", &RepresentationDb::size)
      .def("save", py::overload_cast<const std::filesystem::path&>(&RepresentationDb::save, py::const_))
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&RepresentationDb::load))
      .def("__eq__", [](const RepresentationDb& a, const RepresentationDb& b) { return a == b; });

  m.def(
      "demand_check",
      [](const std::vector<double>& history, std::size_t baseline_window, std::size_t recent_window,
         double degradation_ratio) {
        const auto r = demand_check(history,
                                    DemandCheckConfig{baseline_window, recent_window, degradation_ratio});
        return py::make_tuple(r.triggered, r.baseline, r.recent);
      },
      py::arg("history"), py::arg("baseline_window") = 10, py::arg("recent_window") = 5,
      py::arg("degradation_ratio") = 0.2, "Returns (triggered, baseline, recent).");

  m.def(
      "similarity_check",
      [](const RepresentationDb& db, const CfTree& tree, const Array& query,
         double similarity_threshold, double min_matched_fraction) {
        const auto d = similarity_check(db, tree, to_dataset(query),
                                        SimilarityConfig{similarity_threshold, min_matched_fraction});
        py::list candidates;
        for (const auto& c : d.candidates) {
          candidates.append(py::make_tuple(c.task_id, c.mean_similarity, c.matched_fraction));
        }
        py::dict out;
        out["transfer"] = d.outcome == TransferOutcome::transfer;
        out["candidates"] = candidates;
        return out;
      },
      py::arg("db"), py::arg("tree"), py::arg("query"), py::arg("similarity_threshold") = 0.6,
      py::arg("min_matched_fraction") = 0.5,
      "Returns {'transfer': bool, 'candidates': [(task_id, mean_similarity, matched_fraction)]}.");

  m.def(
      "exp_sequence",
      [](std::size_t permutation_count, std::uint64_t seed, std::size_t ppv_count,
         std::size_t samples_per_ppv, std::size_t dim, double threshold) {
        SyntheticSpec spec{ppv_count, samples_per_ppv, dim, 3.0, 0.45, seed};
        return to_csv(exp_sequence(gen_synthetic(spec), permutation_count, seed,
                                   RunOptions{BirchParams{threshold, 50}, false}));
      },
      py::arg("permutation_count") = 10, py::arg("seed") = 0, py::arg("ppv_count") = 10,
      py::arg("samples_per_ppv") = 100, py::arg("dim") = 50, py::arg("threshold") = 0.6,
      "Runs the single versus sequential training comparison and returns its CSV report.");
}
