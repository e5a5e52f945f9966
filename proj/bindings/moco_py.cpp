#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moco/baselines.hpp"
#include "moco/checkpoint.hpp"
#include "moco/es.hpp"
#include "moco/instance.hpp"
#include "moco/instance_io.hpp"
#include "moco/oracles.hpp"
#include "moco/search.hpp"
#include "moco/version.hpp"

namespace py = pybind11;
using namespace moco;

namespace {

ProblemInstance py_generate_tsp(int n, std::uint64_t seed, int knn) {
  ProblemInstance inst = generate_uniform_tsp(n, seed);
  if (knn > 0) inst = sparsify_knn(inst, knn);
  return inst;
}

SearchConfig make_search_config(int K, int b, int M, const std::string& conditioning, int train_K,
                                std::uint64_t seed, int threads, int start_node, bool greedy) {
  SearchConfig cfg;
  cfg.K = K;
  cfg.b = b;
  cfg.M = M;
  cfg.conditioning = conditioning_mode_from_string(conditioning);
  cfg.train_K = train_K;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.start_node = start_node;
  cfg.greedy = greedy;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "heatmap-construction solver core";
  m.attr("__version__") = kVersion;

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def_property_readonly("kind",
                             [](const ProblemInstance& p) { return to_string(p.kind); })
      .def_readonly("n_nodes", &ProblemInstance::n_nodes)
      .def_readonly("seed", &ProblemInstance::seed)
      .def_readonly("knn", &ProblemInstance::knn)
      .def_property_readonly("num_edges", &ProblemInstance::num_edges)
      .def_property_readonly("coords",
                             [](const ProblemInstance& p) {
                               py::list out;
                               for (const auto& c : p.coords)
                                 out.append(py::make_tuple(c[0], c[1]));
                               return out;
                             })
      .def_property_readonly("edges",
                             [](const ProblemInstance& p) {
                               py::list out;
                               for (std::size_t e = 0; e < p.edge_src.size(); ++e)
                                 out.append(py::make_tuple(p.edge_src[e], p.edge_dst[e]));
                               return out;
                             })
      .def("__repr__", [](const ProblemInstance& p) {
        return "<ProblemInstance " + to_string(p.kind) + " n=" + std::to_string(p.n_nodes) +
               " m=" + std::to_string(p.num_edges()) + ">";
      });

  m.def("generate_tsp", &py_generate_tsp, py::arg("n"), py::arg("seed") = 0, py::arg("knn") = 0,
        "Uniform unit-square TSP instance, optionally k-nearest-neighbour sparsified.");
  m.def(
      "generate_mis",
      [](int n, double p, std::uint64_t seed) { return generate_er_graph(n, n, p, seed); },
      py::arg("n"), py::arg("p") = 0.15, py::arg("seed") = 0,
      "Erdos-Renyi independent-set instance.");
  m.def("save_instance", &save_instance, py::arg("instance"), py::arg("path"));
  m.def("load_instance", [](const std::string& p) { return load_instance(p); }, py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("manifest_path"));

  py::class_<Solution>(m, "Solution")
      .def_property_readonly("vars",
                             [](const Solution& s) {
                               std::vector<int> out;
                               for (std::size_t i = 0; i < s.vars.size(); ++i)
                                 if (s.vars.test(i)) out.push_back(static_cast<int>(i));
                               return out;
                             })
      .def_readonly("start_node", &Solution::start_node);

  m.def(
      "held_karp",
      [](const ProblemInstance& inst) {
        py::gil_scoped_release release;
        const OracleResult r = held_karp_exact(inst);
        return std::make_pair(r.objective, solution_node_order(inst, r.solution));
      },
      py::arg("instance"), "Exact tour cost and node order (n <= 16).");
  m.def(
      "mis_exact",
      [](const ProblemInstance& inst) {
        py::gil_scoped_release release;
        const OracleResult r = mis_exact(inst);
        std::vector<int> nodes;
        for (std::size_t i = 0; i < r.solution.vars.size(); ++i)
          if (r.solution.vars.test(i)) nodes.push_back(static_cast<int>(i));
        return std::make_pair(-r.objective, nodes);
      },
      py::arg("instance"), "Exact maximum independent set size and members (n <= 64).");
  m.def(
      "farthest_insertion",
      [](const ProblemInstance& inst) {
        py::gil_scoped_release release;
        const auto tour = farthest_insertion(inst);
        return std::make_pair(tour_cost(inst, tour), tour);
      },
      py::arg("instance"), "Farthest-insertion tour cost and node order.");

  m.def(
      "make_default_checkpoint",
      [](const std::string& kind, std::uint64_t seed, const std::string& path) {
        const CheckpointBundle b = make_default_bundle(problem_kind_from_string(kind), seed);
        CheckpointMeta meta;
        meta["master_seed"] = std::to_string(seed);
        save_bundle(b, path, meta);
        return path;
      },
      py::arg("kind"), py::arg("seed"), py::arg("path"),
      "Write a freshly initialised paired checkpoint.");
  m.def("checkpoint_manifest", &checkpoint_manifest, py::arg("path"));

  m.def(
      "solve",
      [](const ProblemInstance& inst, const std::string& checkpoint, int K, int b, int M,
         const std::string& conditioning, std::uint64_t seed, int threads, int start_node,
         bool greedy) {
        const CheckpointBundle phi = load_bundle(checkpoint);
        const SearchConfig cfg =
            make_search_config(K, b, M, conditioning, 0, seed, threads, start_node, greedy);
        py::gil_scoped_release release;
        const RestartsResult r = parallel_restarts(inst, phi, cfg);
        const double reported =
            inst.kind == ProblemKind::tsp ? r.best.best_value : -r.best.best_value;
        py::gil_scoped_acquire acquire;
        py::dict out;
        out["objective"] = reported;
        out["constructions"] = r.constructions;
        out["start_node"] = r.best.start_node;
        std::vector<double> curve;
        for (const auto& rec : r.best.log) curve.push_back(rec.best_objective);
        out["best_curve"] = curve;
        return out;
      },
      py::arg("instance"), py::arg("checkpoint"), py::arg("K") = 50, py::arg("b") = 32,
      py::arg("M") = 1, py::arg("conditioning") = "full", py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("start_node") = -1, py::arg("greedy") = false,
      "Run the learned search; returns objective, budget accounting, and the best-so-far curve.");
}
