#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace moco {

enum class ProblemKind { tsp, mis };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

// A problem instance over a directed graph in CSR-like form.
//
// tsp: nodes are cities with 2-d coordinates; edges are candidate arcs
//      (decision variables) sorted by (src, dst); edge_len holds Euclidean
//      lengths. knn == 0 means the complete digraph; for n > 2000 the
//      complete digraph is never materialised and edges stay empty until
//      sparsify_knn is applied.
// mis: edges are the symmetric adjacency (both directions present); decision
//      variables are the nodes; coords and edge_len are empty.
struct ProblemInstance {
  ProblemKind kind = ProblemKind::tsp;
  int n_nodes = 0;
  std::vector<std::array<double, 2>> coords;
  std::vector<std::int32_t> edge_src;
  std::vector<std::int32_t> edge_dst;
  std::vector<double> edge_len;
  std::vector<std::int64_t> out_begin;  // size n_nodes + 1
  std::uint64_t seed = 0;
  int knn = 0;  // tsp only: 0 = complete digraph

  std::int64_t num_edges() const { return static_cast<std::int64_t>(edge_src.size()); }

  // Decision variable count: edges for tsp, nodes for mis.
  std::int64_t num_decision_vars() const;

  bool has_edges() const { return n_nodes == 0 || !edge_src.empty(); }

  double dense_distance(int i, int j) const;

  // Index of directed edge (u, v), or -1 if absent. O(log out-degree).
  std::int32_t find_edge(int u, int v) const;

  // Out-edge index range [first, last) for node u.
  std::pair<std::int64_t, std::int64_t> out_range(int u) const {
    return {out_begin[static_cast<std::size_t>(u)], out_begin[static_cast<std::size_t>(u) + 1]};
  }

  // Throws ContractViolation if CSR arrays are inconsistent.
  void check_consistent() const;

  bool operator==(const ProblemInstance&) const = default;
};

// Largest n for which the complete tsp digraph is materialised eagerly.
inline constexpr int kCompleteEdgeLimit = 2000;

// n cities uniform in the unit square. Builds the complete digraph when
// n <= kCompleteEdgeLimit, otherwise leaves edges empty (sparsify first).
ProblemInstance generate_uniform_tsp(int n, std::uint64_t seed);

// Erdos-Renyi G(n, p) with n uniform in [n_min, n_max].
ProblemInstance generate_er_graph(int n_min, int n_max, double p, std::uint64_t seed);

// Keeps, per node, the k nearest out-neighbours by Euclidean distance
// (ties broken by lower node index). tsp only.
ProblemInstance sparsify_knn(const ProblemInstance& inst, int k);

// Rebuilds out_begin (and sorts edges by (src, dst)) from edge_src/edge_dst.
void finalize_edges(ProblemInstance& inst);

}  // namespace moco
