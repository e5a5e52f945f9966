#pragma once

#include <Eigen/Dense>
#include <array>
#include <boost/dynamic_bitset.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "moco/instance.hpp"
#include "moco/rng.hpp"

namespace moco {

using Bitset = boost::dynamic_bitset<>;

// One logit per decision variable (tsp: edge, mis: node).
struct Heatmap {
  Eigen::VectorXd theta;
};

void save_heatmap(const Heatmap& h, ProblemKind kind, const std::string& path);
Heatmap load_heatmap(const std::string& path, ProblemKind* kind_out = nullptr);

// A completed assignment. `vars` marks chosen decision variables; tsp
// solutions may additionally contain forced arcs taken when the sparse
// candidate set dead-ended (those arcs are not decision variables). The
// closing arc back to the start is implicit and priced from coordinates.
struct Solution {
  Bitset vars;
  std::vector<std::array<std::int32_t, 2>> forced_arcs;
  std::int32_t start_node = -1;

  bool operator==(const Solution&) const = default;
};

// Total order on solution identity (not quality); used for archive dedup and
// merge-order independence.
bool solution_less(const Solution& a, const Solution& b);

// Incremental construction state. Value-semantic: copying yields an
// independent branch of the construction.
struct ConstructionState {
  const ProblemInstance* instance = nullptr;
  Bitset assignment;  // decided decision variables
  int step = 0;
  bool terminal = false;
  // tsp
  std::int32_t start_node = -1;
  std::int32_t current_node = -1;
  Bitset visited;
  int visited_count = 0;
  std::vector<std::array<std::int32_t, 2>> forced_arcs;
  // mis
  Bitset blocked;  // selected nodes and their neighbours
  int selected_count = 0;

  bool operator==(const ConstructionState& o) const {
    return instance == o.instance && assignment == o.assignment && step == o.step &&
           terminal == o.terminal && start_node == o.start_node &&
           current_node == o.current_node && visited == o.visited &&
           forced_arcs == o.forced_arcs && blocked == o.blocked;
  }
};

// start_node is required for tsp (the sampler draws it) and ignored for mis.
ConstructionState initial_state(const ProblemInstance& inst, int start_node = -1);

// Decision variables selectable in this state, in increasing id order.
// tsp: out-edges of the current node leading to unvisited cities.
// mis: nodes not yet selected or adjacent to a selected node.
std::vector<std::int32_t> feasible_actions(const ConstructionState& s);

// Probabilities over feasible actions: softmax of theta restricted to
// `actions`, stabilised by max subtraction. Throws ContractViolation when
// `actions` is empty.
Eigen::VectorXd action_probabilities_sparse(const Heatmap& h,
                                            const std::vector<std::int32_t>& actions);

// Dense probability vector over all decision variables; masked-out entries
// are exactly zero.
Eigen::VectorXd action_probabilities(const Heatmap& h, const ConstructionState& s);

// Applies decision variable `var`. Throws ContractViolation if infeasible.
void apply_action(ConstructionState& s, std::int32_t var);

// tsp dead-end fallback: nearest unvisited city by Euclidean distance (ties
// broken by lower index). Precondition: not terminal, no feasible action.
std::int32_t forced_arc_target(const ConstructionState& s);
void apply_forced_arc(ConstructionState& s, std::int32_t target);

Solution extract_solution(const ConstructionState& s);  // terminal states only

// Feasibility check as a total function; never throws on malformed input.
bool is_feasible(const ProblemInstance& inst, const Solution& sol);
// Returns a description of the first violated constraint, or nullopt.
std::optional<std::string> feasibility_violation(const ProblemInstance& inst, const Solution& sol);

// tsp: tour length including forced arcs and the implicit closing arc.
// mis: -(number of selected nodes). Throws InfeasibleError on infeasible input.
double objective(const ProblemInstance& inst, const Solution& sol);

// tsp: tour as a node sequence starting at start_node. mis: selected nodes.
std::vector<std::int32_t> solution_node_order(const ProblemInstance& inst, const Solution& sol);

// Builds a tsp Solution from a node order, using candidate edges where they
// exist and forced arcs elsewhere.
Solution solution_from_order(const ProblemInstance& inst, const std::vector<std::int32_t>& order);

// Samples one complete construction. For tsp, start_node < 0 draws the start
// uniformly. greedy = true takes the arg max (lowest id on ties) instead of
// sampling.
Solution construct_solution(const Heatmap& h, const ProblemInstance& inst, Rng& rng,
                            int start_node = -1, bool greedy = false);

}  // namespace moco
