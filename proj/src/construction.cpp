#include "moco/construction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "moco/errors.hpp"
#include "moco/instance_io.hpp"

namespace moco {

void save_heatmap(const Heatmap& h, ProblemKind kind, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "moco-heatmap " << to_string(kind) << " " << h.theta.size() << "\n";
  for (Eigen::Index i = 0; i < h.theta.size(); ++i) f << format_double(h.theta[i]) << "\n";
  if (!f) throw DataError("write failed for '" + path + "'");
}

Heatmap load_heatmap(const std::string& path, ProblemKind* kind_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for reading");
  std::string tag, kind_str;
  std::int64_t n = -1;
  f >> tag >> kind_str >> n;
  if (!f || tag != "moco-heatmap" || n < 0)
    throw ParseError(path + ": expected 'moco-heatmap <kind> <count>' header");
  const ProblemKind kind = problem_kind_from_string(kind_str);
  Heatmap h;
  h.theta.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    std::string tok;
    if (!(f >> tok)) throw ParseError(path + ": expected " + std::to_string(n) + " values");
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ParseError(path + ": bad value '" + tok + "'");
    h.theta[i] = v;
  }
  if (kind_out != nullptr) *kind_out = kind;
  return h;
}

bool solution_less(const Solution& a, const Solution& b) {
  if (a.start_node != b.start_node) return a.start_node < b.start_node;
  if (a.vars.size() != b.vars.size()) return a.vars.size() < b.vars.size();
  if (a.vars != b.vars) return a.vars < b.vars;
  return a.forced_arcs < b.forced_arcs;
}

ConstructionState initial_state(const ProblemInstance& inst, int start_node) {
  ConstructionState s;
  s.instance = &inst;
  s.assignment.resize(static_cast<std::size_t>(inst.num_decision_vars()));
  if (inst.kind == ProblemKind::tsp) {
    if (start_node < 0 || start_node >= inst.n_nodes)
      throw ContractViolation("tsp construction needs a start node in [0, n)");
    s.start_node = start_node;
    s.current_node = start_node;
    s.visited.resize(static_cast<std::size_t>(inst.n_nodes));
    s.visited.set(static_cast<std::size_t>(start_node));
    s.visited_count = 1;
    s.terminal = inst.n_nodes == 1;
  } else {
    s.blocked.resize(static_cast<std::size_t>(inst.n_nodes));
    s.terminal = inst.n_nodes == 0;
  }
  return s;
}

std::vector<std::int32_t> feasible_actions(const ConstructionState& s) {
  std::vector<std::int32_t> out;
  if (s.terminal) return out;
  const ProblemInstance& inst = *s.instance;
  if (inst.kind == ProblemKind::tsp) {
    auto [first, last] = inst.out_range(s.current_node);
    for (std::int64_t e = first; e < last; ++e)
      if (!s.visited.test(static_cast<std::size_t>(inst.edge_dst[static_cast<std::size_t>(e)])))
        out.push_back(static_cast<std::int32_t>(e));
  } else {
    for (int i = 0; i < inst.n_nodes; ++i)
      if (!s.blocked.test(static_cast<std::size_t>(i))) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd action_probabilities_sparse(const Heatmap& h,
                                            const std::vector<std::int32_t>& actions) {
  if (actions.empty()) throw ContractViolation("softmax over an empty action set");
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto a : actions) mx = std::max(mx, h.theta[a]);
  Eigen::VectorXd p(static_cast<Eigen::Index>(actions.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double w = std::exp(h.theta[actions[i]] - mx);
    p[static_cast<Eigen::Index>(i)] = w;
    sum += w;
  }
  p /= sum;
  return p;
}

Eigen::VectorXd action_probabilities(const Heatmap& h, const ConstructionState& s) {
  const auto actions = feasible_actions(s);
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(h.theta.size());
  if (actions.empty()) return dense;
  const Eigen::VectorXd p = action_probabilities_sparse(h, actions);
  for (std::size_t i = 0; i < actions.size(); ++i)
    dense[actions[i]] = p[static_cast<Eigen::Index>(i)];
  return dense;
}

void apply_action(ConstructionState& s, std::int32_t var) {
  const ProblemInstance& inst = *s.instance;
  if (s.terminal) throw ContractViolation("apply_action on a terminal state");
  if (var < 0 || var >= inst.num_decision_vars())
    throw ContractViolation("decision variable out of range");
  if (inst.kind == ProblemKind::tsp) {
    const auto dst = inst.edge_dst[static_cast<std::size_t>(var)];
    if (inst.edge_src[static_cast<std::size_t>(var)] != s.current_node)
      throw ContractViolation("edge does not leave the current node");
    if (s.visited.test(static_cast<std::size_t>(dst)))
      throw ContractViolation("edge leads to a visited node");
    s.assignment.set(static_cast<std::size_t>(var));
    s.visited.set(static_cast<std::size_t>(dst));
    s.current_node = dst;
    ++s.visited_count;
    ++s.step;
    s.terminal = s.visited_count == inst.n_nodes;
  } else {
    if (s.blocked.test(static_cast<std::size_t>(var)))
      throw ContractViolation("node is selected or adjacent to a selected node");
    s.assignment.set(static_cast<std::size_t>(var));
    s.blocked.set(static_cast<std::size_t>(var));
    auto [first, last] = inst.out_range(var);
    for (std::int64_t e = first; e < last; ++e)
      s.blocked.set(static_cast<std::size_t>(inst.edge_dst[static_cast<std::size_t>(e)]));
    ++s.selected_count;
    ++s.step;
    s.terminal = s.blocked.all();
  }
}

std::int32_t forced_arc_target(const ConstructionState& s) {
  const ProblemInstance& inst = *s.instance;
  if (inst.kind != ProblemKind::tsp)
    throw ContractViolation("forced arcs exist only for tsp constructions");
  if (s.terminal) throw ContractViolation("forced arc requested on a terminal state");
  {
    auto [first, last] = inst.out_range(s.current_node);
    for (std::int64_t e = first; e < last; ++e)
      if (!s.visited.test(static_cast<std::size_t>(inst.edge_dst[static_cast<std::size_t>(e)])))
        throw ContractViolation("forced arc requested while a feasible action exists");
  }
  std::int32_t best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < inst.n_nodes; ++v) {
    if (s.visited.test(static_cast<std::size_t>(v))) continue;
    const double d = inst.dense_distance(s.current_node, v);
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

void apply_forced_arc(ConstructionState& s, std::int32_t target) {
  const ProblemInstance& inst = *s.instance;
  if (inst.kind != ProblemKind::tsp)
    throw ContractViolation("forced arcs exist only for tsp constructions");
  if (s.terminal || target < 0 || target >= inst.n_nodes ||
      s.visited.test(static_cast<std::size_t>(target)))
    throw ContractViolation("invalid forced arc target");
  s.forced_arcs.push_back({s.current_node, target});
  s.visited.set(static_cast<std::size_t>(target));
  s.current_node = target;
  ++s.visited_count;
  ++s.step;
  s.terminal = s.visited_count == inst.n_nodes;
}

Solution extract_solution(const ConstructionState& s) {
  if (!s.terminal) throw ContractViolation("extract_solution on a non-terminal state");
  Solution sol;
  sol.vars = s.assignment;
  sol.forced_arcs = s.forced_arcs;
  sol.start_node = s.start_node;
  return sol;
}

namespace {

std::optional<std::string> tsp_violation(const ProblemInstance& inst, const Solution& sol) {
  const int n = inst.n_nodes;
  if (sol.vars.size() != static_cast<std::size_t>(inst.num_edges()))
    return "assignment size does not match edge count";
  if (sol.start_node < 0 || sol.start_node >= n) return "start node out of range";
  // Collect moves: decided candidate edges plus forced arcs.
  std::vector<std::int32_t> next(static_cast<std::size_t>(n), -1);
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  std::int64_t moves = 0;
  for (std::size_t e = sol.vars.find_first(); e != Bitset::npos; e = sol.vars.find_next(e)) {
    const auto u = inst.edge_src[e];
    const auto v = inst.edge_dst[e];
    if (next[static_cast<std::size_t>(u)] != -1)
      return "node " + std::to_string(u) + " has two outgoing moves";
    next[static_cast<std::size_t>(u)] = v;
    ++indeg[static_cast<std::size_t>(v)];
    ++moves;
  }
  for (const auto& arc : sol.forced_arcs) {
    const auto u = arc[0];
    const auto v = arc[1];
    if (u < 0 || u >= n || v < 0 || v >= n || u == v) return "forced arc endpoint out of range";
    if (next[static_cast<std::size_t>(u)] != -1)
      return "node " + std::to_string(u) + " has two outgoing moves";
    next[static_cast<std::size_t>(u)] = v;
    ++indeg[static_cast<std::size_t>(v)];
    ++moves;
  }
  if (moves != n - 1)
    return "expected " + std::to_string(n - 1) + " moves, found " + std::to_string(moves);
  if (indeg[static_cast<std::size_t>(sol.start_node)] != 0)
    return "start node has an incoming move";
  for (int v = 0; v < n; ++v)
    if (indeg[static_cast<std::size_t>(v)] > 1)
      return "node " + std::to_string(v) + " has two incoming moves";
  // Walk the path: must visit all n nodes exactly once from the start.
  std::int32_t cur = sol.start_node;
  int seen = 1;
  while (next[static_cast<std::size_t>(cur)] != -1) {
    cur = next[static_cast<std::size_t>(cur)];
    ++seen;
    if (seen > n) return "path contains a cycle";
  }
  if (seen != n) return "path does not visit every node";
  return std::nullopt;
}

std::optional<std::string> mis_violation(const ProblemInstance& inst, const Solution& sol) {
  if (sol.vars.size() != static_cast<std::size_t>(inst.n_nodes))
    return "assignment size does not match node count";
  if (!sol.forced_arcs.empty()) return "forced arcs are not defined for independent sets";
  for (std::int64_t e = 0; e < inst.num_edges(); ++e) {
    const auto u = inst.edge_src[static_cast<std::size_t>(e)];
    const auto v = inst.edge_dst[static_cast<std::size_t>(e)];
    if (sol.vars.test(static_cast<std::size_t>(u)) && sol.vars.test(static_cast<std::size_t>(v)))
      return "adjacent nodes " + std::to_string(u) + " and " + std::to_string(v) +
             " both selected";
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> feasibility_violation(const ProblemInstance& inst, const Solution& sol) {
  return inst.kind == ProblemKind::tsp ? tsp_violation(inst, sol) : mis_violation(inst, sol);
}

bool is_feasible(const ProblemInstance& inst, const Solution& sol) {
  return !feasibility_violation(inst, sol).has_value();
}

double objective(const ProblemInstance& inst, const Solution& sol) {
  if (const auto why = feasibility_violation(inst, sol))
    throw InfeasibleError("infeasible solution: " + *why);
  if (inst.kind == ProblemKind::mis) return -static_cast<double>(sol.vars.count());
  // Walk the tour in path order so the summation order is deterministic.
  std::vector<std::int32_t> next(static_cast<std::size_t>(inst.n_nodes), -1);
  std::vector<double> move_len(static_cast<std::size_t>(inst.n_nodes), 0.0);
  for (std::size_t e = sol.vars.find_first(); e != Bitset::npos; e = sol.vars.find_next(e)) {
    next[static_cast<std::size_t>(inst.edge_src[e])] = inst.edge_dst[e];
    move_len[static_cast<std::size_t>(inst.edge_src[e])] = inst.edge_len[e];
  }
  for (const auto& arc : sol.forced_arcs) {
    next[static_cast<std::size_t>(arc[0])] = arc[1];
    move_len[static_cast<std::size_t>(arc[0])] = inst.dense_distance(arc[0], arc[1]);
  }
  double total = 0.0;
  std::int32_t cur = sol.start_node;
  while (next[static_cast<std::size_t>(cur)] != -1) {
    total += move_len[static_cast<std::size_t>(cur)];
    cur = next[static_cast<std::size_t>(cur)];
  }
  total += inst.dense_distance(cur, sol.start_node);  // implicit closing arc
  return total;
}

std::vector<std::int32_t> solution_node_order(const ProblemInstance& inst, const Solution& sol) {
  std::vector<std::int32_t> order;
  if (inst.kind == ProblemKind::mis) {
    for (std::size_t v = sol.vars.find_first(); v != Bitset::npos; v = sol.vars.find_next(v))
      order.push_back(static_cast<std::int32_t>(v));
    return order;
  }
  if (const auto why = feasibility_violation(inst, sol))
    throw InfeasibleError("infeasible solution: " + *why);
  std::vector<std::int32_t> next(static_cast<std::size_t>(inst.n_nodes), -1);
  for (std::size_t e = sol.vars.find_first(); e != Bitset::npos; e = sol.vars.find_next(e))
    next[static_cast<std::size_t>(inst.edge_src[e])] = inst.edge_dst[e];
  for (const auto& arc : sol.forced_arcs) next[static_cast<std::size_t>(arc[0])] = arc[1];
  std::int32_t cur = sol.start_node;
  order.push_back(cur);
  while (next[static_cast<std::size_t>(cur)] != -1) {
    cur = next[static_cast<std::size_t>(cur)];
    order.push_back(cur);
  }
  return order;
}

Solution solution_from_order(const ProblemInstance& inst, const std::vector<std::int32_t>& order) {
  if (inst.kind != ProblemKind::tsp)
    throw ContractViolation("solution_from_order applies to tsp instances");
  if (static_cast<int>(order.size()) != inst.n_nodes)
    throw ContractViolation("order must contain every node exactly once");
  Solution sol;
  sol.vars.resize(static_cast<std::size_t>(inst.num_edges()));
  sol.start_node = order.front();
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto e = inst.find_edge(order[i], order[i + 1]);
    if (e >= 0)
      sol.vars.set(static_cast<std::size_t>(e));
    else
      sol.forced_arcs.push_back({order[i], order[i + 1]});
  }
  if (const auto why = feasibility_violation(inst, sol))
    throw ContractViolation("order is not a permutation: " + *why);
  return sol;
}

Solution construct_solution(const Heatmap& h, const ProblemInstance& inst, Rng& rng,
                            int start_node, bool greedy) {
  if (h.theta.size() != inst.num_decision_vars())
    throw ContractViolation("heatmap size does not match decision variable count");
  int start = start_node;
  if (inst.kind == ProblemKind::tsp && start < 0)
    start = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(inst.n_nodes)));
  ConstructionState s = initial_state(inst, start);
  std::vector<std::int32_t> actions;
  while (!s.terminal) {
    actions = feasible_actions(s);
    if (actions.empty()) {
      apply_forced_arc(s, forced_arc_target(s));
      continue;
    }
    std::size_t pick = 0;
    if (greedy) {
      for (std::size_t i = 1; i < actions.size(); ++i)
        if (h.theta[actions[i]] > h.theta[actions[pick]]) pick = i;
    } else {
      const Eigen::VectorXd p = action_probabilities_sparse(h, actions);
      const double r = rng.uniform01();
      double acc = 0.0;
      pick = actions.size() - 1;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        acc += p[static_cast<Eigen::Index>(i)];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    apply_action(s, actions[pick]);
  }
  return extract_solution(s);
}

}  // namespace moco
