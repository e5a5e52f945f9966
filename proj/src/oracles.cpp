#include "moco/oracles.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <limits>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

OracleResult held_karp_exact(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::tsp) throw ContractViolation("held_karp_exact needs tsp");
  const int n = inst.n_nodes;
  if (n > 16) throw ContractViolation("held_karp_exact supports n <= 16");
  const auto t0 = Clock::now();

  // dp[mask][j]: cheapest path from node 0 through set mask (over nodes
  // 1..n-1), ending at node j+1. Start is fixed at node 0; tour cost is
  // start-invariant.
  const int m = n - 1;
  const std::size_t nmask = std::size_t{1} << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist[static_cast<std::size_t>(i) * n + j] = i == j ? 0.0 : inst.dense_distance(i, j);
  std::vector<double> dp(nmask * m, inf);
  std::vector<std::int8_t> parent(nmask * m, -1);
  std::int64_t explored = 0;
  for (int j = 0; j < m; ++j)
    dp[(std::size_t{1} << j) * m + j] = dist[static_cast<std::size_t>(0) * n + (j + 1)];
  for (std::size_t mask = 1; mask < nmask; ++mask) {
    for (int j = 0; j < m; ++j) {
      if (!(mask >> j & 1)) continue;
      const double cur = dp[mask * m + j];
      if (cur == inf) continue;
      for (int k = 0; k < m; ++k) {
        if (mask >> k & 1) continue;
        const std::size_t nxt = mask | (std::size_t{1} << k);
        const double cand = cur + dist[static_cast<std::size_t>(j + 1) * n + (k + 1)];
        ++explored;
        if (cand < dp[nxt * m + k]) {
          dp[nxt * m + k] = cand;
          parent[nxt * m + k] = static_cast<std::int8_t>(j);
        }
      }
    }
  }
  const std::size_t full = nmask - 1;
  double best = inf;
  int best_end = 0;
  for (int j = 0; j < m; ++j) {
    const double cand = dp[full * m + j] + dist[static_cast<std::size_t>(j + 1) * n + 0];
    if (cand < best) {
      best = cand;
      best_end = j;
    }
  }
  std::vector<std::int32_t> order;
  std::size_t mask = full;
  int j = best_end;
  while (j >= 0) {
    order.push_back(j + 1);
    const int pj = parent[mask * m + j];
    mask ^= std::size_t{1} << j;
    j = pj;
  }
  order.push_back(0);
  std::reverse(order.begin(), order.end());

  OracleResult res;
  res.solution = solution_from_order(inst, order);
  res.objective = objective(inst, res.solution);
  res.explored = explored;
  res.wall_ms = ms_since(t0);
  return res;
}

namespace {

struct MisSearch {
  const std::vector<std::uint64_t>* adj;
  std::uint64_t best_set = 0;
  int best_size = 0;
  std::int64_t explored = 0;

  void run(std::uint64_t cand, std::uint64_t chosen, int size) {
    ++explored;
    if (size + std::popcount(cand) <= best_size) return;
    if (cand == 0) {
      best_size = size;
      best_set = chosen;
      return;
    }
    // Pivot on the candidate with the most candidate neighbours: both
    // branches shrink quickly.
    int pivot = -1, pivot_deg = -1;
    for (std::uint64_t rest = cand; rest != 0; rest &= rest - 1) {
      const int v = std::countr_zero(rest);
      const int deg = std::popcount((*adj)[static_cast<std::size_t>(v)] & cand);
      if (deg > pivot_deg) {
        pivot_deg = deg;
        pivot = v;
      }
    }
    const std::uint64_t bit = std::uint64_t{1} << pivot;
    // Isolated candidates always join the set.
    if (pivot_deg == 0) {
      run(0, chosen | cand, size + std::popcount(cand));
      return;
    }
    run(cand & ~bit & ~(*adj)[static_cast<std::size_t>(pivot)], chosen | bit, size + 1);
    run(cand & ~bit, chosen, size);
  }
};

}  // namespace

OracleResult mis_exact(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::mis) throw ContractViolation("mis_exact needs mis");
  const int n = inst.n_nodes;
  if (n > 64) throw ContractViolation("mis_exact supports n <= 64");
  const auto t0 = Clock::now();
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(n), 0);
  for (std::int64_t e = 0; e < inst.num_edges(); ++e)
    adj[static_cast<std::size_t>(inst.edge_src[static_cast<std::size_t>(e)])] |=
        std::uint64_t{1} << inst.edge_dst[static_cast<std::size_t>(e)];
  MisSearch search;
  search.adj = &adj;
  const std::uint64_t all =
      n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  search.run(all, 0, 0);

  OracleResult res;
  res.solution.vars.resize(static_cast<std::size_t>(n));
  for (std::uint64_t rest = search.best_set; rest != 0; rest &= rest - 1)
    res.solution.vars.set(static_cast<std::size_t>(std::countr_zero(rest)));
  res.objective = objective(inst, res.solution);
  res.explored = search.explored;
  res.wall_ms = ms_since(t0);
  return res;
}

namespace {

struct Enumerator {
  const ProblemInstance* inst;
  const Heatmap* heatmap;
  std::int64_t max_traj;
  PolicyEnumeration out;
  Eigen::VectorXd score;

  void dfs(ConstructionState& s, double prob) {
    if (s.terminal) {
      if (++out.trajectories > max_traj)
        throw ContractViolation("policy enumeration exceeds the trajectory limit");
      const double f = objective(*inst, extract_solution(s));
      out.expected_objective += prob * f;
      out.gradient += (prob * f) * score;
      out.probability_mass += prob;
      return;
    }
    const auto actions = feasible_actions(s);
    if (actions.empty()) {
      // Forced arc: conditional probability 1, no score contribution.
      ConstructionState child = s;
      apply_forced_arc(child, forced_arc_target(child));
      dfs(child, prob);
      return;
    }
    const Eigen::VectorXd p = action_probabilities_sparse(*heatmap, actions);
    for (std::size_t i = 0; i < actions.size(); ++i) score[actions[i]] -= p[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < actions.size(); ++i) {
      score[actions[i]] += 1.0;
      ConstructionState child = s;
      apply_action(child, actions[i]);
      dfs(child, prob * p[static_cast<Eigen::Index>(i)]);
      score[actions[i]] -= 1.0;
    }
    for (std::size_t i = 0; i < actions.size(); ++i) score[actions[i]] += p[static_cast<Eigen::Index>(i)];
  }
};

}  // namespace

PolicyEnumeration enumerate_policy(const ProblemInstance& inst, const Heatmap& h, int start_node,
                                   std::int64_t max_trajectories) {
  if (h.theta.size() != inst.num_decision_vars())
    throw ContractViolation("heatmap size does not match decision variable count");
  if (inst.kind == ProblemKind::tsp && start_node < 0)
    throw ContractViolation("policy enumeration needs a fixed tsp start node");
  Enumerator e;
  e.inst = &inst;
  e.heatmap = &h;
  e.max_traj = max_trajectories;
  e.out.gradient = Eigen::VectorXd::Zero(inst.num_decision_vars());
  e.score = Eigen::VectorXd::Zero(inst.num_decision_vars());
  ConstructionState s = initial_state(inst, inst.kind == ProblemKind::tsp ? start_node : -1);
  e.dfs(s, 1.0);
  return e.out;
}

}  // namespace moco
