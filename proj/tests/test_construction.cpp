#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "moco/construction.hpp"
#include "moco/errors.hpp"
#include "moco/instance.hpp"
#include "moco/rng.hpp"

using namespace moco;

namespace {

Heatmap zero_heatmap(const ProblemInstance& inst) {
  return {Eigen::VectorXd::Zero(inst.num_decision_vars())};
}

// Four unit-square corners plus a centre point; hand-checkable distances.
ProblemInstance five_point_tsp() {
  ProblemInstance inst = generate_uniform_tsp(5, 0);
  inst.coords = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {0.5, 0.5}};
  // Rebuild lengths from the new coordinates.
  for (std::size_t e = 0; e < inst.edge_src.size(); ++e) {
    const auto& a = inst.coords[static_cast<std::size_t>(inst.edge_src[e])];
    const auto& b = inst.coords[static_cast<std::size_t>(inst.edge_dst[e])];
    inst.edge_len[e] = std::hypot(a[0] - b[0], a[1] - b[1]);
  }
  return inst;
}

// Path graph 0-1-2-3-4 as a mis instance.
ProblemInstance path_mis() {
  ProblemInstance g = generate_er_graph(5, 5, 0.0, 0);
  g.edge_src = {0, 1, 1, 2, 2, 3, 3, 4};
  g.edge_dst = {1, 0, 2, 1, 3, 2, 4, 3};
  g.edge_len.assign(8, 1.0);
  g.out_begin = {0, 1, 3, 5, 7, 8};
  g.check_consistent();
  return g;
}

}  // namespace

TEST_CASE("masked softmax normalises over the feasible set only") {
  const ProblemInstance inst = generate_uniform_tsp(6, 3);
  Heatmap h = zero_heatmap(inst);
  Rng rng(0);
  for (Eigen::Index i = 0; i < h.theta.size(); ++i) h.theta[i] = rng.normal();

  ConstructionState s = initial_state(inst, 2);
  const auto actions = feasible_actions(s);
  CHECK(actions.size() == 5);  // out-edges of the start to unvisited cities

  const Eigen::VectorXd sparse = action_probabilities_sparse(h, actions);
  CHECK(sparse.sum() == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::VectorXd dense = action_probabilities(h, s);
  CHECK(dense.size() == inst.num_decision_vars());
  CHECK(dense.sum() == doctest::Approx(1.0).epsilon(1e-12));
  double feasible_mass = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    CHECK(dense[actions[i]] == sparse[static_cast<Eigen::Index>(i)]);
    feasible_mass += dense[actions[i]];
  }
  CHECK(feasible_mass == doctest::Approx(1.0).epsilon(1e-12));
  // Masked-out entries are exactly zero, not merely small.
  std::set<std::int32_t> feas(actions.begin(), actions.end());
  for (Eigen::Index i = 0; i < dense.size(); ++i)
    if (feas.count(static_cast<std::int32_t>(i)) == 0) CHECK(dense[i] == 0.0);

  // Softmax ratios match the logits exactly.
  CHECK(sparse[1] / sparse[0] ==
        doctest::Approx(std::exp(h.theta[actions[1]] - h.theta[actions[0]])).epsilon(1e-12));
}

TEST_CASE("extreme logits stay finite through max subtraction") {
  const ProblemInstance inst = generate_uniform_tsp(5, 1);
  Heatmap h = zero_heatmap(inst);
  h.theta.setConstant(5000.0);
  h.theta[0] = -5000.0;
  ConstructionState s = initial_state(inst, 0);
  const Eigen::VectorXd p = action_probabilities(h, s);
  CHECK(p.allFinite());
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tsp construction walks feasibly to a terminal tour") {
  const ProblemInstance inst = five_point_tsp();
  Heatmap h = zero_heatmap(inst);
  ConstructionState s = initial_state(inst, 0);
  CHECK(s.current_node == 0);
  CHECK_FALSE(s.terminal);

  // Follow the corner cycle 0 -> 1 -> 2 -> 3 -> 4 by explicit edge choices.
  const std::vector<std::pair<int, int>> moves{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  for (const auto& [u, v] : moves) {
    const std::int32_t edge = inst.find_edge(u, v);
    REQUIRE(edge >= 0);
    const auto actions = feasible_actions(s);
    CHECK(std::find(actions.begin(), actions.end(), edge) != actions.end());
    apply_action(s, edge);
    CHECK(s.current_node == v);
  }
  CHECK(s.terminal);
  CHECK(feasible_actions(s).empty());

  const Solution sol = extract_solution(s);
  CHECK(is_feasible(inst, sol));
  CHECK(sol.start_node == 0);
  CHECK(sol.forced_arcs.empty());
  // Perimeter 3 plus two half-diagonals into and out of the centre point.
  const double expected = 3.0 + 2.0 * std::hypot(0.5, 0.5);
  CHECK(objective(inst, sol) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(solution_node_order(inst, sol) == std::vector<std::int32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("visited cities are never offered again") {
  const ProblemInstance inst = generate_uniform_tsp(7, 11);
  Heatmap h = zero_heatmap(inst);
  Rng rng(5);
  ConstructionState s = initial_state(inst, 3);
  std::set<std::int32_t> seen{3};
  while (!s.terminal) {
    const auto actions = feasible_actions(s);
    REQUIRE_FALSE(actions.empty());
    for (const std::int32_t a : actions)
      CHECK(seen.count(inst.edge_dst[static_cast<std::size_t>(a)]) == 0);
    const std::int32_t pick =
        actions[static_cast<std::size_t>(rng.uniform_below(actions.size()))];
    apply_action(s, pick);
    seen.insert(s.current_node);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("illegal actions are rejected") {
  const ProblemInstance inst = generate_uniform_tsp(5, 2);
  ConstructionState s = initial_state(inst, 0);
  const std::int32_t into_start = inst.find_edge(1, 0);
  REQUIRE(into_start >= 0);
  CHECK_THROWS_AS(apply_action(s, into_start), ContractViolation);  // wrong source node
  const std::int32_t fwd = inst.find_edge(0, 1);
  apply_action(s, fwd);
  CHECK_THROWS_AS(apply_action(s, fwd), ContractViolation);  // already decided
}

TEST_CASE("dead ends fall back to the nearest unvisited city") {
  // High knn sparsification plus an adversarial walk forces dead ends.
  const ProblemInstance inst = sparsify_knn(generate_uniform_tsp(12, 21), 3);
  Heatmap h = zero_heatmap(inst);
  int forced_seen = 0;
  for (int start = 0; start < 12; ++start) {
    ConstructionState s = initial_state(inst, start);
    Rng rng(static_cast<std::uint64_t>(start));
    while (!s.terminal) {
      const auto actions = feasible_actions(s);
      if (actions.empty()) {
        const std::int32_t target = forced_arc_target(s);
        // Independently verify: target is the closest unvisited city.
        const auto& cur = inst.coords[static_cast<std::size_t>(s.current_node)];
        double best = std::numeric_limits<double>::infinity();
        std::int32_t best_v = -1;
        for (std::int32_t v = 0; v < inst.n_nodes; ++v) {
          if (s.visited.test(static_cast<std::size_t>(v))) continue;
          const auto& c = inst.coords[static_cast<std::size_t>(v)];
          const double d = std::hypot(cur[0] - c[0], cur[1] - c[1]);
          if (d < best - 1e-15) {
            best = d;
            best_v = v;
          }
        }
        CHECK(target == best_v);
        apply_forced_arc(s, target);
        ++forced_seen;
      } else {
        apply_action(s, actions[static_cast<std::size_t>(rng.uniform_below(actions.size()))]);
      }
    }
    const Solution sol = extract_solution(s);
    CHECK(is_feasible(inst, sol));
    CHECK(objective(inst, sol) > 0.0);
  }
  CHECK(forced_seen > 0);  // k=3 must actually exercise the fallback
}

TEST_CASE("mis construction blocks neighbours of selected nodes") {
  const ProblemInstance g = path_mis();
  ConstructionState s = initial_state(g);
  apply_action(s, 1);
  auto actions = feasible_actions(s);
  CHECK(std::set<std::int32_t>(actions.begin(), actions.end()) == std::set<std::int32_t>{3, 4});
  apply_action(s, 3);
  CHECK(s.terminal);
  const Solution sol = extract_solution(s);
  CHECK(is_feasible(g, sol));
  CHECK(objective(g, sol) == -2.0);
  CHECK(solution_node_order(g, sol) == std::vector<std::int32_t>{1, 3});
}

TEST_CASE("mis greedy construction with biased logits picks the intended set") {
  const ProblemInstance g = path_mis();
  Heatmap h = zero_heatmap(g);
  h.theta << 5.0, -5.0, 4.0, -5.0, 3.0;  // favour 0, then 2, then 4
  Rng rng(0);
  const Solution sol = construct_solution(h, g, rng, -1, true);
  CHECK(objective(g, sol) == -3.0);
  CHECK(solution_node_order(g, sol) == std::vector<std::int32_t>{0, 2, 4});
}

TEST_CASE("feasibility checking is total and catches malformed solutions") {
  const ProblemInstance inst = generate_uniform_tsp(5, 9);
  Heatmap h = zero_heatmap(inst);
  Rng rng(1);
  const Solution good = construct_solution(h, inst, rng, 0);
  CHECK(is_feasible(inst, good));
  CHECK_FALSE(feasibility_violation(inst, good).has_value());

  Solution wrong_size = good;
  wrong_size.vars.resize(3);
  CHECK_FALSE(is_feasible(inst, wrong_size));

  Solution extra = good;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(extra.vars.size()); ++i)
    if (!extra.vars.test(static_cast<std::size_t>(i))) {
      extra.vars.set(static_cast<std::size_t>(i));
      break;
    }
  CHECK_FALSE(is_feasible(inst, extra));
  CHECK(feasibility_violation(inst, extra).has_value());
  CHECK_THROWS_AS(objective(inst, extra), InfeasibleError);

  Solution empty;
  empty.vars.resize(static_cast<std::size_t>(inst.num_decision_vars()));
  empty.start_node = 0;
  CHECK_FALSE(is_feasible(inst, empty));

  // mis: adjacent pair.
  const ProblemInstance g = path_mis();
  Solution adj;
  adj.vars.resize(5);
  adj.vars.set(1);
  adj.vars.set(2);
  CHECK_FALSE(is_feasible(g, adj));
  Solution ok;
  ok.vars.resize(5);
  ok.vars.set(0);
  ok.vars.set(4);
  CHECK(is_feasible(g, ok));
}

TEST_CASE("solution/node-order conversions round trip") {
  const ProblemInstance inst = generate_uniform_tsp(8, 13);
  Heatmap h = zero_heatmap(inst);
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial));
    const Solution sol = construct_solution(h, inst, rng);
    const auto order = solution_node_order(inst, sol);
    CHECK(order.size() == 8);
    const Solution back = solution_from_order(inst, order);
    CHECK(back == sol);
    CHECK(objective(inst, back) == objective(inst, sol));
  }
}

TEST_CASE("sampled constructions are reproducible and respect determinism") {
  const ProblemInstance inst = generate_uniform_tsp(9, 17);
  Heatmap h = zero_heatmap(inst);
  Rng r1(42), r2(42), r3(43);
  const Solution a = construct_solution(h, inst, r1);
  const Solution b = construct_solution(h, inst, r2);
  CHECK(a == b);
  const Solution c = construct_solution(h, inst, r3);
  CHECK(is_feasible(inst, c));
}

TEST_CASE("greedy construction takes the arg max with lowest-id ties") {
  const ProblemInstance inst = generate_uniform_tsp(6, 23);
  Heatmap h = zero_heatmap(inst);  // all logits tie -> lowest edge id wins
  Rng rng(0);
  ConstructionState s = initial_state(inst, 0);
  std::vector<std::int32_t> expect;
  while (!s.terminal) {
    const auto actions = feasible_actions(s);
    REQUIRE_FALSE(actions.empty());
    expect.push_back(actions.front());
    apply_action(s, actions.front());
  }
  Rng rng2(0);
  const Solution greedy = construct_solution(h, inst, rng2, 0, true);
  const Solution manual = extract_solution(s);
  CHECK(greedy == manual);
  for (const std::int32_t e : expect) CHECK(greedy.vars.test(static_cast<std::size_t>(e)));
}

TEST_CASE("heatmap files round trip") {
  const ProblemInstance inst = generate_uniform_tsp(6, 2);
  Heatmap h = zero_heatmap(inst);
  Rng rng(9);
  for (Eigen::Index i = 0; i < h.theta.size(); ++i) h.theta[i] = rng.normal();
  const auto path = (std::filesystem::temp_directory_path() / "hm_test.heatmap").string();
  save_heatmap(h, ProblemKind::tsp, path);
  ProblemKind kind = ProblemKind::mis;
  const Heatmap back = load_heatmap(path, &kind);
  CHECK(kind == ProblemKind::tsp);
  CHECK(back.theta == h.theta);
}
