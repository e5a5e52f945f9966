#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "moco/construction.hpp"
#include "moco/errors.hpp"
#include "moco/instance.hpp"
#include "moco/oracles.hpp"
#include "moco/rng.hpp"

using namespace moco;

namespace {

// Brute-force optimal tour cost by enumerating all (n-1)! permutations.
double brute_force_tour(const ProblemInstance& inst) {
  std::vector<std::int32_t> rest(static_cast<std::size_t>(inst.n_nodes - 1));
  std::iota(rest.begin(), rest.end(), 1);
  const auto dist = [&](int i, int j) { return inst.dense_distance(i, j); };
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = dist(0, rest.front());
    for (std::size_t i = 0; i + 1 < rest.size(); ++i) cost += dist(rest[i], rest[i + 1]);
    cost += dist(rest.back(), 0);
    best = std::min(best, cost);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

// Brute-force maximum independent set size over all 2^n subsets.
int brute_force_mis(const ProblemInstance& g) {
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(g.n_nodes), 0);
  for (std::size_t e = 0; e < g.edge_src.size(); ++e)
    adj[static_cast<std::size_t>(g.edge_src[e])] |= 1ull << g.edge_dst[e];
  int best = 0;
  for (std::uint64_t mask = 0; mask < (1ull << g.n_nodes); ++mask) {
    bool ok = true;
    for (int v = 0; v < g.n_nodes && ok; ++v)
      if ((mask >> v) & 1) ok = (adj[static_cast<std::size_t>(v)] & mask) == 0;
    if (ok) best = std::max(best, __builtin_popcountll(mask));
  }
  return best;
}

// Exhaustive expectation of the tsp construction policy from a fixed start:
// recursively walk every order, multiplying softmax probabilities.
void enumerate_tsp(const ProblemInstance& inst, const Heatmap& h, ConstructionState s, double prob,
                   double& expectation, double& mass, Eigen::VectorXd& grad,
                   Eigen::VectorXd score) {
  if (s.terminal) {
    const double f = objective(inst, extract_solution(s));
    expectation += prob * f;
    mass += prob;
    grad += prob * f * score;
    return;
  }
  const auto actions = feasible_actions(s);
  if (actions.empty()) {  // dead end: forced arc, probability 1, no score term
    apply_forced_arc(s, forced_arc_target(s));
    enumerate_tsp(inst, h, s, prob, expectation, mass, grad, score);
    return;
  }
  const Eigen::VectorXd p = action_probabilities_sparse(h, actions);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    ConstructionState next = s;
    apply_action(next, actions[i]);
    Eigen::VectorXd sc = score;
    for (std::size_t j = 0; j < actions.size(); ++j)
      sc[actions[j]] -= p[static_cast<Eigen::Index>(j)];
    sc[actions[i]] += 1.0;
    enumerate_tsp(inst, h, next, prob * p[static_cast<Eigen::Index>(i)], expectation, mass, grad,
                  sc);
  }
}

}  // namespace

TEST_CASE("held-karp equals brute force on random instances") {
  for (const std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const ProblemInstance inst = generate_uniform_tsp(8, seed);
    const OracleResult r = held_karp_exact(inst);
    CHECK(r.objective == doctest::Approx(brute_force_tour(inst)).epsilon(1e-12));
    // The reported solution prices to the reported objective and is feasible.
    CHECK(is_feasible(inst, r.solution));
    CHECK(objective(inst, r.solution) == doctest::Approx(r.objective).epsilon(1e-12));
  }
}

TEST_CASE("held-karp handles the smallest instance") {
  const ProblemInstance inst = generate_uniform_tsp(3, 7);
  const OracleResult r = held_karp_exact(inst);
  const double expected =
      inst.dense_distance(0, 1) + inst.dense_distance(1, 2) + inst.dense_distance(2, 0);
  CHECK(r.objective == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("held-karp refuses oversized instances") {
  CHECK_THROWS_AS(held_karp_exact(generate_uniform_tsp(17, 0)), ContractViolation);
}

TEST_CASE("exact mis equals brute force across densities") {
  int nontrivial = 0;
  for (const double p : {0.1, 0.3, 0.6, 0.9}) {
    for (const std::uint64_t seed : {10ull, 20ull, 30ull}) {
      const ProblemInstance g = generate_er_graph(12, 16, p, seed);
      const OracleResult r = mis_exact(g);
      const int expected = brute_force_mis(g);
      CHECK(-r.objective == expected);
      CHECK(is_feasible(g, r.solution));
      CHECK(objective(g, r.solution) == r.objective);
      if (expected < g.n_nodes) ++nontrivial;
    }
  }
  CHECK(nontrivial > 0);
}

TEST_CASE("exact mis on edgeless and complete graphs") {
  const ProblemInstance empty = generate_er_graph(9, 9, 0.0, 1);
  CHECK(-mis_exact(empty).objective == 9);
  const ProblemInstance full = generate_er_graph(9, 9, 1.0, 1);
  CHECK(-mis_exact(full).objective == 1);
}

TEST_CASE("policy enumeration matches an independent exhaustive walk") {
  for (const std::uint64_t seed : {3ull, 4ull}) {
    const ProblemInstance inst = generate_uniform_tsp(5, seed);
    Heatmap h{Eigen::VectorXd::Zero(inst.num_decision_vars())};
    Rng rng(seed);
    for (Eigen::Index i = 0; i < h.theta.size(); ++i) h.theta[i] = 0.8 * rng.normal();

    const PolicyEnumeration pe = enumerate_policy(inst, h, 0);
    CHECK(pe.trajectories == 24);  // 4! orders from a fixed start
    CHECK(pe.probability_mass == doctest::Approx(1.0).epsilon(1e-12));

    double expectation = 0.0, mass = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(h.theta.size());
    enumerate_tsp(inst, h, initial_state(inst, 0), 1.0, expectation, mass, grad,
                  Eigen::VectorXd::Zero(h.theta.size()));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pe.expected_objective == doctest::Approx(expectation).epsilon(1e-12));
    for (Eigen::Index i = 0; i < grad.size(); ++i)
      CHECK(pe.gradient[i] == doctest::Approx(grad[i]).epsilon(1e-9));
  }
}

TEST_CASE("policy enumeration gradient matches finite differences") {
  const ProblemInstance inst = generate_uniform_tsp(5, 11);
  Heatmap h{Eigen::VectorXd::Zero(inst.num_decision_vars())};
  Rng rng(2);
  for (Eigen::Index i = 0; i < h.theta.size(); ++i) h.theta[i] = 0.5 * rng.normal();
  const PolicyEnumeration pe = enumerate_policy(inst, h, 0);

  const double eps = 1e-6;
  for (const Eigen::Index i : {0, 5, 11, 17}) {
    Heatmap hp = h, hm = h;
    hp.theta[i] += eps;
    hm.theta[i] -= eps;
    const double fd = (enumerate_policy(inst, hp, 0).expected_objective -
                       enumerate_policy(inst, hm, 0).expected_objective) /
                      (2.0 * eps);
    CHECK(std::abs(pe.gradient[i] - fd) < 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("policy enumeration covers mis instances") {
  const ProblemInstance g = generate_er_graph(7, 7, 0.35, 5);
  Heatmap h{Eigen::VectorXd::Zero(g.num_decision_vars())};
  Rng rng(3);
  for (Eigen::Index i = 0; i < h.theta.size(); ++i) h.theta[i] = 0.7 * rng.normal();
  const PolicyEnumeration pe = enumerate_policy(g, h);
  CHECK(pe.probability_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pe.expected_objective <= -1.0);  // at least one node is always selectable

  const double eps = 1e-6;
  for (Eigen::Index i = 0; i < h.theta.size(); i += 2) {
    Heatmap hp = h, hm = h;
    hp.theta[i] += eps;
    hm.theta[i] -= eps;
    const double fd = (enumerate_policy(g, hp).expected_objective -
                       enumerate_policy(g, hm).expected_objective) /
                      (2.0 * eps);
    CHECK(std::abs(pe.gradient[i] - fd) < 2e-6 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("policy enumeration requires a tsp start node") {
  const ProblemInstance inst = generate_uniform_tsp(4, 0);
  Heatmap h{Eigen::VectorXd::Zero(inst.num_decision_vars())};
  CHECK_THROWS_AS(enumerate_policy(inst, h, -1), ContractViolation);
}

TEST_CASE("policy enumeration rejects exploding trajectory counts") {
  const ProblemInstance inst = generate_uniform_tsp(12, 0);
  Heatmap h{Eigen::VectorXd::Zero(inst.num_decision_vars())};
  CHECK_THROWS_AS(enumerate_policy(inst, h, 0, 1000), ContractViolation);
}
