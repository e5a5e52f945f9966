#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "moco/construction.hpp"
#include "moco/instance.hpp"

namespace moco {

struct OracleResult {
  double objective = 0.0;
  Solution solution;
  std::int64_t explored = 0;  // DP transitions / branch-and-bound nodes
  double wall_ms = 0.0;
};

// Exact shortest tour by Held-Karp dynamic programming over subsets.
// Dense Euclidean distances; n <= 16.
OracleResult held_karp_exact(const ProblemInstance& inst);

// Exact maximum independent set by branch and bound with a cardinality
// bound and max-degree pivoting; n <= 64 supported, intended for n <= 40.
// objective is -(set size), matching the construction objective.
OracleResult mis_exact(const ProblemInstance& inst);

// Exact policy expectation and score-function gradient by enumerating every
// construction trajectory of the masked-softmax policy.
struct PolicyEnumeration {
  double expected_objective = 0.0;
  Eigen::VectorXd gradient;       // d/dtheta E[f]
  double probability_mass = 0.0;  // sums to 1 up to rounding
  std::int64_t trajectories = 0;
};

// For tsp a fixed start_node >= 0 is required. Throws ContractViolation when
// the trajectory count would exceed max_trajectories.
PolicyEnumeration enumerate_policy(const ProblemInstance& inst, const Heatmap& h,
                                   int start_node = -1,
                                   std::int64_t max_trajectories = 1000000);

}  // namespace moco
