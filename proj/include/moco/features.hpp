#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

#include "moco/construction.hpp"
#include "moco/instance.hpp"
#include "moco/rollout.hpp"

namespace moco {

enum class GnnPhase { init, update };

std::string to_string(GnnPhase phase);
GnnPhase gnn_phase_from_string(const std::string& s);

// Archive size that feeds the fixed-width feature columns.
inline constexpr int kArchiveL = 32;
inline constexpr std::array<double, 11> kTimescales{1,    3,    10,    30,    100,   300,
                                                    1000, 3000, 10000, 30000, 100000};
// theta + grad + momenta + archive membership.
inline constexpr int kDecisionFeatureWidth = 2 + static_cast<int>(kMomentumBetas.size()) + kArchiveL;
// archive gaps + improvement + time embeddings + budget fraction.
inline constexpr int kGlobalFeatureWidth = kArchiveL + 1 + static_cast<int>(kTimescales.size()) + 1;

// Inputs to one GNN forward pass, column per entity (Eigen column-major).
// tsp: decision_features live on edges, node_features carry the start flag.
// mis: decision_features live on nodes, node_features unused.
// global_features is empty in the init phase.
struct FeatureGraph {
  const ProblemInstance* instance = nullptr;
  Eigen::MatrixXf decision_features;
  Eigen::MatrixXf node_features;
  Eigen::VectorXf global_features;
};

// Search-trajectory summary consumed by the update network.
struct SearchState {
  const ProblemInstance* instance = nullptr;
  Heatmap theta;
  GradientState grad_state;
  SolutionArchive archive{kArchiveL};
  int k = 0;
  int k_feature_denominator = 1;  // K used for the budget-fraction feature
  int start_node = -1;            // tsp restart's pinned start
  std::int64_t constructions = 0;
};

// Instance-only features for the init network: tsp edge distances and start
// flags; mis constant-one node features. No globals.
FeatureGraph build_init_graph(const ProblemInstance& inst, int start_node = -1);

// Search-state features for the update network; widths are fixed
// (kDecisionFeatureWidth / kGlobalFeatureWidth) regardless of how full the
// archive is.
FeatureGraph build_update_graph(const SearchState& state);

// (x - mean) / (stddev + 1e-8), population statistics.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

// tanh(k / timescale - 1) over the fixed timescale grid.
Eigen::VectorXd tanh_time_embedding(int k);

// Human-readable column listing for audits (CLI inspect).
std::string feature_manifest(ProblemKind kind, GnnPhase phase);

}  // namespace moco
