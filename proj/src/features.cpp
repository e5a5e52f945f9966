#include "moco/features.hpp"

#include <cmath>
#include <sstream>

#include "moco/errors.hpp"

namespace moco {

std::string to_string(GnnPhase phase) { return phase == GnnPhase::init ? "init" : "update"; }

GnnPhase gnn_phase_from_string(const std::string& s) {
  if (s == "init") return GnnPhase::init;
  if (s == "update") return GnnPhase::update;
  throw ConfigError("unknown phase '" + s + "' (expected init or update)");
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
  if (x.size() == 0) return x;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  return (x.array() - mean) / (std::sqrt(var) + 1e-8);
}

Eigen::VectorXd tanh_time_embedding(int k) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(kTimescales.size()));
  for (std::size_t i = 0; i < kTimescales.size(); ++i)
    e[static_cast<Eigen::Index>(i)] = std::tanh(static_cast<double>(k) / kTimescales[i] - 1.0);
  return e;
}

FeatureGraph build_init_graph(const ProblemInstance& inst, int start_node) {
  FeatureGraph fg;
  fg.instance = &inst;
  if (inst.kind == ProblemKind::tsp) {
    if (start_node < 0 || start_node >= inst.n_nodes)
      throw ContractViolation("tsp init features need a start node in [0, n)");
    const auto E = static_cast<Eigen::Index>(inst.num_edges());
    fg.decision_features.resize(1, E);
    for (Eigen::Index e = 0; e < E; ++e)
      fg.decision_features(0, e) = static_cast<float>(inst.edge_len[static_cast<std::size_t>(e)]);
    fg.node_features = Eigen::MatrixXf::Zero(1, inst.n_nodes);
    fg.node_features(0, start_node) = 1.0f;
  } else {
    fg.decision_features = Eigen::MatrixXf::Ones(1, inst.n_nodes);
  }
  return fg;
}

FeatureGraph build_update_graph(const SearchState& state) {
  const ProblemInstance& inst = *state.instance;
  const auto V = static_cast<Eigen::Index>(inst.num_decision_vars());
  if (state.theta.theta.size() != V)
    throw ContractViolation("search state heatmap size does not match instance");
  if (state.k_feature_denominator < 1)
    throw ContractViolation("budget-fraction denominator must be positive");

  FeatureGraph fg;
  fg.instance = &inst;
  fg.decision_features = Eigen::MatrixXf::Zero(kDecisionFeatureWidth, V);
  fg.decision_features.row(0) = state.theta.theta.cast<float>().transpose();
  fg.decision_features.row(1) = standardize(state.grad_state.grad).cast<float>().transpose();
  for (std::size_t m = 0; m < kMomentumBetas.size(); ++m)
    fg.decision_features.row(2 + static_cast<Eigen::Index>(m)) =
        standardize(state.grad_state.momenta[m]).cast<float>().transpose();

  const auto& entries = state.archive.entries();
  const int used = std::min<int>(kArchiveL, static_cast<int>(entries.size()));
  for (int l = 0; l < used; ++l) {
    const Bitset& vars = entries[static_cast<std::size_t>(l)].solution.vars;
    const Eigen::Index row = 2 + static_cast<Eigen::Index>(kMomentumBetas.size()) + l;
    for (std::size_t v = vars.find_first(); v != Bitset::npos; v = vars.find_next(v))
      fg.decision_features(row, static_cast<Eigen::Index>(v)) = 1.0f;
  }

  if (inst.kind == ProblemKind::tsp) {
    if (state.start_node < 0 || state.start_node >= inst.n_nodes)
      throw ContractViolation("tsp update features need a start node in [0, n)");
    fg.node_features = Eigen::MatrixXf::Zero(1, inst.n_nodes);
    fg.node_features(0, state.start_node) = 1.0f;
  }

  fg.global_features = Eigen::VectorXf::Zero(kGlobalFeatureWidth);
  const double best = state.archive.best_value();
  const double denom = std::abs(best);
  for (int l = 0; l < used; ++l)
    fg.global_features[l] =
        denom < 1e-12
            ? 0.0f
            : static_cast<float>((entries[static_cast<std::size_t>(l)].objective - best) / denom);
  fg.global_features[kArchiveL] = static_cast<float>(state.archive.relative_improvement());
  fg.global_features.segment(kArchiveL + 1, static_cast<Eigen::Index>(kTimescales.size())) =
      tanh_time_embedding(state.k).cast<float>();
  fg.global_features[kGlobalFeatureWidth - 1] =
      static_cast<float>(static_cast<double>(state.k) / state.k_feature_denominator);

  if (!fg.decision_features.allFinite() || !fg.global_features.allFinite() ||
      (fg.node_features.size() > 0 && !fg.node_features.allFinite()))
    throw NumericError("non-finite feature encountered");
  return fg;
}

std::string feature_manifest(ProblemKind kind, GnnPhase phase) {
  std::ostringstream os;
  const char* entity = kind == ProblemKind::tsp ? "edge" : "node";
  if (phase == GnnPhase::init) {
    if (kind == ProblemKind::tsp) {
      os << "decision(" << entity << ")[0] euclidean_distance\n";
      os << "node[0] start_flag\n";
    } else {
      os << "decision(" << entity << ")[0] constant_one\n";
    }
    os << "global: none\n";
    return os.str();
  }
  os << "decision(" << entity << ")[0] theta\n";
  os << "decision(" << entity << ")[1] gradient_standardized\n";
  for (std::size_t m = 0; m < kMomentumBetas.size(); ++m)
    os << "decision(" << entity << ")[" << (2 + m) << "] momentum_beta_" << kMomentumBetas[m]
       << "_standardized\n";
  for (int l = 0; l < kArchiveL; ++l)
    os << "decision(" << entity << ")[" << (2 + kMomentumBetas.size() + static_cast<std::size_t>(l))
       << "] archive_membership_" << l << "\n";
  if (kind == ProblemKind::tsp) os << "node[0] start_flag\n";
  for (int l = 0; l < kArchiveL; ++l)
    os << "global[" << l << "] archive_objective_gap_" << l << "\n";
  os << "global[" << kArchiveL << "] relative_improvement\n";
  for (std::size_t t = 0; t < kTimescales.size(); ++t)
    os << "global[" << (kArchiveL + 1 + t) << "] time_embedding_" << kTimescales[t] << "\n";
  os << "global[" << (kGlobalFeatureWidth - 1) << "] budget_fraction\n";
  return os.str();
}

}  // namespace moco
