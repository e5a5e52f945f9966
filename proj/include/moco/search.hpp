#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "moco/checkpoint.hpp"
#include "moco/features.hpp"
#include "moco/gnn.hpp"
#include "moco/rollout.hpp"

namespace moco {

enum class ConditioningMode { full, naive_continuation };

std::string to_string(ConditioningMode mode);
ConditioningMode conditioning_mode_from_string(const std::string& s);

struct SearchConfig {
  int K = 50;  // heatmap update iterations (budget)
  int b = 32;  // constructions per iteration
  int M = 1;   // parallel restarts
  int L = kArchiveL;
  ConditioningMode conditioning = ConditioningMode::full;
  // Budget K the update net was trained for; used as the budget-fraction
  // denominator under naive_continuation. 0 falls back to the inference K.
  int train_K = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  int start_node = -1;             // tsp: fixed start for every restart; -1 draws per restart
  std::optional<double> force_alpha;  // test harness hook
  bool greedy = false;

  void validate() const;
  // Denominator for the budget-fraction feature under this config.
  int feature_denominator() const;
};

struct IterationRecord {
  int k = 0;
  double best_objective = 0.0;
  double batch_best = 0.0;
  double alpha = 0.0;  // 0 when the iteration applied no heatmap update
  double wall_ms = 0.0;
};

struct SearchResult {
  Solution best_solution;
  double best_value = 0.0;
  int start_node = -1;
  std::int64_t constructions = 0;
  std::vector<IterationRecord> log;
};

struct RestartsResult {
  SearchResult best;  // minimum-objective restart (ties: lowest index)
  std::vector<SearchResult> restarts;
  std::int64_t constructions = 0;  // summed over restarts
};

// Strategy that rewrites the heatmap between iterations.
class ThetaUpdater {
 public:
  virtual ~ThetaUpdater() = default;
  virtual void reset(const ProblemInstance& inst) = 0;
  // Replaces state.theta; returns the step scale alpha (0 if none).
  virtual double update(SearchState& state, const SearchConfig& cfg) = 0;
};

// Update-network updater: build_update_graph -> forward -> theta = theta~/alpha.
std::unique_ptr<ThetaUpdater> make_gnn_updater(const GnnParams& phi_update);
// Adam descent on theta along the negated score-function gradient.
std::unique_ptr<ThetaUpdater> make_adam_updater(double lr);
// Keeps theta unchanged (pure sampling).
std::unique_ptr<ThetaUpdater> make_null_updater();

// theta^0 = decision-head decode of the init network on instance features.
Heatmap initialize_theta(const ProblemInstance& inst, const GnnParams& phi_init,
                         int start_node = -1);

// One loop iteration: sample b, update archive/gradient/momenta, and — except
// after the final batch — rewrite theta via the updater. Returns the record.
IterationRecord search_step(SearchState& state, ThetaUpdater& updater, const SearchConfig& cfg,
                            const Rng& step_rng);

// K iterations from the given initial heatmap. Exactly K*b constructions.
SearchResult run_heatmap_search(const ProblemInstance& inst, const Heatmap& theta0,
                                ThetaUpdater& updater, const SearchConfig& cfg,
                                const Rng& rng, int start_node);

// Full inference: init net -> K update-net iterations (single restart).
SearchResult search(const ProblemInstance& inst, const CheckpointBundle& phi,
                    const SearchConfig& cfg);

// M independent restarts differing only in start node and RNG stream.
RestartsResult parallel_restarts(const ProblemInstance& inst, const CheckpointBundle& phi,
                                 const SearchConfig& cfg);

// Restarts driven by Adam on theta from the same theta^0 (baseline).
RestartsResult adam_theta_restarts(const ProblemInstance& inst, const GnnParams& phi_init,
                                   const SearchConfig& cfg, double lr);

}  // namespace moco
