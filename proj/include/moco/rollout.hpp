#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "moco/construction.hpp"
#include "moco/instance.hpp"
#include "moco/rng.hpp"

namespace moco {

// A batch of complete constructions with enough per-step detail to recompute
// exact log-probabilities: the chosen variable and the feasible set at every
// decision step. Forced arcs are not decision steps and are not recorded.
struct RolloutBatch {
  const ProblemInstance* instance = nullptr;
  int b = 0;
  std::vector<Solution> solutions;
  std::vector<double> objectives;
  std::vector<std::int32_t> chosen;        // one per decision step
  std::vector<std::int32_t> feas_ids;      // concatenated feasible sets
  std::vector<std::int64_t> feas_begin;    // per step into feas_ids, size steps+1
  std::vector<std::int64_t> sample_begin;  // per sample into steps, size b+1

  std::int64_t num_steps() const { return static_cast<std::int64_t>(chosen.size()); }
};

// Draws b complete constructions from the masked-softmax policy. Sample i
// uses the derived stream rng.stream(i), so results are independent of
// thread count and scheduling. For tsp, start_node >= 0 pins the start for
// every sample; start_node < 0 draws it per sample.
RolloutBatch sample_batch(const Heatmap& h, const ProblemInstance& inst, int b, const Rng& rng,
                          int start_node = -1, int threads = 1, bool greedy = false);

// Exact log-probability of sample i's decision steps under heatmap h
// (forced arcs excluded: their conditional probability is 1).
double log_prob(const RolloutBatch& batch, const Heatmap& h, int sample);

// Score-function ascent direction with the batch-average baseline:
//   (1/b) * sum_i (f_i - mean f) * sum_t (onehot(a_t) - p_t)
// computed by fixed-size chunked reduction, so the result is bitwise
// identical for any thread count.
Eigen::VectorXd reinforce_gradient(const RolloutBatch& batch, const Heatmap& h, int threads = 1);

inline constexpr std::array<double, 6> kMomentumBetas{0.1, 0.5, 0.9, 0.99, 0.999, 0.9999};

// Latest gradient plus exponential moving averages at the fixed beta grid.
// Momenta are zero-initialised and not bias-corrected.
struct GradientState {
  Eigen::VectorXd grad;
  std::array<Eigen::VectorXd, kMomentumBetas.size()> momenta;

  void init(Eigen::Index n) {
    grad = Eigen::VectorXd::Zero(n);
    for (auto& m : momenta) m = Eigen::VectorXd::Zero(n);
  }
  void accumulate(const Eigen::VectorXd& g) {
    grad = g;
    for (std::size_t i = 0; i < momenta.size(); ++i)
      momenta[i] = kMomentumBetas[i] * momenta[i] + (1.0 - kMomentumBetas[i]) * g;
  }
};

struct ArchiveEntry {
  double objective = 0.0;
  Solution solution;
};

// Best-L pool of distinct solutions, ordered best-first by (objective,
// solution identity); the identity tiebreak makes merges order-independent.
class SolutionArchive {
 public:
  explicit SolutionArchive(int capacity);

  void update(const std::vector<Solution>& solutions, const std::vector<double>& objectives);
  void update(const RolloutBatch& batch) { update(batch.solutions, batch.objectives); }

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  double best_value() const;
  const Solution& best_solution() const;

  // (previous best - current best) / |current best| for the latest update;
  // 0 on the first update and when the denominator vanishes.
  double relative_improvement() const { return improvement_; }

 private:
  int capacity_;
  std::vector<ArchiveEntry> entries_;
  double improvement_ = 0.0;
  bool first_done_ = false;
};

}  // namespace moco
