#include "moco/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "moco/errors.hpp"
#include "moco/parallel.hpp"

namespace moco {

namespace {

using Clock = std::chrono::steady_clock;

// Substream keys for the per-restart RNG tree.
constexpr std::uint64_t kStartDrawKey = 1;
constexpr std::uint64_t kSearchKey = 2;

}  // namespace

std::string to_string(ConditioningMode mode) {
  return mode == ConditioningMode::full ? "full" : "naive_continuation";
}

ConditioningMode conditioning_mode_from_string(const std::string& s) {
  if (s == "full") return ConditioningMode::full;
  if (s == "naive_continuation") return ConditioningMode::naive_continuation;
  throw ConfigError("unknown conditioning mode '" + s + "'");
}

void SearchConfig::validate() const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (b < 2) throw ConfigError("b must be >= 2");
  if (M < 1) throw ConfigError("M must be >= 1");
  if (L < 1) throw ConfigError("archive size must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (train_K < 0) throw ConfigError("train_K must be >= 0");
  if (conditioning == ConditioningMode::naive_continuation && train_K == 0)
    throw ConfigError("naive_continuation needs the training budget (train_K)");
  if (force_alpha.has_value() && *force_alpha <= 0.0)
    throw ConfigError("forced alpha must be positive");
}

int SearchConfig::feature_denominator() const {
  return conditioning == ConditioningMode::naive_continuation && train_K > 0 ? train_K : K;
}

Heatmap initialize_theta(const ProblemInstance& inst, const GnnParams& phi_init, int start_node) {
  if (phi_init.phase != GnnPhase::init)
    throw ContractViolation("initialize_theta needs an init-phase network");
  if ((phi_init.kind == ProblemKind::tsp) != (inst.kind == ProblemKind::tsp))
    throw ConfigError("network kind does not match the instance kind");
  const FeatureGraph fg = build_init_graph(inst, start_node);
  const GnnOutput out = gnn_forward(phi_init, fg);
  Heatmap h;
  h.theta = decode_theta(phi_init, out).theta_tilde;
  return h;
}

namespace {

class GnnUpdater final : public ThetaUpdater {
 public:
  explicit GnnUpdater(const GnnParams& phi) : phi_(&phi) {
    if (phi.phase != GnnPhase::update)
      throw ContractViolation("heatmap updater needs an update-phase network");
  }
  void reset(const ProblemInstance&) override {}
  double update(SearchState& state, const SearchConfig& cfg) override {
    const FeatureGraph fg = build_update_graph(state);
    const GnnOutput out = gnn_forward(*phi_, fg);
    const DecodeResult dec = decode_theta(*phi_, out);
    const double alpha = cfg.force_alpha.value_or(dec.alpha);
    state.theta.theta = dec.theta_tilde / alpha;
    if (!state.theta.theta.allFinite()) throw NumericError("non-finite heatmap after update");
    return alpha;
  }

 private:
  const GnnParams* phi_;
};

class AdamUpdater final : public ThetaUpdater {
 public:
  explicit AdamUpdater(double lr) : lr_(lr) {
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  }
  void reset(const ProblemInstance& inst) override {
    const auto n = inst.num_decision_vars();
    m_ = Eigen::VectorXd::Zero(n);
    v_ = Eigen::VectorXd::Zero(n);
    t_ = 0;
  }
  double update(SearchState& state, const SearchConfig&) override {
    // The score-function gradient points uphill in expected cost; descend.
    const Eigen::VectorXd& g = state.grad_state.grad;
    ++t_;
    m_ = 0.9 * m_ + 0.1 * g;
    v_ = 0.999 * v_ + 0.001 * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
    state.theta.theta -=
        (lr_ / c1) * m_.cwiseQuotient(((v_ / c2).cwiseSqrt().array() + 1e-8).matrix());
    return 0.0;
  }

 private:
  double lr_;
  Eigen::VectorXd m_, v_;
  std::int64_t t_ = 0;
};

class NullUpdater final : public ThetaUpdater {
 public:
  void reset(const ProblemInstance&) override {}
  double update(SearchState&, const SearchConfig&) override { return 0.0; }
};

}  // namespace

std::unique_ptr<ThetaUpdater> make_gnn_updater(const GnnParams& phi_update) {
  return std::make_unique<GnnUpdater>(phi_update);
}
std::unique_ptr<ThetaUpdater> make_adam_updater(double lr) {
  return std::make_unique<AdamUpdater>(lr);
}
std::unique_ptr<ThetaUpdater> make_null_updater() { return std::make_unique<NullUpdater>(); }

IterationRecord search_step(SearchState& state, ThetaUpdater& updater, const SearchConfig& cfg,
                            const Rng& step_rng) {
  if (state.k >= cfg.K) throw ContractViolation("search step beyond the budget");
  const auto t0 = Clock::now();
  const RolloutBatch batch = sample_batch(state.theta, *state.instance, cfg.b, step_rng,
                                          state.start_node, cfg.threads, cfg.greedy);
  state.constructions += cfg.b;
  state.archive.update(batch);
  state.grad_state.accumulate(reinforce_gradient(batch, state.theta, cfg.threads));

  double alpha = 0.0;
  if (state.k < cfg.K - 1) alpha = updater.update(state, cfg);

  IterationRecord rec;
  rec.k = state.k;
  rec.best_objective = state.archive.best_value();
  rec.batch_best = *std::min_element(batch.objectives.begin(), batch.objectives.end());
  rec.alpha = alpha;
  rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  ++state.k;
  return rec;
}

SearchResult run_heatmap_search(const ProblemInstance& inst, const Heatmap& theta0,
                                ThetaUpdater& updater, const SearchConfig& cfg, const Rng& rng,
                                int start_node) {
  SearchState state;
  state.instance = &inst;
  state.theta = theta0;
  state.grad_state.init(inst.num_decision_vars());
  state.archive = SolutionArchive(cfg.L);
  state.k_feature_denominator = cfg.feature_denominator();
  state.start_node = start_node;
  updater.reset(inst);
  SearchResult res;
  for (int k = 0; k < cfg.K; ++k)
    res.log.push_back(search_step(state, updater, cfg, rng.stream(static_cast<std::uint64_t>(k))));
  if (state.constructions != static_cast<std::int64_t>(cfg.K) * cfg.b)
    throw ContractViolation("construction budget accounting failed");

  res.best_solution = state.archive.best_solution();
  res.best_value = state.archive.best_value();
  res.start_node = start_node;
  res.constructions = state.constructions;
  return res;
}

namespace {

SearchResult run_one_restart(const ProblemInstance& inst, const CheckpointBundle* phi,
                             const GnnParams* adam_init, double adam_lr, const SearchConfig& cfg,
                             int restart) {
  const Rng root(cfg.seed);
  int start = -1;
  if (inst.kind == ProblemKind::tsp) {
    start = cfg.start_node;
    if (start < 0)
      start = static_cast<int>(
          root.stream({kStartDrawKey, static_cast<std::uint64_t>(restart)})
              .uniform_below(static_cast<std::uint64_t>(inst.n_nodes)));
  }
  const GnnParams& init_net = phi != nullptr ? phi->init : *adam_init;
  const Heatmap theta0 = initialize_theta(inst, init_net, start);
  std::unique_ptr<ThetaUpdater> updater =
      phi != nullptr ? make_gnn_updater(phi->update) : make_adam_updater(adam_lr);
  return run_heatmap_search(inst, theta0, *updater, cfg,
                            root.stream({kSearchKey, static_cast<std::uint64_t>(restart)}), start);
}

RestartsResult run_restarts(const ProblemInstance& inst, const CheckpointBundle* phi,
                            const GnnParams* adam_init, double adam_lr, const SearchConfig& cfg) {
  cfg.validate();
  SearchConfig inner = cfg;
  if (cfg.M > 1) inner.threads = 1;  // parallelism across restarts instead
  RestartsResult out;
  out.restarts.resize(static_cast<std::size_t>(cfg.M));
  parallel_chunks(cfg.M, cfg.threads, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t r = lo; r < hi; ++r)
      out.restarts[static_cast<std::size_t>(r)] =
          run_one_restart(inst, phi, adam_init, adam_lr, inner, static_cast<int>(r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < out.restarts.size(); ++r)
    if (out.restarts[r].best_value < out.restarts[best].best_value) best = r;
  out.best = out.restarts[best];
  for (const auto& r : out.restarts) out.constructions += r.constructions;
  if (out.constructions != static_cast<std::int64_t>(cfg.K) * cfg.b * cfg.M)
    throw ContractViolation("construction budget accounting failed across restarts");
  return out;
}

}  // namespace

SearchResult search(const ProblemInstance& inst, const CheckpointBundle& phi,
                    const SearchConfig& cfg) {
  cfg.validate();
  if ((phi.init.kind == ProblemKind::tsp) != (inst.kind == ProblemKind::tsp))
    throw ConfigError("checkpoint kind does not match the instance kind");
  return run_one_restart(inst, &phi, nullptr, 0.0, cfg, 0);
}

RestartsResult parallel_restarts(const ProblemInstance& inst, const CheckpointBundle& phi,
                                 const SearchConfig& cfg) {
  if ((phi.init.kind == ProblemKind::tsp) != (inst.kind == ProblemKind::tsp))
    throw ConfigError("checkpoint kind does not match the instance kind");
  return run_restarts(inst, &phi, nullptr, 0.0, cfg);
}

RestartsResult adam_theta_restarts(const ProblemInstance& inst, const GnnParams& phi_init,
                                   const SearchConfig& cfg, double lr) {
  if ((phi_init.kind == ProblemKind::tsp) != (inst.kind == ProblemKind::tsp))
    throw ConfigError("checkpoint kind does not match the instance kind");
  return run_restarts(inst, nullptr, &phi_init, lr, cfg);
}

}  // namespace moco
