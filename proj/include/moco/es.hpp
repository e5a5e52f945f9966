#pragma once

#include <Eigen/Dense>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "moco/checkpoint.hpp"
#include "moco/search.hpp"

namespace moco {

enum class LrSchedule { cosine_warmup, constant };
enum class LossTransform { identity, log };

std::string to_string(LrSchedule s);
LrSchedule lr_schedule_from_string(const std::string& s);
std::string to_string(LossTransform t);
LossTransform loss_transform_from_string(const std::string& s);

struct StageConfig {
  int K = 50;
  int b = 32;
  int n_perturbations = 128;  // even
  int meta_steps = 250;
};

// Instance sampler for training/validation draws.
struct InstanceDistribution {
  ProblemKind kind = ProblemKind::tsp;
  // tsp
  int n = 128;
  int knn = 0;  // 0 = complete digraph
  // mis (Erdos-Renyi)
  int n_min = 30;
  int n_max = 50;
  double p = 0.15;
  // 0 samples fresh instances every meta-step; >0 draws from a fixed pool of
  // this size generated once from the master seed.
  int fixed_pool = 0;
};

ProblemInstance sample_instance(const InstanceDistribution& dist, std::uint64_t seed);

struct EsConfig {
  InstanceDistribution dist;
  std::vector<StageConfig> stages;
  double sigma = 0.01;     // perturbation scale
  double meta_lr = 0.001;  // Adam maximum learning rate
  LrSchedule lr_schedule = LrSchedule::cosine_warmup;
  int warmup_steps = 50;
  LossTransform loss_transform = LossTransform::identity;
  std::optional<double> pair_clip;  // max |L+ - L-| per antithetic pair
  int meta_batch = 8;               // instances per fitness evaluation
  int d_hidden = 128;               // network width (ignored when resuming)
  int n_blocks = 3;                 // message-passing blocks (ignored when resuming)
  std::uint64_t seed = 0;
  int threads = 1;
  int val_instances = 16;  // held-out set size (0 disables validation)
  int val_every = 25;
  std::string out_dir = "train_out";
  // Paired checkpoint to continue from; the recorded global step is resumed
  // (Adam moments restart — they are not stored in checkpoints).
  std::string resume_path;

  void validate() const;
};

// Budget-then-batch curriculum defaults; stage lengths are configuration.
std::vector<StageConfig> default_stages(ProblemKind kind);

// Mean final-best objective of search() over the meta-batch; search seed for
// instance j comes from rng.stream(j). The log transform applies per
// instance and requires positive objectives.
double meta_loss(const CheckpointBundle& phi, const std::vector<ProblemInstance>& instances,
                 const SearchConfig& search_cfg, const Rng& rng, LossTransform transform);

// fitness(phi_flat, pair_index) must be deterministic given pair_index: both
// antithetic signs of a pair see identical seeds (common random numbers).
using FitnessFn = std::function<double(const Eigen::VectorXd&, int)>;

struct EsGradient {
  Eigen::VectorXd grad;
  int dropped_pairs = 0;   // non-finite fitness pairs excluded
  double loss_mean = 0.0;  // over finite evaluations of both signs
  double loss_std = 0.0;
};

// Antithetic estimator (1/N) * sum_i (eps_i / sigma) * (L(phi + sigma eps_i)
// - L(phi - sigma eps_i)) over N/2 pairs, eps_i drawn from rng.stream(i).
// Throws NumericError when every pair is non-finite.
EsGradient es_gradient(const Eigen::VectorXd& phi, const FitnessFn& fitness, int n_perturbations,
                       double sigma, const Rng& rng, std::optional<double> pair_clip = {},
                       int threads = 1);

// Same estimator with caller-provided perturbations (one per pair).
EsGradient es_gradient_with(const Eigen::VectorXd& phi, const FitnessFn& fitness,
                            const std::vector<Eigen::VectorXd>& eps, double sigma,
                            std::optional<double> pair_clip = {}, int threads = 1);

struct AdamState {
  Eigen::VectorXd m, v;
  std::int64_t t = 0;

  void init(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
    t = 0;
  }
};

// Standard Adam descent step: beta1 0.9, beta2 0.999, eps 1e-8, bias
// correction. Mutates params in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

// Linear warmup 0 -> max over `warmup` steps, then cosine decay to 0 at
// total_steps; or constant max.
double lr_at(std::int64_t step, std::int64_t total_steps, LrSchedule schedule, double max_lr,
             int warmup = 50);

Eigen::VectorXd flatten_bundle(const CheckpointBundle& bundle);
void unflatten_bundle(const Eigen::VectorXd& flat, CheckpointBundle& bundle);

// Record of the seeds one fitness evaluation consumed; used to assert the
// common-random-numbers property.
struct SeedAuditEntry {
  int pair = 0;
  std::vector<std::uint64_t> instance_seeds;
  std::vector<std::uint64_t> search_seeds;
};

struct SeedAudit {
  std::mutex mu;
  std::vector<SeedAuditEntry> entries;
};

// The trainer's fitness function for one meta-step: unflattens phi, samples
// the meta-batch (fresh or from `pool`), runs search per instance, returns
// the transformed mean objective.
FitnessFn make_stage_fitness(const EsConfig& cfg, const StageConfig& stage,
                             const CheckpointBundle& proto, std::uint64_t step,
                             const std::vector<ProblemInstance>* pool = nullptr,
                             SeedAudit* audit = nullptr);

struct TrainResult {
  CheckpointBundle params;
  std::vector<std::string> stage_checkpoints;
  std::string train_log_path;
  std::string val_log_path;
  int total_steps = 0;
  double initial_val_loss = 0.0;
  double final_val_loss = 0.0;
};

// Runs the stage curriculum: per meta-step an ES gradient and one Adam step;
// per stage a checkpoint; periodic held-out validation. Deterministic per
// master seed up to floating-point summation tolerance.
TrainResult train(const EsConfig& cfg);

}  // namespace moco
