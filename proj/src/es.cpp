#include "moco/es.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moco/errors.hpp"
#include "moco/instance_io.hpp"
#include "moco/parallel.hpp"

namespace moco {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Substream keys for the training seed tree.
constexpr std::uint64_t kInitNetKey = 0x10;
constexpr std::uint64_t kEpsKey = 0x20;
constexpr std::uint64_t kInstanceKey = 0x30;
constexpr std::uint64_t kSearchSeedKey = 0x40;
constexpr std::uint64_t kPoolKey = 0x50;
constexpr std::uint64_t kValInstanceKey = 0x60;
constexpr std::uint64_t kValSearchKey = 0x70;

}  // namespace

std::string to_string(LrSchedule s) {
  return s == LrSchedule::cosine_warmup ? "cosine_warmup" : "constant";
}

LrSchedule lr_schedule_from_string(const std::string& s) {
  if (s == "cosine_warmup") return LrSchedule::cosine_warmup;
  if (s == "constant") return LrSchedule::constant;
  throw ConfigError("unknown lr schedule '" + s + "'");
}

std::string to_string(LossTransform t) { return t == LossTransform::identity ? "identity" : "log"; }

LossTransform loss_transform_from_string(const std::string& s) {
  if (s == "identity") return LossTransform::identity;
  if (s == "log") return LossTransform::log;
  throw ConfigError("unknown loss transform '" + s + "'");
}

ProblemInstance sample_instance(const InstanceDistribution& dist, std::uint64_t seed) {
  if (dist.kind == ProblemKind::tsp) {
    ProblemInstance inst = generate_uniform_tsp(dist.n, seed);
    if (dist.knn > 0) inst = sparsify_knn(inst, dist.knn);
    return inst;
  }
  return generate_er_graph(dist.n_min, dist.n_max, dist.p, seed);
}

void EsConfig::validate() const {
  if (stages.empty()) throw ConfigError("at least one training stage is required");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.K < 1 || s.b < 2 || s.meta_steps < 0) throw ConfigError("invalid stage parameters");
    if (s.n_perturbations < 2 || s.n_perturbations % 2 != 0)
      throw ConfigError("perturbation count must be even and >= 2");
    if (i > 0 && (s.K < stages[i - 1].K || (s.K == stages[i - 1].K && s.b < stages[i - 1].b)))
      throw ConfigError("stages must not decrease in (K, then b)");
  }
  if (sigma <= 0.0) throw ConfigError("sigma must be positive");
  if (meta_lr <= 0.0) throw ConfigError("meta_lr must be positive");
  if (meta_batch < 1) throw ConfigError("meta_batch must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (val_instances < 0 || val_every < 1) throw ConfigError("invalid validation settings");
  if (pair_clip.has_value() && *pair_clip <= 0.0) throw ConfigError("pair_clip must be positive");
  if (loss_transform == LossTransform::log && dist.kind == ProblemKind::mis)
    throw ConfigError("log loss transform needs positive objectives (tsp only)");
  if (dist.fixed_pool < 0) throw ConfigError("fixed_pool must be >= 0");
  if (d_hidden < 1 || n_blocks < 1) throw ConfigError("d_hidden and n_blocks must be >= 1");
}

std::vector<StageConfig> default_stages(ProblemKind kind) {
  if (kind == ProblemKind::tsp)
    return {{50, 32, 128, 250}, {200, 32, 64, 250}, {500, 32, 64, 250}, {500, 128, 64, 250}};
  return {{50, 32, 128, 250}, {200, 32, 64, 250}};
}

double meta_loss(const CheckpointBundle& phi, const std::vector<ProblemInstance>& instances,
                 const SearchConfig& search_cfg, const Rng& rng, LossTransform transform) {
  if (instances.empty()) throw ContractViolation("meta loss needs at least one instance");
  double sum = 0.0;
  for (std::size_t j = 0; j < instances.size(); ++j) {
    SearchConfig cfg = search_cfg;
    cfg.seed = rng.stream(static_cast<std::uint64_t>(j)).seed();
    const SearchResult res = search(instances[j], phi, cfg);
    double f = res.best_value;
    if (transform == LossTransform::log) {
      if (f <= 0.0) throw ConfigError("log loss transform needs positive objectives");
      f = std::log(f);
    }
    sum += f;
  }
  return sum / static_cast<double>(instances.size());
}

namespace {

struct PairEval {
  double plus = 0.0;
  double minus = 0.0;
  bool finite = false;
};

EsGradient es_gradient_core(const Eigen::VectorXd& phi, const FitnessFn& fitness, int pairs,
                            const std::function<Eigen::VectorXd(int)>& make_eps, double sigma,
                            std::optional<double> pair_clip, int threads) {
  if (sigma <= 0.0) throw ContractViolation("sigma must be positive");
  std::vector<PairEval> evals(static_cast<std::size_t>(pairs));
  parallel_chunks(pairs, threads, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const Eigen::VectorXd eps = make_eps(static_cast<int>(i));
      PairEval& ev = evals[static_cast<std::size_t>(i)];
      ev.plus = fitness(phi + sigma * eps, static_cast<int>(i));
      ev.minus = fitness(phi - sigma * eps, static_cast<int>(i));
      ev.finite = std::isfinite(ev.plus) && std::isfinite(ev.minus);
    }
  });

  EsGradient out;
  out.grad = Eigen::VectorXd::Zero(phi.size());
  double sum = 0.0, sumsq = 0.0;
  int kept = 0;
  for (int i = 0; i < pairs; ++i) {  // fixed reduction order
    const PairEval& ev = evals[static_cast<std::size_t>(i)];
    if (!ev.finite) {
      ++out.dropped_pairs;
      continue;
    }
    double diff = ev.plus - ev.minus;
    if (pair_clip.has_value()) diff = std::clamp(diff, -*pair_clip, *pair_clip);
    out.grad += (diff / sigma) * make_eps(i);
    sum += ev.plus + ev.minus;
    sumsq += ev.plus * ev.plus + ev.minus * ev.minus;
    ++kept;
  }
  if (kept == 0) throw NumericError("every perturbation pair produced non-finite fitness");
  out.grad /= static_cast<double>(2 * pairs);  // 1/N with N = 2 * pairs
  const double cnt = static_cast<double>(2 * kept);
  out.loss_mean = sum / cnt;
  out.loss_std = std::sqrt(std::max(0.0, sumsq / cnt - out.loss_mean * out.loss_mean));
  return out;
}

}  // namespace

EsGradient es_gradient(const Eigen::VectorXd& phi, const FitnessFn& fitness, int n_perturbations,
                       double sigma, const Rng& rng, std::optional<double> pair_clip, int threads) {
  if (n_perturbations < 2 || n_perturbations % 2 != 0)
    throw ConfigError("perturbation count must be even and >= 2");
  const int pairs = n_perturbations / 2;
  const auto make_eps = [&phi, &rng](int i) {
    Rng r = rng.stream(static_cast<std::uint64_t>(i));
    Eigen::VectorXd eps(phi.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = r.normal();
    return eps;
  };
  return es_gradient_core(phi, fitness, pairs, make_eps, sigma, pair_clip, threads);
}

EsGradient es_gradient_with(const Eigen::VectorXd& phi, const FitnessFn& fitness,
                            const std::vector<Eigen::VectorXd>& eps, double sigma,
                            std::optional<double> pair_clip, int threads) {
  if (eps.empty()) throw ContractViolation("at least one perturbation pair is required");
  const auto make_eps = [&eps](int i) { return eps[static_cast<std::size_t>(i)]; };
  return es_gradient_core(phi, fitness, static_cast<int>(eps.size()), make_eps, sigma, pair_clip,
                          threads);
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw ContractViolation("adam shapes do not match");
  ++state.t;
  state.m = 0.9 * state.m + 0.1 * grad;
  state.v = 0.999 * state.v + 0.001 * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(0.9, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(0.999, static_cast<double>(state.t));
  params -= (lr / c1) * state.m.cwiseQuotient(((state.v / c2).cwiseSqrt().array() + 1e-8).matrix());
}

double lr_at(std::int64_t step, std::int64_t total_steps, LrSchedule schedule, double max_lr,
             int warmup) {
  if (step < 0 || step > total_steps) throw ContractViolation("lr step out of range");
  if (schedule == LrSchedule::constant) return max_lr;
  if (warmup > 0 && step <= warmup)
    return max_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps <= warmup) return max_lr;
  const double x = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return max_lr * 0.5 * (1.0 + std::cos(M_PI * x));
}

Eigen::VectorXd flatten_bundle(const CheckpointBundle& bundle) {
  const Eigen::VectorXd a = flatten_params(bundle.init);
  const Eigen::VectorXd b = flatten_params(bundle.update);
  Eigen::VectorXd flat(a.size() + b.size());
  flat << a, b;
  return flat;
}

void unflatten_bundle(const Eigen::VectorXd& flat, CheckpointBundle& bundle) {
  const Eigen::Index na = bundle.init.param_count();
  const Eigen::Index nb = bundle.update.param_count();
  if (flat.size() != na + nb) throw ContractViolation("flattened bundle size mismatch");
  unflatten_params(flat.head(na), bundle.init);
  unflatten_params(flat.tail(nb), bundle.update);
}

FitnessFn make_stage_fitness(const EsConfig& cfg, const StageConfig& stage,
                             const CheckpointBundle& proto, std::uint64_t step,
                             const std::vector<ProblemInstance>* pool, SeedAudit* audit) {
  return [&cfg, stage, &proto, step, pool, audit](const Eigen::VectorXd& flat, int pair) {
    CheckpointBundle phi = proto;
    unflatten_bundle(flat, phi);
    SeedAuditEntry entry;
    entry.pair = pair;
    double sum = 0.0;
    for (int j = 0; j < cfg.meta_batch; ++j) {
      const std::uint64_t inst_seed =
          mix64(cfg.seed, {kInstanceKey, step, static_cast<std::uint64_t>(pair),
                           static_cast<std::uint64_t>(j)});
      const ProblemInstance* inst = nullptr;
      ProblemInstance fresh;
      if (pool != nullptr && !pool->empty()) {
        inst = &(*pool)[static_cast<std::size_t>(inst_seed % pool->size())];
      } else {
        fresh = sample_instance(cfg.dist, inst_seed);
        inst = &fresh;
      }
      SearchConfig scfg;
      scfg.K = stage.K;
      scfg.b = stage.b;
      scfg.M = 1;
      scfg.threads = 1;
      scfg.seed = mix64(cfg.seed, {kSearchSeedKey, step, static_cast<std::uint64_t>(pair),
                                   static_cast<std::uint64_t>(j)});
      const SearchResult res = search(*inst, phi, scfg);
      double f = res.best_value;
      if (cfg.loss_transform == LossTransform::log) {
        if (f <= 0.0) throw ConfigError("log loss transform needs positive objectives");
        f = std::log(f);
      }
      sum += f;
      if (audit != nullptr) {
        entry.instance_seeds.push_back(inst_seed);
        entry.search_seeds.push_back(scfg.seed);
      }
    }
    if (audit != nullptr) {
      std::lock_guard<std::mutex> lock(audit->mu);
      audit->entries.push_back(std::move(entry));
    }
    return sum / static_cast<double>(cfg.meta_batch);
  };
}

namespace {

std::string stage_list_string(const std::vector<StageConfig>& stages) {
  std::ostringstream os;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i > 0) os << ";";
    os << "K=" << stages[i].K << ",b=" << stages[i].b << ",N=" << stages[i].n_perturbations
       << ",steps=" << stages[i].meta_steps;
  }
  return os.str();
}

double validation_loss(const EsConfig& cfg, const CheckpointBundle& phi,
                       const std::vector<ProblemInstance>& val_set, const StageConfig& stage) {
  SearchConfig scfg;
  scfg.K = stage.K;
  scfg.b = stage.b;
  scfg.M = 1;
  scfg.threads = cfg.threads;
  const Rng val_rng(mix64(cfg.seed, kValSearchKey));
  return meta_loss(phi, val_set, scfg, val_rng, cfg.loss_transform);
}

}  // namespace

TrainResult train(const EsConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  CheckpointBundle bundle = make_default_bundle(cfg.dist.kind, mix64(cfg.seed, kInitNetKey),
                                                InitScheme::uniform_fan_in, cfg.d_hidden,
                                                cfg.n_blocks);
  std::int64_t start_step = 0;
  if (!cfg.resume_path.empty()) {
    CheckpointMeta meta;
    bundle = load_bundle(cfg.resume_path, &meta);
    if (bundle.init.kind != cfg.dist.kind)
      throw ConfigError("resume checkpoint kind does not match the configured distribution");
    if (const auto it = meta.find("global_step"); it != meta.end())
      start_step = std::stoll(it->second);
  }
  Eigen::VectorXd flat = flatten_bundle(bundle);
  AdamState adam;
  adam.init(flat.size());

  std::vector<ProblemInstance> pool;
  if (cfg.dist.fixed_pool > 0) {
    pool.reserve(static_cast<std::size_t>(cfg.dist.fixed_pool));
    for (int i = 0; i < cfg.dist.fixed_pool; ++i)
      pool.push_back(
          sample_instance(cfg.dist, mix64(cfg.seed, {kPoolKey, static_cast<std::uint64_t>(i)})));
  }
  std::vector<ProblemInstance> val_set;
  for (int j = 0; j < cfg.val_instances; ++j)
    val_set.push_back(
        sample_instance(cfg.dist, mix64(cfg.seed, {kValInstanceKey, static_cast<std::uint64_t>(j)})));

  std::int64_t total_steps = 0;
  for (const auto& s : cfg.stages) total_steps += s.meta_steps;

  TrainResult result;
  result.train_log_path = (fs::path(cfg.out_dir) / "train_log.csv").string();
  result.val_log_path = (fs::path(cfg.out_dir) / "val_log.csv").string();
  std::ofstream train_log(result.train_log_path);
  std::ofstream val_log(result.val_log_path);
  if (!train_log || !val_log) throw DataError("cannot open training logs in '" + cfg.out_dir + "'");
  train_log << "stage,step,lr,loss_mean,loss_std,dropped_pairs,wall_ms\n";
  val_log << "step,val_loss\n";

  auto run_validation = [&](std::int64_t step) {
    if (val_set.empty()) return 0.0;
    const std::size_t stage_idx = [&] {
      std::int64_t acc = 0;
      for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        acc += cfg.stages[i].meta_steps;
        if (step < acc) return i;
      }
      return cfg.stages.size() - 1;
    }();
    const double loss = validation_loss(cfg, bundle, val_set, cfg.stages[stage_idx]);
    val_log << step << "," << format_double(loss) << "\n" << std::flush;
    return loss;
  };

  result.initial_val_loss = run_validation(start_step);

  std::int64_t step = 0;
  for (std::size_t stage_idx = 0; stage_idx < cfg.stages.size(); ++stage_idx) {
    const StageConfig& stage = cfg.stages[stage_idx];
    for (int s = 0; s < stage.meta_steps; ++s, ++step) {
      if (step < start_step) continue;  // already covered by the resumed run
      const auto t0 = Clock::now();
      const FitnessFn fitness = make_stage_fitness(
          cfg, stage, bundle, static_cast<std::uint64_t>(step), pool.empty() ? nullptr : &pool);
      EsGradient g;
      try {
        g = es_gradient(flat, fitness, stage.n_perturbations, cfg.sigma,
                        Rng(mix64(cfg.seed, {kEpsKey, static_cast<std::uint64_t>(step)})),
                        cfg.pair_clip, cfg.threads);
      } catch (const NumericError& e) {
        std::ofstream diag((fs::path(cfg.out_dir) / "abort_diagnostic.txt").string());
        diag << "aborted at step " << step << " (stage " << stage_idx << ")\n"
             << "reason: " << e.what() << "\n"
             << "param_norm: " << format_double(flat.norm()) << "\n"
             << "param_max_abs: " << format_double(flat.cwiseAbs().maxCoeff()) << "\n";
        throw;
      }
      const double lr = lr_at(step, total_steps, cfg.lr_schedule, cfg.meta_lr, cfg.warmup_steps);
      adam_step(adam, flat, g.grad, lr);
      unflatten_bundle(flat, bundle);
      const double wall =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      train_log << stage_idx << "," << step << "," << format_double(lr) << ","
                << format_double(g.loss_mean) << "," << format_double(g.loss_std) << ","
                << g.dropped_pairs << "," << format_double(wall) << "\n"
                << std::flush;
      if ((step + 1) % cfg.val_every == 0 && step + 1 < total_steps) run_validation(step + 1);
    }
    if (step <= start_step && step != total_steps) continue;  // stage fully skipped by resume
    CheckpointMeta meta;
    meta.emplace("stage", std::to_string(stage_idx));
    meta.emplace("train_K", std::to_string(stage.K));
    meta.emplace("train_b", std::to_string(stage.b));
    meta.emplace("global_step", std::to_string(step));
    meta.emplace("master_seed", std::to_string(cfg.seed));
    meta.emplace("stages", stage_list_string(cfg.stages));
    meta.emplace("loss_transform", to_string(cfg.loss_transform));
    const std::string path =
        (fs::path(cfg.out_dir) / ("stage" + std::to_string(stage_idx) + ".ckpt")).string();
    save_bundle(bundle, path, meta);
    result.stage_checkpoints.push_back(path);
  }

  result.final_val_loss = run_validation(total_steps);
  result.params = bundle;
  result.total_steps = static_cast<int>(total_steps);

  if (!result.stage_checkpoints.empty()) {
    fs::copy_file(result.stage_checkpoints.back(), fs::path(cfg.out_dir) / "final.ckpt",
                  fs::copy_options::overwrite_existing);
  } else {
    CheckpointMeta meta;
    meta.emplace("train_K", std::to_string(cfg.stages.back().K));
    meta.emplace("train_b", std::to_string(cfg.stages.back().b));
    meta.emplace("master_seed", std::to_string(cfg.seed));
    save_bundle(bundle, (fs::path(cfg.out_dir) / "final.ckpt").string(), meta);
  }
  return result;
}

}  // namespace moco
