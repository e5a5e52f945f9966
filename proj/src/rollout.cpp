#include "moco/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moco/errors.hpp"
#include "moco/parallel.hpp"

namespace moco {

namespace {

struct SampleRecord {
  Solution solution;
  double objective = 0.0;
  std::vector<std::int32_t> chosen;
  std::vector<std::int32_t> feas_ids;
  std::vector<std::int64_t> feas_len;
};

// One recorded construction. Draws exactly the same random variates as
// construct_solution so the two stay interchangeable.
SampleRecord construct_recorded(const Heatmap& h, const ProblemInstance& inst, Rng rng,
                                int start_node, bool greedy) {
  SampleRecord rec;
  int start = start_node;
  if (inst.kind == ProblemKind::tsp && start < 0)
    start = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(inst.n_nodes)));
  ConstructionState s = initial_state(inst, start);
  while (!s.terminal) {
    const auto actions = feasible_actions(s);
    if (actions.empty()) {
      apply_forced_arc(s, forced_arc_target(s));
      continue;
    }
    std::size_t pick = 0;
    if (greedy) {
      for (std::size_t i = 1; i < actions.size(); ++i)
        if (h.theta[actions[i]] > h.theta[actions[pick]]) pick = i;
    } else {
      const Eigen::VectorXd p = action_probabilities_sparse(h, actions);
      const double r = rng.uniform01();
      double acc = 0.0;
      pick = actions.size() - 1;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        acc += p[static_cast<Eigen::Index>(i)];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    rec.chosen.push_back(actions[pick]);
    rec.feas_ids.insert(rec.feas_ids.end(), actions.begin(), actions.end());
    rec.feas_len.push_back(static_cast<std::int64_t>(actions.size()));
    apply_action(s, actions[pick]);
  }
  rec.solution = extract_solution(s);
  rec.objective = objective(inst, rec.solution);
  return rec;
}

}  // namespace

RolloutBatch sample_batch(const Heatmap& h, const ProblemInstance& inst, int b, const Rng& rng,
                          int start_node, int threads, bool greedy) {
  if (b < 1) throw ContractViolation("batch size must be positive");
  if (h.theta.size() != inst.num_decision_vars())
    throw ContractViolation("heatmap size does not match decision variable count");
  std::vector<SampleRecord> records(static_cast<std::size_t>(b));
  parallel_chunks(b, threads, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i)
      records[static_cast<std::size_t>(i)] = construct_recorded(
          h, inst, rng.stream(static_cast<std::uint64_t>(i)), start_node, greedy);
  });

  RolloutBatch batch;
  batch.instance = &inst;
  batch.b = b;
  batch.solutions.reserve(static_cast<std::size_t>(b));
  batch.objectives.reserve(static_cast<std::size_t>(b));
  batch.sample_begin.push_back(0);
  batch.feas_begin.push_back(0);
  for (auto& rec : records) {
    batch.solutions.push_back(std::move(rec.solution));
    batch.objectives.push_back(rec.objective);
    batch.chosen.insert(batch.chosen.end(), rec.chosen.begin(), rec.chosen.end());
    batch.feas_ids.insert(batch.feas_ids.end(), rec.feas_ids.begin(), rec.feas_ids.end());
    for (const auto len : rec.feas_len) batch.feas_begin.push_back(batch.feas_begin.back() + len);
    batch.sample_begin.push_back(batch.sample_begin.back() +
                                 static_cast<std::int64_t>(rec.chosen.size()));
  }
  return batch;
}

double log_prob(const RolloutBatch& batch, const Heatmap& h, int sample) {
  if (sample < 0 || sample >= batch.b) throw ContractViolation("sample index out of range");
  double lp = 0.0;
  for (std::int64_t t = batch.sample_begin[static_cast<std::size_t>(sample)];
       t < batch.sample_begin[static_cast<std::size_t>(sample) + 1]; ++t) {
    const std::int64_t lo = batch.feas_begin[static_cast<std::size_t>(t)];
    const std::int64_t hi = batch.feas_begin[static_cast<std::size_t>(t) + 1];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = lo; i < hi; ++i)
      mx = std::max(mx, h.theta[batch.feas_ids[static_cast<std::size_t>(i)]]);
    double sum = 0.0;
    for (std::int64_t i = lo; i < hi; ++i)
      sum += std::exp(h.theta[batch.feas_ids[static_cast<std::size_t>(i)]] - mx);
    lp += h.theta[batch.chosen[static_cast<std::size_t>(t)]] - mx - std::log(sum);
  }
  return lp;
}

Eigen::VectorXd reinforce_gradient(const RolloutBatch& batch, const Heatmap& h, int threads) {
  const Eigen::Index n = h.theta.size();
  if (batch.instance != nullptr && n != batch.instance->num_decision_vars())
    throw ContractViolation("heatmap size does not match the batch's instance");
  double fbar = 0.0;
  for (const auto f : batch.objectives) fbar += f;
  fbar /= static_cast<double>(batch.b);

  // Chunk boundaries are a fixed function of b (not of `threads`), and the
  // partials are reduced in chunk order, so the result is bitwise identical
  // for any thread count.
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t nchunks = std::max<std::int64_t>((batch.b + kChunk - 1) / kChunk, 1);
  std::vector<Eigen::VectorXd> partials(static_cast<std::size_t>(nchunks),
                                        Eigen::VectorXd::Zero(n));
  parallel_chunks(nchunks, threads, [&](int, std::int64_t clo, std::int64_t chi) {
    for (std::int64_t c = clo; c < chi; ++c) {
      Eigen::VectorXd& acc = partials[static_cast<std::size_t>(c)];
      const std::int64_t lo = c * kChunk;
      const std::int64_t hi = std::min<std::int64_t>(batch.b, lo + kChunk);
      for (std::int64_t i = lo; i < hi; ++i) {
        const double adv = batch.objectives[static_cast<std::size_t>(i)] - fbar;
        if (adv == 0.0) continue;
        for (std::int64_t t = batch.sample_begin[static_cast<std::size_t>(i)];
             t < batch.sample_begin[static_cast<std::size_t>(i) + 1]; ++t) {
          const std::int64_t flo = batch.feas_begin[static_cast<std::size_t>(t)];
          const std::int64_t fhi = batch.feas_begin[static_cast<std::size_t>(t) + 1];
          double mx = -std::numeric_limits<double>::infinity();
          for (std::int64_t k = flo; k < fhi; ++k)
            mx = std::max(mx, h.theta[batch.feas_ids[static_cast<std::size_t>(k)]]);
          double sum = 0.0;
          for (std::int64_t k = flo; k < fhi; ++k)
            sum += std::exp(h.theta[batch.feas_ids[static_cast<std::size_t>(k)]] - mx);
          for (std::int64_t k = flo; k < fhi; ++k) {
            const auto id = batch.feas_ids[static_cast<std::size_t>(k)];
            acc[id] -= adv * std::exp(h.theta[id] - mx) / sum;
          }
          acc[batch.chosen[static_cast<std::size_t>(t)]] += adv;
        }
      }
    }
  });
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (const auto& p : partials) grad += p;  // fixed chunk order
  grad /= static_cast<double>(batch.b);
  return grad;
}

SolutionArchive::SolutionArchive(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ContractViolation("archive capacity must be positive");
}

double SolutionArchive::best_value() const {
  return entries_.empty() ? std::numeric_limits<double>::infinity() : entries_.front().objective;
}

const Solution& SolutionArchive::best_solution() const {
  if (entries_.empty()) throw ContractViolation("archive is empty");
  return entries_.front().solution;
}

void SolutionArchive::update(const std::vector<Solution>& solutions,
                             const std::vector<double>& objectives) {
  if (solutions.size() != objectives.size())
    throw ContractViolation("solutions/objectives size mismatch");
  const double prev_best = best_value();
  entries_.reserve(entries_.size() + solutions.size());
  for (std::size_t i = 0; i < solutions.size(); ++i)
    entries_.push_back({objectives[i], solutions[i]});
  std::sort(entries_.begin(), entries_.end(), [](const ArchiveEntry& a, const ArchiveEntry& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    return solution_less(a.solution, b.solution);
  });
  entries_.erase(std::unique(entries_.begin(), entries_.end(),
                             [](const ArchiveEntry& a, const ArchiveEntry& b) {
                               return a.solution == b.solution;
                             }),
                 entries_.end());
  if (entries_.size() > static_cast<std::size_t>(capacity_))
    entries_.resize(static_cast<std::size_t>(capacity_));
  if (!first_done_) {
    improvement_ = 0.0;
    first_done_ = true;
  } else {
    const double denom = std::abs(best_value());
    improvement_ = denom < 1e-12 ? 0.0 : (prev_best - best_value()) / denom;
  }
}

}  // namespace moco
