#include "moco/baselines.hpp"

#include <limits>

#include "moco/errors.hpp"

namespace moco {

SearchResult adam_theta_search(const ProblemInstance& inst, const Heatmap& theta0,
                               const SearchConfig& cfg, double lr) {
  cfg.validate();
  auto updater = make_adam_updater(lr);
  const Rng root(cfg.seed);
  return run_heatmap_search(inst, theta0, *updater, cfg, root.stream({2, 0}), cfg.start_node);
}

std::vector<std::int32_t> farthest_insertion(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::tsp) throw ContractViolation("farthest_insertion needs tsp");
  const int n = inst.n_nodes;
  if (n < 3) throw ContractViolation("farthest_insertion needs at least 3 cities");

  // Seed tour: the farthest pair (ties: lowest indices).
  int a = 0, b = 1;
  double best_d = -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = inst.dense_distance(i, j);
      if (d > best_d) {
        best_d = d;
        a = i;
        b = j;
      }
    }
  std::vector<std::int32_t> tour{a, b};
  std::vector<bool> in_tour(static_cast<std::size_t>(n), false);
  in_tour[static_cast<std::size_t>(a)] = in_tour[static_cast<std::size_t>(b)] = true;

  // min distance from each outside city to the tour, updated incrementally.
  std::vector<double> to_tour(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    to_tour[static_cast<std::size_t>(v)] =
        std::min(inst.dense_distance(v, a), inst.dense_distance(v, b));

  while (static_cast<int>(tour.size()) < n) {
    int city = -1;
    double far = -1.0;
    for (int v = 0; v < n; ++v) {
      if (in_tour[static_cast<std::size_t>(v)]) continue;
      if (to_tour[static_cast<std::size_t>(v)] > far) {
        far = to_tour[static_cast<std::size_t>(v)];
        city = v;
      }
    }
    // Cheapest insertion position (cyclic), earliest position on ties.
    std::size_t pos = 0;
    double best_inc = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tour.size(); ++i) {
      const std::int32_t u = tour[i];
      const std::int32_t w = tour[(i + 1) % tour.size()];
      const double inc =
          inst.dense_distance(u, city) + inst.dense_distance(city, w) - inst.dense_distance(u, w);
      if (inc < best_inc) {
        best_inc = inc;
        pos = i;
      }
    }
    tour.insert(tour.begin() + static_cast<std::ptrdiff_t>(pos) + 1, city);
    in_tour[static_cast<std::size_t>(city)] = true;
    for (int v = 0; v < n; ++v)
      if (!in_tour[static_cast<std::size_t>(v)])
        to_tour[static_cast<std::size_t>(v)] =
            std::min(to_tour[static_cast<std::size_t>(v)], inst.dense_distance(v, city));
  }
  return tour;
}

double tour_cost(const ProblemInstance& inst, const std::vector<std::int32_t>& order) {
  if (order.size() < 2) throw ContractViolation("tour needs at least two nodes");
  double total = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i)
    total += inst.dense_distance(order[i], order[(i + 1) % order.size()]);
  return total;
}

}  // namespace moco
