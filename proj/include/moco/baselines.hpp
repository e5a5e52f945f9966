#pragma once

#include <vector>

#include "moco/construction.hpp"
#include "moco/instance.hpp"
#include "moco/search.hpp"

namespace moco {

inline constexpr double kAdamThetaDefaultLr = 0.05;

// K iterations of sample -> score-function gradient -> Adam descent on theta
// from a caller-supplied starting heatmap. Same budget accounting as the
// update-network search.
SearchResult adam_theta_search(const ProblemInstance& inst, const Heatmap& theta0,
                               const SearchConfig& cfg, double lr = kAdamThetaDefaultLr);

// Deterministic farthest-insertion tour: start with the farthest city pair,
// repeatedly insert the city farthest from the partial tour at the cheapest
// position. Ties break toward lower node index / earlier position.
std::vector<std::int32_t> farthest_insertion(const ProblemInstance& inst);

// Cyclic tour length over dense Euclidean distances.
double tour_cost(const ProblemInstance& inst, const std::vector<std::int32_t>& order);

}  // namespace moco
