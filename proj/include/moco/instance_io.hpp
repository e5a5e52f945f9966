#pragma once

#include <string>
#include <vector>

#include "moco/instance.hpp"

namespace moco {

// Euclidean-tour instance file (NODE_COORD_SECTION, EUC_2D). The COMMENT line
// records generator seed and sparsification level so a load reproduces the
// exact candidate edge set.
void save_tsplib(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_tsplib(const std::string& path);

// Undirected graph file: "p edge n m" header plus "e u v" lines (1-based,
// each unordered pair once). A leading "c moco seed=..." comment restores the
// generator seed.
void save_dimacs(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_dimacs(const std::string& path);

// Dispatch by kind (save) or by extension (.tsp vs anything else) on load.
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

// A dataset is a manifest file listing instance files (paths relative to the
// manifest's directory) plus the problem kind and count on the first line.
// '#' lines after the header carry provenance comments.
std::string save_dataset(const std::vector<ProblemInstance>& instances,
                         const std::string& dir, const std::string& stem,
                         const std::string& header_comment = "");
std::vector<ProblemInstance> load_dataset(const std::string& manifest_path);
std::vector<std::string> manifest_entries(const std::string& manifest_path,
                                          ProblemKind* kind_out = nullptr);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace moco
