#pragma once

#include <map>
#include <string>

#include "moco/gnn.hpp"

namespace moco {

using CheckpointMeta = std::map<std::string, std::string>;

// Container: UTF-8 header (format tag, kind, phase, dims, sorted "meta.*"
// lines, array shape manifest), a "data:" separator, the arrays as raw
// little-endian 32-bit floats (column-major, manifest order), and a trailing
// CRC-32 over every preceding byte.
void save_params(const GnnParams& params, const std::string& path,
                 const CheckpointMeta& meta = {});
GnnParams load_params(const std::string& path, CheckpointMeta* meta_out = nullptr);

// Both networks used by the search loop, stored as one file (phase "pair",
// arrays prefixed "init." / "update.").
struct CheckpointBundle {
  GnnParams init;
  GnnParams update;
};

void save_bundle(const CheckpointBundle& bundle, const std::string& path,
                 const CheckpointMeta& meta = {});
CheckpointBundle load_bundle(const std::string& path, CheckpointMeta* meta_out = nullptr);

// Deterministically initialised pair of networks for one problem kind.
CheckpointBundle make_default_bundle(ProblemKind kind, std::uint64_t seed,
                                     InitScheme scheme = InitScheme::uniform_fan_in,
                                     int d_hidden = 128, int n_blocks = 3);

// One line per array plus totals; used by the CLI inspect command.
std::string checkpoint_manifest(const std::string& path);

}  // namespace moco
