#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "moco/features.hpp"
#include "moco/instance.hpp"

namespace moco {

struct NamedArray {
  std::string name;
  Eigen::MatrixXf m;
};

struct ArrayShape {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

enum class InitScheme { uniform_fan_in, zeros };

// Forward-only network weights. Arrays are stored in manifest order; the
// manifest is a pure function of (kind, phase, d_hidden, n_blocks), which
// makes flattening, checkpoints and shape validation deterministic.
struct GnnParams {
  ProblemKind kind = ProblemKind::tsp;
  GnnPhase phase = GnnPhase::init;
  int d_hidden = 128;
  int n_blocks = 3;
  std::vector<NamedArray> arrays;

  const Eigen::MatrixXf& array(std::string_view name) const;
  Eigen::MatrixXf& array(std::string_view name);
  std::int64_t param_count() const;
};

std::vector<ArrayShape> param_manifest(ProblemKind kind, GnnPhase phase, int d_hidden = 128,
                                       int n_blocks = 3);

// Weight matrices uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero;
// every array fills from its own seed substream. zeros scheme is a test mode.
GnnParams init_params(std::uint64_t seed, ProblemKind kind, GnnPhase phase,
                      InitScheme scheme = InitScheme::uniform_fan_in, int d_hidden = 128,
                      int n_blocks = 3);

struct GnnOutput {
  Eigen::MatrixXf decision;  // d_hidden x num_decision_vars
  Eigen::VectorXf global;    // d_hidden, empty in the init phase
};

// Residual message-passing stack for tsp. Per block, sequentially:
//   edge:   e' = e + LN(relu(W_e [e; v_src; v_dst; g] + b_e))
//   node:   v' = v + LN(relu(W_v [v; sum_out e'; sum_in e'; g] + b_v))
//   global: g' = g + relu(W_g [sum v'; sum e'; g] + b_g)
// The init phase omits the global stream (and the g' update) entirely.
// LN normalises each feature across all entities, no affine terms, eps 1e-5.
GnnOutput graphnet_forward(const GnnParams& params, const FeatureGraph& fg);

// Residual max-aggregation GCN for mis. Per block:
//   v^ = v + relu(W1 v + b1 + max_{j in N(i)} (W2 v_j + b2))   (isolated: 0)
//   v' = v^ + relu(W3 [g; v^] + b3)      (update phase only)
//   g' = g  + relu(W4 sum_i v'_i + b4)   (update phase only)
GnnOutput gcn_forward(const GnnParams& params, const FeatureGraph& fg);

GnnOutput gnn_forward(const GnnParams& params, const FeatureGraph& fg);

struct DecodeResult {
  Eigen::VectorXd theta_tilde;
  double alpha = 0.0;
  bool has_alpha = false;
};

// Linear decision head per variable; in the update phase additionally
// alpha = softplus(global head) + 1e-6 > 0.
DecodeResult decode_theta(const GnnParams& params, const GnnOutput& out);

// Parameter vector round trip (64-bit staging for the ES trainer).
Eigen::VectorXd flatten_params(const GnnParams& params);
void unflatten_params(const Eigen::VectorXd& flat, GnnParams& params);

double softplus(double x);

}  // namespace moco
