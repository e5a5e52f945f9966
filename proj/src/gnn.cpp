#include "moco/gnn.hpp"

#include <cmath>

#include "moco/errors.hpp"
#include "moco/rng.hpp"

namespace moco {

namespace {

std::string block_name(int i, const char* part) {
  return "block" + std::to_string(i) + "_" + part;
}

}  // namespace

const Eigen::MatrixXf& GnnParams::array(std::string_view name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a.m;
  throw ContractViolation("unknown parameter array '" + std::string(name) + "'");
}

Eigen::MatrixXf& GnnParams::array(std::string_view name) {
  for (auto& a : arrays)
    if (a.name == name) return a.m;
  throw ContractViolation("unknown parameter array '" + std::string(name) + "'");
}

std::int64_t GnnParams::param_count() const {
  std::int64_t n = 0;
  for (const auto& a : arrays) n += static_cast<std::int64_t>(a.m.size());
  return n;
}

std::vector<ArrayShape> param_manifest(ProblemKind kind, GnnPhase phase, int d, int n_blocks) {
  const bool update = phase == GnnPhase::update;
  std::vector<ArrayShape> shapes;
  auto add = [&shapes](std::string name, Eigen::Index rows, Eigen::Index cols) {
    shapes.push_back({std::move(name), rows, cols});
  };
  if (kind == ProblemKind::tsp) {
    add("embed_edge_W", d, update ? kDecisionFeatureWidth : 1);
    add("embed_edge_b", d, 1);
    add("embed_node_W", d, 1);  // start flag
    add("embed_node_b", d, 1);
    if (update) {
      add("embed_global_W", d, kGlobalFeatureWidth);
      add("embed_global_b", d, 1);
    }
    const Eigen::Index concat = update ? 4 * d : 3 * d;
    for (int i = 0; i < n_blocks; ++i) {
      add(block_name(i, "edge_W"), d, concat);
      add(block_name(i, "edge_b"), d, 1);
      add(block_name(i, "node_W"), d, concat);
      add(block_name(i, "node_b"), d, 1);
      if (update) {
        add(block_name(i, "global_W"), d, 3 * d);
        add(block_name(i, "global_b"), d, 1);
      }
    }
  } else {
    add("embed_node_W", d, update ? kDecisionFeatureWidth : 1);
    add("embed_node_b", d, 1);
    if (update) {
      add("embed_global_W", d, kGlobalFeatureWidth);
      add("embed_global_b", d, 1);
    }
    for (int i = 0; i < n_blocks; ++i) {
      add(block_name(i, "self_W"), d, d);
      add(block_name(i, "self_b"), d, 1);
      add(block_name(i, "neigh_W"), d, d);
      add(block_name(i, "neigh_b"), d, 1);
      if (update) {
        add(block_name(i, "fuse_W"), d, 2 * d);
        add(block_name(i, "fuse_b"), d, 1);
        add(block_name(i, "global_W"), d, d);
        add(block_name(i, "global_b"), d, 1);
      }
    }
  }
  add("decode_theta_W", 1, d);
  add("decode_theta_b", 1, 1);
  if (update) {
    add("decode_alpha_W", 1, d);
    add("decode_alpha_b", 1, 1);
  }
  return shapes;
}

GnnParams init_params(std::uint64_t seed, ProblemKind kind, GnnPhase phase, InitScheme scheme,
                      int d_hidden, int n_blocks) {
  GnnParams p;
  p.kind = kind;
  p.phase = phase;
  p.d_hidden = d_hidden;
  p.n_blocks = n_blocks;
  const auto shapes = param_manifest(kind, phase, d_hidden, n_blocks);
  const Rng base(seed);
  p.arrays.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    NamedArray a;
    a.name = shapes[i].name;
    a.m = Eigen::MatrixXf::Zero(shapes[i].rows, shapes[i].cols);
    const bool is_bias = a.name.ends_with("_b");
    if (!is_bias && scheme == InitScheme::uniform_fan_in) {
      Rng rng = base.stream(static_cast<std::uint64_t>(i));
      const double bound = 1.0 / std::sqrt(static_cast<double>(shapes[i].cols));
      float* data = a.m.data();
      for (Eigen::Index k = 0; k < a.m.size(); ++k)
        data[k] = static_cast<float>((2.0 * rng.uniform01() - 1.0) * bound);
    }
    p.arrays.push_back(std::move(a));
  }
  return p;
}

namespace {

// Per-feature normalization across entities (columns): zero mean, unit
// variance computed in 64-bit, no affine terms. Zero-variance rows map to 0.
void layer_norm_rows(Eigen::MatrixXf& u) {
  constexpr double eps = 1e-5;
  const Eigen::Index cols = u.cols();
  if (cols == 0) return;
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    double mean = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) mean += u(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double d = u(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (Eigen::Index c = 0; c < cols; ++c)
      u(r, c) = static_cast<float>((u(r, c) - mean) * inv);
  }
}

Eigen::MatrixXf affine(const Eigen::MatrixXf& W, const Eigen::MatrixXf& b,
                       const Eigen::MatrixXf& x) {
  if (W.cols() != x.rows()) throw ContractViolation("feature width does not match weight shape");
  return (W * x).colwise() + b.col(0);
}

// Column sums accumulated in 64-bit, result cast back to 32-bit.
Eigen::VectorXf sum_columns(const Eigen::MatrixXf& m) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) acc += m.col(c).cast<double>();
  return acc.cast<float>();
}

}  // namespace

GnnOutput graphnet_forward(const GnnParams& params, const FeatureGraph& fg) {
  if (params.kind != ProblemKind::tsp) throw ContractViolation("graphnet_forward needs tsp params");
  const ProblemInstance& inst = *fg.instance;
  const bool update = params.phase == GnnPhase::update;
  const int d = params.d_hidden;
  const auto E = fg.decision_features.cols();
  const auto n = static_cast<Eigen::Index>(inst.n_nodes);
  if (E != static_cast<Eigen::Index>(inst.num_edges()))
    throw ContractViolation("edge feature count does not match instance");

  Eigen::MatrixXf he = affine(params.array("embed_edge_W"), params.array("embed_edge_b"),
                              fg.decision_features);
  Eigen::MatrixXf hv =
      affine(params.array("embed_node_W"), params.array("embed_node_b"), fg.node_features);
  Eigen::VectorXf hg;
  if (update) {
    if (fg.global_features.size() != kGlobalFeatureWidth)
      throw ContractViolation("global feature width mismatch");
    hg = params.array("embed_global_W") * fg.global_features +
         params.array("embed_global_b").col(0);
  }

  const Eigen::Index concat_rows = update ? 4 * d : 3 * d;
  Eigen::MatrixXf cat(concat_rows, std::max(E, n));
  for (int blk = 0; blk < params.n_blocks; ++blk) {
    // Edge update.
    for (Eigen::Index e = 0; e < E; ++e) {
      cat.block(0, e, d, 1) = he.col(e);
      cat.block(d, e, d, 1) = hv.col(inst.edge_src[static_cast<std::size_t>(e)]);
      cat.block(2 * d, e, d, 1) = hv.col(inst.edge_dst[static_cast<std::size_t>(e)]);
      if (update) cat.block(3 * d, e, d, 1) = hg;
    }
    Eigen::MatrixXf ue = affine(params.array(block_name(blk, "edge_W")),
                                params.array(block_name(blk, "edge_b")), cat.topLeftCorner(concat_rows, E))
                             .cwiseMax(0.0f);
    layer_norm_rows(ue);
    he += ue;

    // Node update: sum of updated out-/in-edges, 64-bit accumulation.
    Eigen::MatrixXd out_sum = Eigen::MatrixXd::Zero(d, n);
    Eigen::MatrixXd in_sum = Eigen::MatrixXd::Zero(d, n);
    for (Eigen::Index e = 0; e < E; ++e) {
      out_sum.col(inst.edge_src[static_cast<std::size_t>(e)]) += he.col(e).cast<double>();
      in_sum.col(inst.edge_dst[static_cast<std::size_t>(e)]) += he.col(e).cast<double>();
    }
    for (Eigen::Index v = 0; v < n; ++v) {
      cat.block(0, v, d, 1) = hv.col(v);
      cat.block(d, v, d, 1) = out_sum.col(v).cast<float>();
      cat.block(2 * d, v, d, 1) = in_sum.col(v).cast<float>();
      if (update) cat.block(3 * d, v, d, 1) = hg;
    }
    Eigen::MatrixXf uv = affine(params.array(block_name(blk, "node_W")),
                                params.array(block_name(blk, "node_b")), cat.topLeftCorner(concat_rows, n))
                             .cwiseMax(0.0f);
    layer_norm_rows(uv);
    hv += uv;

    // Global update from whole-graph sums.
    if (update) {
      Eigen::VectorXf gcat(3 * d);
      gcat.segment(0, d) = sum_columns(hv);
      gcat.segment(d, d) = sum_columns(he);
      gcat.segment(2 * d, d) = hg;
      hg += (params.array(block_name(blk, "global_W")) * gcat +
             params.array(block_name(blk, "global_b")).col(0))
                .cwiseMax(0.0f);
    }
  }

  GnnOutput out;
  out.decision = std::move(he);
  if (update) out.global = std::move(hg);
  return out;
}

GnnOutput gcn_forward(const GnnParams& params, const FeatureGraph& fg) {
  if (params.kind != ProblemKind::mis) throw ContractViolation("gcn_forward needs mis params");
  const ProblemInstance& inst = *fg.instance;
  const bool update = params.phase == GnnPhase::update;
  const int d = params.d_hidden;
  const auto n = fg.decision_features.cols();
  if (n != static_cast<Eigen::Index>(inst.n_nodes))
    throw ContractViolation("node feature count does not match instance");

  Eigen::MatrixXf hv =
      affine(params.array("embed_node_W"), params.array("embed_node_b"), fg.decision_features);
  Eigen::VectorXf hg;
  if (update) {
    if (fg.global_features.size() != kGlobalFeatureWidth)
      throw ContractViolation("global feature width mismatch");
    hg = params.array("embed_global_W") * fg.global_features +
         params.array("embed_global_b").col(0);
  }

  for (int blk = 0; blk < params.n_blocks; ++blk) {
    const Eigen::MatrixXf self = affine(params.array(block_name(blk, "self_W")),
                                        params.array(block_name(blk, "self_b")), hv);
    const Eigen::MatrixXf neigh = affine(params.array(block_name(blk, "neigh_W")),
                                         params.array(block_name(blk, "neigh_b")), hv);
    Eigen::MatrixXf agg = Eigen::MatrixXf::Zero(d, n);  // isolated nodes keep 0
    for (Eigen::Index v = 0; v < n; ++v) {
      auto [first, last] = inst.out_range(static_cast<int>(v));
      bool any = false;
      for (std::int64_t e = first; e < last; ++e) {
        const auto j = inst.edge_dst[static_cast<std::size_t>(e)];
        if (!any) {
          agg.col(v) = neigh.col(j);
          any = true;
        } else {
          agg.col(v) = agg.col(v).cwiseMax(neigh.col(j));
        }
      }
    }
    hv += (self + agg).cwiseMax(0.0f);

    if (update) {
      Eigen::MatrixXf cat(2 * d, n);
      for (Eigen::Index v = 0; v < n; ++v) {
        cat.block(0, v, d, 1) = hg;
        cat.block(d, v, d, 1) = hv.col(v);
      }
      hv += affine(params.array(block_name(blk, "fuse_W")), params.array(block_name(blk, "fuse_b")),
                   cat)
                .cwiseMax(0.0f);
      hg += (params.array(block_name(blk, "global_W")) * sum_columns(hv) +
             params.array(block_name(blk, "global_b")).col(0))
                .cwiseMax(0.0f);
    }
  }

  GnnOutput out;
  out.decision = std::move(hv);
  if (update) out.global = std::move(hg);
  return out;
}

GnnOutput gnn_forward(const GnnParams& params, const FeatureGraph& fg) {
  return params.kind == ProblemKind::tsp ? graphnet_forward(params, fg) : gcn_forward(params, fg);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

DecodeResult decode_theta(const GnnParams& params, const GnnOutput& out) {
  DecodeResult res;
  const Eigen::MatrixXf& w = params.array("decode_theta_W");
  const float b = params.array("decode_theta_b")(0, 0);
  res.theta_tilde = ((w * out.decision).array() + b).cast<double>().matrix().row(0).transpose();
  if (params.phase == GnnPhase::update) {
    if (out.global.size() == 0) throw ContractViolation("update decode needs a global embedding");
    const double a = static_cast<double>(
        (params.array("decode_alpha_W") * out.global)(0) + params.array("decode_alpha_b")(0, 0));
    res.alpha = softplus(a) + 1e-6;
    res.has_alpha = true;
  }
  return res;
}

Eigen::VectorXd flatten_params(const GnnParams& params) {
  Eigen::VectorXd flat(params.param_count());
  Eigen::Index at = 0;
  for (const auto& a : params.arrays) {
    const float* data = a.m.data();
    for (Eigen::Index i = 0; i < a.m.size(); ++i) flat[at++] = static_cast<double>(data[i]);
  }
  return flat;
}

void unflatten_params(const Eigen::VectorXd& flat, GnnParams& params) {
  if (flat.size() != params.param_count())
    throw ContractViolation("flattened parameter size mismatch");
  Eigen::Index at = 0;
  for (auto& a : params.arrays) {
    float* data = a.m.data();
    for (Eigen::Index i = 0; i < a.m.size(); ++i) data[i] = static_cast<float>(flat[at++]);
  }
}

}  // namespace moco
