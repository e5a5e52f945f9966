#include "moco/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moco/errors.hpp"
#include "moco/rng.hpp"

namespace moco {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::tsp ? "tsp" : "mis";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "tsp") return ProblemKind::tsp;
  if (s == "mis") return ProblemKind::mis;
  throw ConfigError("unknown problem kind '" + s + "' (expected tsp or mis)");
}

std::int64_t ProblemInstance::num_decision_vars() const {
  if (kind == ProblemKind::mis) return n_nodes;
  if (!has_edges())
    throw ContractViolation(
        "tsp instance with deferred complete digraph has no decision variables; "
        "apply sparsify_knn first");
  return num_edges();
}

double ProblemInstance::dense_distance(int i, int j) const {
  const auto& a = coords[static_cast<std::size_t>(i)];
  const auto& b = coords[static_cast<std::size_t>(j)];
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

std::int32_t ProblemInstance::find_edge(int u, int v) const {
  auto [first, last] = out_range(u);
  // edges are sorted by (src, dst): binary search on dst within the out range
  const auto begin = edge_dst.begin() + first;
  const auto end = edge_dst.begin() + last;
  const auto it = std::lower_bound(begin, end, static_cast<std::int32_t>(v));
  if (it == end || *it != v) return -1;
  return static_cast<std::int32_t>(it - edge_dst.begin());
}

void ProblemInstance::check_consistent() const {
  if (n_nodes < 0) throw ContractViolation("negative node count");
  if (edge_src.size() != edge_dst.size())
    throw ContractViolation("edge_src/edge_dst size mismatch");
  if (kind == ProblemKind::tsp && edge_len.size() != edge_src.size())
    throw ContractViolation("edge_len size mismatch");
  if (kind == ProblemKind::tsp && coords.size() != static_cast<std::size_t>(n_nodes))
    throw ContractViolation("coords size mismatch");
  if (out_begin.size() != static_cast<std::size_t>(n_nodes) + 1)
    throw ContractViolation("out_begin size mismatch");
  if (!out_begin.empty() &&
      (out_begin.front() != 0 || out_begin.back() != num_edges()))
    throw ContractViolation("out_begin bounds mismatch");
  for (std::size_t e = 0; e < edge_src.size(); ++e) {
    const auto u = edge_src[e];
    const auto v = edge_dst[e];
    if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes)
      throw ContractViolation("edge endpoint out of range");
    if (u == v) throw ContractViolation("self-loop edge");
    if (e > 0 && (edge_src[e - 1] > u || (edge_src[e - 1] == u && edge_dst[e - 1] >= v)))
      throw ContractViolation("edges not sorted by (src, dst) or duplicated");
  }
}

void finalize_edges(ProblemInstance& inst) {
  const std::size_t m = inst.edge_src.size();
  std::vector<std::int64_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (inst.edge_src[a] != inst.edge_src[b]) return inst.edge_src[a] < inst.edge_src[b];
    return inst.edge_dst[a] < inst.edge_dst[b];
  });
  std::vector<std::int32_t> src(m), dst(m);
  std::vector<double> len(inst.edge_len.empty() ? 0 : m);
  for (std::size_t i = 0; i < m; ++i) {
    src[i] = inst.edge_src[order[i]];
    dst[i] = inst.edge_dst[order[i]];
    if (!len.empty()) len[i] = inst.edge_len[order[i]];
  }
  inst.edge_src = std::move(src);
  inst.edge_dst = std::move(dst);
  inst.edge_len = std::move(len);
  inst.out_begin.assign(static_cast<std::size_t>(inst.n_nodes) + 1, 0);
  for (std::size_t e = 0; e < m; ++e)
    ++inst.out_begin[static_cast<std::size_t>(inst.edge_src[e]) + 1];
  for (std::size_t i = 1; i < inst.out_begin.size(); ++i)
    inst.out_begin[i] += inst.out_begin[i - 1];
  inst.check_consistent();
}

namespace {

void build_complete_digraph(ProblemInstance& inst) {
  const int n = inst.n_nodes;
  const std::size_t m = static_cast<std::size_t>(n) * (n - 1);
  inst.edge_src.clear();
  inst.edge_dst.clear();
  inst.edge_len.clear();
  inst.edge_src.reserve(m);
  inst.edge_dst.reserve(m);
  inst.edge_len.reserve(m);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      inst.edge_src.push_back(u);
      inst.edge_dst.push_back(v);
      inst.edge_len.push_back(inst.dense_distance(u, v));
    }
  inst.out_begin.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int u = 0; u <= n; ++u)
    inst.out_begin[static_cast<std::size_t>(u)] =
        static_cast<std::int64_t>(u) * (n - 1);
}

}  // namespace

ProblemInstance generate_uniform_tsp(int n, std::uint64_t seed) {
  if (n < 3) throw ConfigError("tsp instance needs at least 3 cities");
  ProblemInstance inst;
  inst.kind = ProblemKind::tsp;
  inst.n_nodes = n;
  inst.seed = seed;
  inst.knn = 0;
  inst.coords.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (auto& c : inst.coords) {
    c[0] = rng.uniform01();
    c[1] = rng.uniform01();
  }
  if (n <= kCompleteEdgeLimit) {
    build_complete_digraph(inst);
  } else {
    inst.out_begin.assign(static_cast<std::size_t>(n) + 1, 0);
  }
  return inst;
}

ProblemInstance generate_er_graph(int n_min, int n_max, double p, std::uint64_t seed) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("invalid node count range");
  if (p < 0.0 || p > 1.0) throw ConfigError("edge probability must be in [0, 1]");
  Rng rng(seed);
  const int n = n_min + static_cast<int>(rng.uniform_below(
                            static_cast<std::uint64_t>(n_max - n_min + 1)));
  ProblemInstance inst;
  inst.kind = ProblemKind::mis;
  inst.n_nodes = n;
  inst.seed = seed;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform01() < p) {
        inst.edge_src.push_back(u);
        inst.edge_dst.push_back(v);
        inst.edge_src.push_back(v);
        inst.edge_dst.push_back(u);
      }
  finalize_edges(inst);
  return inst;
}

ProblemInstance sparsify_knn(const ProblemInstance& inst, int k) {
  if (inst.kind != ProblemKind::tsp)
    throw ContractViolation("sparsify_knn applies to tsp instances only");
  if (k < 1) throw ConfigError("k_nn must be positive");
  const int n = inst.n_nodes;
  const int keep = std::min(k, n - 1);
  ProblemInstance out;
  out.kind = ProblemKind::tsp;
  out.n_nodes = n;
  out.coords = inst.coords;
  out.seed = inst.seed;
  out.knn = k;
  out.edge_src.reserve(static_cast<std::size_t>(n) * keep);
  out.edge_dst.reserve(static_cast<std::size_t>(n) * keep);
  out.edge_len.reserve(static_cast<std::size_t>(n) * keep);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(static_cast<std::size_t>(n) - 1);
  for (int u = 0; u < n; ++u) {
    cand.clear();
    for (int v = 0; v < n; ++v)
      if (v != u) cand.emplace_back(out.dense_distance(u, v), v);
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
    std::sort(cand.begin(), cand.begin() + keep,
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (int i = 0; i < keep; ++i) {
      out.edge_src.push_back(u);
      out.edge_dst.push_back(cand[static_cast<std::size_t>(i)].second);
      out.edge_len.push_back(cand[static_cast<std::size_t>(i)].first);
    }
  }
  out.out_begin.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int u = 0; u <= n; ++u)
    out.out_begin[static_cast<std::size_t>(u)] = static_cast<std::int64_t>(u) * keep;
  out.check_consistent();
  return out;
}

}  // namespace moco
