#include "moco/instance_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "moco/errors.hpp"

namespace moco {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok, const std::string& path, int line_no) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& path, int line_no) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad integer '" + tok + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for reading");
  return f;
}

// Extracts "seed=<u64> knn=<int>" fields from a comment line if present.
void parse_seed_comment(const std::string& line, std::uint64_t* seed, int* knn) {
  for (const auto& tok : split_ws(line)) {
    if (tok.rfind("seed=", 0) == 0) {
      std::uint64_t v = 0;
      const char* b = tok.data() + 5;
      if (std::from_chars(b, tok.data() + tok.size(), v).ec == std::errc()) *seed = v;
    } else if (knn != nullptr && tok.rfind("knn=", 0) == 0) {
      int v = 0;
      const char* b = tok.data() + 4;
      if (std::from_chars(b, tok.data() + tok.size(), v).ec == std::errc()) *knn = v;
    }
  }
}

}  // namespace

void save_tsplib(const ProblemInstance& inst, const std::string& path) {
  if (inst.kind != ProblemKind::tsp) throw ContractViolation("save_tsplib needs a tsp instance");
  auto f = open_out(path);
  f << "NAME : " << fs::path(path).stem().string() << "\n";
  f << "TYPE : TSP\n";
  f << "COMMENT : moco seed=" << inst.seed << " knn=" << inst.knn << "\n";
  f << "DIMENSION : " << inst.n_nodes << "\n";
  f << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  f << "NODE_COORD_SECTION\n";
  for (int i = 0; i < inst.n_nodes; ++i)
    f << (i + 1) << " " << format_double(inst.coords[static_cast<std::size_t>(i)][0]) << " "
      << format_double(inst.coords[static_cast<std::size_t>(i)][1]) << "\n";
  f << "EOF\n";
  if (!f) throw DataError("write failed for '" + path + "'");
}

ProblemInstance load_tsplib(const std::string& path) {
  auto f = open_in(path);
  ProblemInstance inst;
  inst.kind = ProblemKind::tsp;
  std::string line;
  int line_no = 0;
  int dimension = -1;
  bool in_coords = false;
  int coords_seen = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!in_coords) {
      if (t == "NODE_COORD_SECTION") {
        if (dimension < 0)
          throw ParseError(path + ":" + std::to_string(line_no) + ": DIMENSION missing");
        inst.coords.resize(static_cast<std::size_t>(dimension));
        inst.n_nodes = dimension;
        in_coords = true;
        continue;
      }
      const auto colon = t.find(':');
      const std::string key = trim(colon == std::string::npos ? t : t.substr(0, colon));
      const std::string val = colon == std::string::npos ? "" : trim(t.substr(colon + 1));
      if (key == "DIMENSION") {
        dimension = static_cast<int>(parse_long(val, path, line_no));
        if (dimension < 3)
          throw ParseError(path + ":" + std::to_string(line_no) + ": DIMENSION must be >= 3");
      } else if (key == "EDGE_WEIGHT_TYPE") {
        if (val != "EUC_2D")
          throw ParseError(path + ":" + std::to_string(line_no) +
                           ": unsupported EDGE_WEIGHT_TYPE '" + val + "'");
      } else if (key == "TYPE") {
        if (val != "TSP")
          throw ParseError(path + ":" + std::to_string(line_no) + ": unsupported TYPE '" + val + "'");
      } else if (key == "COMMENT") {
        parse_seed_comment(val, &inst.seed, &inst.knn);
      }
      // NAME and unknown keys are ignored.
    } else {
      if (t == "EOF") break;
      const auto toks = split_ws(t);
      if (toks.size() != 3)
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'index x y'");
      const long idx = parse_long(toks[0], path, line_no);
      if (idx < 1 || idx > dimension)
        throw ParseError(path + ":" + std::to_string(line_no) + ": node index out of range");
      inst.coords[static_cast<std::size_t>(idx - 1)] = {parse_double(toks[1], path, line_no),
                                                        parse_double(toks[2], path, line_no)};
      ++coords_seen;
    }
  }
  if (!in_coords) throw ParseError(path + ": NODE_COORD_SECTION missing");
  if (coords_seen != dimension)
    throw ParseError(path + ": expected " + std::to_string(dimension) + " coordinate lines, got " +
                     std::to_string(coords_seen));
  // Rebuild the candidate edge set exactly as the generator pipeline would.
  if (inst.knn > 0) {
    ProblemInstance sparse = sparsify_knn(inst, inst.knn);
    return sparse;
  }
  if (inst.n_nodes <= kCompleteEdgeLimit) {
    for (int u = 0; u < inst.n_nodes; ++u)
      for (int v = 0; v < inst.n_nodes; ++v) {
        if (u == v) continue;
        inst.edge_src.push_back(u);
        inst.edge_dst.push_back(v);
        inst.edge_len.push_back(inst.dense_distance(u, v));
      }
    finalize_edges(inst);
    return inst;
  }
  inst.out_begin.assign(static_cast<std::size_t>(inst.n_nodes) + 1, 0);
  return inst;
}

void save_dimacs(const ProblemInstance& inst, const std::string& path) {
  if (inst.kind != ProblemKind::mis) throw ContractViolation("save_dimacs needs a mis instance");
  auto f = open_out(path);
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (std::int64_t e = 0; e < inst.num_edges(); ++e)
    if (inst.edge_src[static_cast<std::size_t>(e)] < inst.edge_dst[static_cast<std::size_t>(e)])
      pairs.emplace_back(inst.edge_src[static_cast<std::size_t>(e)],
                         inst.edge_dst[static_cast<std::size_t>(e)]);
  f << "c moco seed=" << inst.seed << "\n";
  f << "p edge " << inst.n_nodes << " " << pairs.size() << "\n";
  for (const auto& [u, v] : pairs) f << "e " << (u + 1) << " " << (v + 1) << "\n";
  if (!f) throw DataError("write failed for '" + path + "'");
}

ProblemInstance load_dimacs(const std::string& path) {
  auto f = open_in(path);
  ProblemInstance inst;
  inst.kind = ProblemKind::mis;
  std::string line;
  int line_no = 0;
  long n = -1, m = -1, edges_seen = 0;
  std::set<std::pair<std::int32_t, std::int32_t>> pairs;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == 'c') {
      parse_seed_comment(t, &inst.seed, nullptr);
      continue;
    }
    const auto toks = split_ws(t);
    if (toks[0] == "p") {
      if (toks.size() != 4 || toks[1] != "edge")
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'p edge n m'");
      n = parse_long(toks[2], path, line_no);
      m = parse_long(toks[3], path, line_no);
      if (n < 1) throw ParseError(path + ":" + std::to_string(line_no) + ": n must be positive");
    } else if (toks[0] == "e") {
      if (n < 0)
        throw ParseError(path + ":" + std::to_string(line_no) + ": 'e' line before 'p' line");
      if (toks.size() != 3)
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'e u v'");
      const long u = parse_long(toks[1], path, line_no);
      const long v = parse_long(toks[2], path, line_no);
      if (u < 1 || u > n || v < 1 || v > n)
        throw ParseError(path + ":" + std::to_string(line_no) + ": endpoint out of range");
      if (u == v) throw ParseError(path + ":" + std::to_string(line_no) + ": self loop");
      pairs.emplace(static_cast<std::int32_t>(std::min(u, v) - 1),
                    static_cast<std::int32_t>(std::max(u, v) - 1));
      ++edges_seen;
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": unrecognised line '" + t + "'");
    }
  }
  if (n < 0) throw ParseError(path + ": 'p edge' line missing");
  if (edges_seen != m)
    throw ParseError(path + ": header declares " + std::to_string(m) + " edges, found " +
                     std::to_string(edges_seen));
  inst.n_nodes = static_cast<int>(n);
  for (const auto& [u, v] : pairs) {
    inst.edge_src.push_back(u);
    inst.edge_dst.push_back(v);
    inst.edge_src.push_back(v);
    inst.edge_dst.push_back(u);
  }
  finalize_edges(inst);
  return inst;
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  if (inst.kind == ProblemKind::tsp)
    save_tsplib(inst, path);
  else
    save_dimacs(inst, path);
}

ProblemInstance load_instance(const std::string& path) {
  if (fs::path(path).extension() == ".tsp") return load_tsplib(path);
  return load_dimacs(path);
}

std::string save_dataset(const std::vector<ProblemInstance>& instances, const std::string& dir,
                         const std::string& stem, const std::string& header_comment) {
  if (instances.empty()) throw ConfigError("dataset must contain at least one instance");
  const ProblemKind kind = instances.front().kind;
  for (const auto& inst : instances)
    if (inst.kind != kind) throw ConfigError("dataset mixes problem kinds");
  fs::create_directories(dir);
  const std::string ext = kind == ProblemKind::tsp ? ".tsp" : ".gr";
  std::vector<std::string> names;
  char buf[32];
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    const std::string name = stem + "_" + buf + ext;
    save_instance(instances[i], (fs::path(dir) / name).string());
    names.push_back(name);
  }
  const std::string manifest = (fs::path(dir) / (stem + ".manifest")).string();
  auto f = open_out(manifest);
  f << "moco-dataset " << to_string(kind) << " " << instances.size() << "\n";
  if (!header_comment.empty()) f << "# " << header_comment << "\n";
  for (const auto& name : names) f << name << "\n";
  if (!f) throw DataError("write failed for '" + manifest + "'");
  return manifest;
}

std::vector<std::string> manifest_entries(const std::string& manifest_path, ProblemKind* kind_out) {
  auto f = open_in(manifest_path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError(manifest_path + ": empty manifest");
  const auto toks = split_ws(trim(line));
  if (toks.size() != 3 || toks[0] != "moco-dataset")
    throw ParseError(manifest_path + ":1: expected 'moco-dataset <kind> <count>'");
  const ProblemKind kind = problem_kind_from_string(toks[1]);
  const long count = parse_long(toks[2], manifest_path, 1);
  std::vector<std::string> entries;
  const fs::path base = fs::path(manifest_path).parent_path();
  while (std::getline(f, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    entries.push_back((base / t).string());
  }
  if (static_cast<long>(entries.size()) != count)
    throw ParseError(manifest_path + ": header declares " + std::to_string(count) +
                     " entries, found " + std::to_string(entries.size()));
  if (kind_out != nullptr) *kind_out = kind;
  return entries;
}

std::vector<ProblemInstance> load_dataset(const std::string& manifest_path) {
  ProblemKind kind = ProblemKind::tsp;
  const auto entries = manifest_entries(manifest_path, &kind);
  std::vector<ProblemInstance> out;
  out.reserve(entries.size());
  for (const auto& path : entries) {
    out.push_back(load_instance(path));
    if (out.back().kind != kind)
      throw DataError(manifest_path + ": instance '" + path + "' does not match manifest kind");
  }
  return out;
}

}  // namespace moco
