#include "moco/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "moco/baselines.hpp"
#include "moco/errors.hpp"
#include "moco/es.hpp"
#include "moco/instance_io.hpp"
#include "moco/oracles.hpp"
#include "moco/parallel.hpp"
#include "moco/search.hpp"
#include "moco/version.hpp"

namespace moco {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------- helpers

std::ofstream open_out(const std::string& path) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  return f;
}

void write_file_header(std::ofstream& f, const std::string& command, const std::string& config) {
  f << "# moco " << command << " version=" << kVersion << " build=" << kBuildId << "\n";
  f << "# config:" << config << "\n";
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Reference objectives: "instance,value" lines, '#' comments allowed.
std::map<int, double> load_reference(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open reference file '" + path + "'");
  std::map<int, double> ref;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream is(line);
    std::string a, b;
    if (!std::getline(is, a, ',') || !std::getline(is, b))
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'instance,value'");
    if (a == "instance") continue;  // optional header row
    try {
      ref[std::stoi(a)] = std::stod(b);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  return ref;
}

// Reported objective: tour cost for tsp, set size (positive) for mis.
double reported_objective(ProblemKind kind, double internal) {
  return kind == ProblemKind::tsp ? internal : -internal;
}

double gap_percent(ProblemKind kind, double reported, double ref) {
  if (kind == ProblemKind::tsp) return 100.0 * (reported - ref) / ref;
  return 100.0 * (ref - reported) / ref;
}

// Exact reference when the instance is small enough for the built-in oracles.
std::optional<double> builtin_reference(const ProblemInstance& inst) {
  if (inst.kind == ProblemKind::tsp) {
    if (inst.n_nodes <= 16) return held_karp_exact(inst).objective;
    return std::nullopt;
  }
  if (inst.n_nodes <= 40) return -mis_exact(inst).objective;
  return std::nullopt;
}

struct CurveSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal deterministic SVG line plot (fixed palette, two-decimal pixels).
void write_svg_curves(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series) {
  constexpr double W = 800, H = 500, ML = 70, MR = 30, MT = 40, MB = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  const auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  auto f = open_out(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
    << "</text>\n";
  f << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\"" << H - MB
    << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
    << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << x_label << "</text>\n";
  f << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  f << "<text x=\"" << ML << "\" y=\"" << H - MB + 16 << "\" font-size=\"10\">" << fixed2(xmin)
    << "</text>\n";
  f << "<text x=\"" << W - MR << "\" y=\"" << H - MB + 16
    << "\" text-anchor=\"end\" font-size=\"10\">" << fixed2(xmax) << "</text>\n";
  f << "<text x=\"" << ML - 6 << "\" y=\"" << H - MB << "\" text-anchor=\"end\" font-size=\"10\">"
    << fixed2(ymin) << "</text>\n";
  f << "<text x=\"" << ML - 6 << "\" y=\"" << MT + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
    << fixed2(ymax) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    f << "<polyline fill=\"none\" stroke=\"" << palette[s % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[s].points) f << fixed2(px(x)) << "," << fixed2(py(y)) << " ";
    f << "\"/>\n";
    f << "<text x=\"" << W - MR - 4 << "\" y=\"" << MT + 16 + 16 * static_cast<double>(s)
      << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << palette[s % 6] << "\">"
      << series[s].name << "</text>\n";
  }
  f << "</svg>\n";
}

// ------------------------------------------------------- config documents

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r\n");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

std::vector<StageConfig> parse_stages(const std::string& text) {
  std::vector<StageConfig> stages;
  std::istringstream outer(text);
  std::string stage_str;
  while (std::getline(outer, stage_str, ';')) {
    if (stage_str.empty()) continue;
    StageConfig s;
    std::istringstream inner(stage_str);
    std::string field;
    while (std::getline(inner, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw ConfigError("bad stage field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const int value = std::stoi(field.substr(eq + 1));
      if (key == "K")
        s.K = value;
      else if (key == "b")
        s.b = value;
      else if (key == "N")
        s.n_perturbations = value;
      else if (key == "steps")
        s.meta_steps = value;
      else
        throw ConfigError("unknown stage field '" + key + "' (expected K,b,N,steps)");
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw ConfigError("stage list is empty");
  return stages;
}

long to_long(const std::string& key, const std::string& val) {
  try {
    std::size_t used = 0;
    const long v = std::stol(val, &used);
    if (used != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("field '" + key + "': expected an integer, got '" + val + "'");
  }
}

double to_double(const std::string& key, const std::string& val) {
  try {
    std::size_t used = 0;
    const double v = std::stod(val, &used);
    if (used != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("field '" + key + "': expected a number, got '" + val + "'");
  }
}

void apply_config_kv(EsConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key == "kind")
      cfg.dist.kind = problem_kind_from_string(val);
    else if (key == "n")
      cfg.dist.n = static_cast<int>(to_long(key, val));
    else if (key == "knn")
      cfg.dist.knn = static_cast<int>(to_long(key, val));
    else if (key == "n_min")
      cfg.dist.n_min = static_cast<int>(to_long(key, val));
    else if (key == "n_max")
      cfg.dist.n_max = static_cast<int>(to_long(key, val));
    else if (key == "p")
      cfg.dist.p = to_double(key, val);
    else if (key == "fixed_pool")
      cfg.dist.fixed_pool = static_cast<int>(to_long(key, val));
    else if (key == "stages")
      cfg.stages = parse_stages(val);
    else if (key == "sigma")
      cfg.sigma = to_double(key, val);
    else if (key == "meta_lr")
      cfg.meta_lr = to_double(key, val);
    else if (key == "lr_schedule")
      cfg.lr_schedule = lr_schedule_from_string(val);
    else if (key == "warmup_steps")
      cfg.warmup_steps = static_cast<int>(to_long(key, val));
    else if (key == "loss_transform")
      cfg.loss_transform = loss_transform_from_string(val);
    else if (key == "pair_clip")
      cfg.pair_clip = to_double(key, val);
    else if (key == "meta_batch")
      cfg.meta_batch = static_cast<int>(to_long(key, val));
    else if (key == "d_hidden")
      cfg.d_hidden = static_cast<int>(to_long(key, val));
    else if (key == "n_blocks")
      cfg.n_blocks = static_cast<int>(to_long(key, val));
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(to_long(key, val));
    else if (key == "threads")
      cfg.threads = static_cast<int>(to_long(key, val));
    else if (key == "val_instances")
      cfg.val_instances = static_cast<int>(to_long(key, val));
    else if (key == "val_every")
      cfg.val_every = static_cast<int>(to_long(key, val));
    else if (key == "out_dir")
      cfg.out_dir = val;
    else
      throw ConfigError("unknown config field '" + key + "'");
  }
}

std::string stages_string(const std::vector<StageConfig>& stages) {
  std::ostringstream os;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i > 0) os << ";";
    os << "K=" << stages[i].K << ",b=" << stages[i].b << ",N=" << stages[i].n_perturbations
       << ",steps=" << stages[i].meta_steps;
  }
  return os.str();
}

std::string es_config_string(const EsConfig& cfg) {
  std::ostringstream os;
  os << " kind=" << to_string(cfg.dist.kind);
  if (cfg.dist.kind == ProblemKind::tsp)
    os << " n=" << cfg.dist.n << " knn=" << cfg.dist.knn;
  else
    os << " n_min=" << cfg.dist.n_min << " n_max=" << cfg.dist.n_max << " p="
       << format_double(cfg.dist.p) << " fixed_pool=" << cfg.dist.fixed_pool;
  os << " stages=" << stages_string(cfg.stages) << " sigma=" << format_double(cfg.sigma)
     << " meta_lr=" << format_double(cfg.meta_lr) << " lr_schedule=" << to_string(cfg.lr_schedule)
     << " warmup_steps=" << cfg.warmup_steps << " loss_transform=" << to_string(cfg.loss_transform);
  if (cfg.pair_clip) os << " pair_clip=" << format_double(*cfg.pair_clip);
  os << " meta_batch=" << cfg.meta_batch << " d_hidden=" << cfg.d_hidden
     << " n_blocks=" << cfg.n_blocks << " seed=" << cfg.seed << " threads=" << cfg.threads
     << " val_instances=" << cfg.val_instances << " val_every=" << cfg.val_every
     << " out_dir=" << cfg.out_dir;
  if (!cfg.resume_path.empty()) os << " resume=" << cfg.resume_path;
  return os.str();
}

// ----------------------------------------------------------- subcommands

struct GenDataArgs {
  std::string kind = "tsp";
  int count = 10;
  std::uint64_t seed = 0;
  std::string out = "data";
  std::string stem = "data";
  int n = 128;
  int knn = 0;
  int n_min = 30;
  int n_max = 50;
  double p = 0.15;
};

int cmd_gen_data(const GenDataArgs& a) {
  if (a.count < 1) throw ConfigError("count must be >= 1");
  InstanceDistribution dist;
  dist.kind = problem_kind_from_string(a.kind);
  dist.n = a.n;
  dist.knn = a.knn;
  dist.n_min = a.n_min;
  dist.n_max = a.n_max;
  dist.p = a.p;
  std::vector<ProblemInstance> instances;
  instances.reserve(static_cast<std::size_t>(a.count));
  for (int i = 0; i < a.count; ++i)
    instances.push_back(sample_instance(dist, mix64(a.seed, static_cast<std::uint64_t>(i))));
  std::ostringstream cfg;
  cfg << "kind=" << a.kind << " count=" << a.count << " seed=" << a.seed;
  if (dist.kind == ProblemKind::tsp)
    cfg << " n=" << a.n << " knn=" << a.knn;
  else
    cfg << " n_min=" << a.n_min << " n_max=" << a.n_max << " p=" << format_double(a.p);
  cfg << " version=" << kVersion << " build=" << kBuildId;
  const std::string manifest = save_dataset(instances, a.out, a.stem, cfg.str());
  std::cout << manifest << "\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  bool dry_run = false;
};

int cmd_train(const TrainArgs& a) {
  EsConfig cfg;
  cfg.stages = default_stages(cfg.dist.kind);
  std::map<std::string, std::string> kv;
  if (!a.config_path.empty()) kv = parse_config_file(a.config_path);
  // Flags override file values.
  for (const auto& [k, v] : a.overrides) kv[k] = v;
  // Apply kind first so stage defaults can depend on it.
  if (const auto it = kv.find("kind"); it != kv.end()) {
    cfg.dist.kind = problem_kind_from_string(it->second);
    if (kv.find("stages") == kv.end()) cfg.stages = default_stages(cfg.dist.kind);
  }
  if (const auto it = kv.find("resume"); it != kv.end()) {
    cfg.resume_path = it->second;
    kv.erase("resume");
  }
  apply_config_kv(cfg, kv);
  cfg.validate();
  std::cout << "config:" << es_config_string(cfg) << "\n";
  if (a.dry_run) return 0;
  const TrainResult result = train(cfg);
  std::cout << "final_checkpoint: " << (fs::path(cfg.out_dir) / "final.ckpt").string() << "\n";
  std::cout << "total_steps: " << result.total_steps << "\n";
  std::cout << "initial_val_loss: " << format_double(result.initial_val_loss) << "\n";
  std::cout << "final_val_loss: " << format_double(result.final_val_loss) << "\n";
  return 0;
}

struct SolveArgs {
  std::string checkpoint;
  std::string dataset;
  int K = 50;
  int b = 32;
  int M = 1;
  std::string conditioning = "full";
  std::uint64_t seed = 0;
  int threads = default_threads();
  int start_node = -1;
  bool greedy = false;
  std::string ref_path;
  std::string out = "solve_out";
};

SearchConfig solve_search_config(const SolveArgs& a, int train_K) {
  SearchConfig cfg;
  cfg.K = a.K;
  cfg.b = a.b;
  cfg.M = a.M;
  cfg.conditioning = conditioning_mode_from_string(a.conditioning);
  cfg.train_K = train_K;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.start_node = a.start_node;
  cfg.greedy = a.greedy;
  cfg.validate();
  return cfg;
}

int train_k_from_meta(const CheckpointMeta& meta) {
  const auto it = meta.find("train_K");
  return it == meta.end() ? 0 : std::stoi(it->second);
}

std::string solve_config_string(const SolveArgs& a, int train_K) {
  std::ostringstream os;
  os << " checkpoint=" << a.checkpoint << " dataset=" << a.dataset << " K=" << a.K << " b=" << a.b
     << " M=" << a.M << " conditioning=" << a.conditioning << " train_K=" << train_K
     << " seed=" << a.seed << " start_node=" << a.start_node << " greedy=" << (a.greedy ? 1 : 0);
  if (!a.ref_path.empty()) os << " ref=" << a.ref_path;
  return os.str();
}

int cmd_solve(const SolveArgs& a) {
  CheckpointMeta meta;
  const CheckpointBundle phi = load_bundle(a.checkpoint, &meta);
  const std::vector<ProblemInstance> instances = load_dataset(a.dataset);
  if (instances.empty()) throw DataError("dataset is empty");
  if (instances.front().kind != phi.init.kind)
    throw ConfigError("checkpoint kind (" + to_string(phi.init.kind) +
                      ") does not match dataset kind (" + to_string(instances.front().kind) + ")");
  const int train_K = train_k_from_meta(meta);
  const SearchConfig scfg = solve_search_config(a, train_K);
  const ProblemKind kind = instances.front().kind;

  std::map<int, double> ref;
  if (!a.ref_path.empty()) ref = load_reference(a.ref_path);

  const std::string config_str = solve_config_string(a, train_K);
  auto results_csv = open_out((fs::path(a.out) / "results.csv").string());
  write_file_header(results_csv, "solve", config_str);
  results_csv << "instance,n,objective,reference,gap_percent,constructions\n";
  auto traj_csv = open_out((fs::path(a.out) / "trajectories.csv").string());
  write_file_header(traj_csv, "solve", config_str);
  traj_csv << "instance,restart,k,best_objective,batch_best,alpha,wall_ms\n";

  bool warned_ref = false;
  double gap_sum = 0.0;
  int gap_count = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const ProblemInstance& inst = instances[i];
    SearchConfig icfg = scfg;
    icfg.seed = mix64(scfg.seed, static_cast<std::uint64_t>(i));
    const RestartsResult res = parallel_restarts(inst, phi, icfg);
    const double reported = reported_objective(kind, res.best.best_value);
    std::optional<double> r;
    if (const auto it = ref.find(static_cast<int>(i)); it != ref.end()) r = it->second;
    if (!r.has_value() && a.ref_path.empty()) r = builtin_reference(inst);
    results_csv << i << "," << inst.n_nodes << "," << format_double(reported) << ",";
    if (r.has_value()) {
      const double gap = gap_percent(kind, reported, *r);
      results_csv << format_double(*r) << "," << format_double(gap);
      gap_sum += gap;
      ++gap_count;
    } else {
      results_csv << ",";
      if (!warned_ref) {
        std::cerr << "warning: no reference for instance " << i << "; gap omitted\n";
        warned_ref = true;
      }
    }
    results_csv << "," << res.constructions << "\n";
    for (std::size_t restart = 0; restart < res.restarts.size(); ++restart)
      for (const auto& rec : res.restarts[restart].log)
        traj_csv << i << "," << restart << "," << rec.k << ","
                 << format_double(reported_objective(kind, rec.best_objective)) << ","
                 << format_double(reported_objective(kind, rec.batch_best)) << ","
                 << format_double(rec.alpha) << "," << format_double(rec.wall_ms) << "\n";
  }
  if (gap_count > 0)
    std::cout << "mean_gap_percent: " << format_double(gap_sum / gap_count) << " over " << gap_count
              << " instances\n";
  std::cout << (fs::path(a.out) / "results.csv").string() << "\n";
  return 0;
}

struct BenchArgs {
  std::string dataset;
  std::string methods = "moco,adam_theta,farthest_insertion";
  std::string checkpoint;
  int K = 50;
  int b = 32;
  int M = 1;
  double adam_lr = kAdamThetaDefaultLr;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string ref_path;
  std::string out = "bench_out";
};

int cmd_bench(const BenchArgs& a) {
  std::vector<std::string> methods;
  {
    std::istringstream is(a.methods);
    std::string m;
    while (std::getline(is, m, ',')) {
      if (m != "moco" && m != "adam_theta" && m != "farthest_insertion")
        throw ConfigError("unknown method '" + m +
                          "' (expected moco, adam_theta, farthest_insertion)");
      methods.push_back(m);
    }
    if (methods.empty()) throw ConfigError("method list is empty");
  }
  const std::vector<ProblemInstance> instances = load_dataset(a.dataset);
  if (instances.empty()) throw DataError("dataset is empty");
  const ProblemKind kind = instances.front().kind;
  if (std::find(methods.begin(), methods.end(), "farthest_insertion") != methods.end() &&
      kind != ProblemKind::tsp)
    throw ConfigError("farthest_insertion applies to tsp datasets only");

  CheckpointMeta meta;
  CheckpointBundle phi;
  if (!a.checkpoint.empty()) {
    phi = load_bundle(a.checkpoint, &meta);
    if (phi.init.kind != kind) throw ConfigError("checkpoint kind does not match dataset kind");
  } else {
    phi = make_default_bundle(kind, a.seed);
  }
  SolveArgs sargs;
  sargs.K = a.K;
  sargs.b = a.b;
  sargs.M = a.M;
  sargs.seed = a.seed;
  sargs.threads = a.threads;
  const SearchConfig scfg = solve_search_config(sargs, train_k_from_meta(meta));

  std::map<int, double> ref;
  if (!a.ref_path.empty()) ref = load_reference(a.ref_path);

  std::ostringstream cfg;
  cfg << " dataset=" << a.dataset << " methods=" << a.methods << " checkpoint="
      << (a.checkpoint.empty() ? "(default-init)" : a.checkpoint) << " K=" << a.K << " b=" << a.b
      << " M=" << a.M << " adam_lr=" << format_double(a.adam_lr) << " seed=" << a.seed;
  const std::string config_str = cfg.str();

  auto comparison = open_out((fs::path(a.out) / "comparison.csv").string());
  write_file_header(comparison, "bench", config_str);
  comparison << "method,instance,n,objective,reference,gap_percent,constructions,wall_ms\n";

  std::map<std::string, std::ofstream> traj_files;
  for (const auto& m : methods) {
    if (m == "farthest_insertion") continue;
    auto f = open_out((fs::path(a.out) / ("trajectory_" + m + ".csv")).string());
    write_file_header(f, "bench", config_str);
    f << "method,instance,restart,k,best_objective,batch_best,alpha,wall_ms,cum_constructions\n";
    traj_files.emplace(m, std::move(f));
  }

  std::map<std::string, CurveSeries> curves;
  for (const auto& m : methods) {
    if (m == "farthest_insertion") continue;
    curves[m].name = m;
    curves[m].points.assign(static_cast<std::size_t>(a.K), {0.0, 0.0});
    for (int k = 0; k < a.K; ++k)
      curves[m].points[static_cast<std::size_t>(k)].first =
          static_cast<double>((k + 1)) * a.b * a.M;
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const ProblemInstance& inst = instances[i];
    std::optional<double> r;
    if (const auto it = ref.find(static_cast<int>(i)); it != ref.end()) r = it->second;
    if (!r.has_value() && a.ref_path.empty()) r = builtin_reference(inst);

    for (const auto& method : methods) {
      const auto t0 = Clock::now();
      double reported = 0.0;
      std::int64_t constructions = 0;
      std::optional<RestartsResult> rres;
      if (method == "moco") {
        SearchConfig icfg = scfg;
        icfg.seed = mix64(a.seed, {1, static_cast<std::uint64_t>(i)});
        rres = parallel_restarts(inst, phi, icfg);
      } else if (method == "adam_theta") {
        SearchConfig icfg = scfg;
        icfg.seed = mix64(a.seed, {2, static_cast<std::uint64_t>(i)});
        rres = adam_theta_restarts(inst, phi.init, icfg, a.adam_lr);
      } else {
        const auto tour = farthest_insertion(inst);
        reported = tour_cost(inst, tour);
        constructions = 1;
      }
      const double wall = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      if (rres.has_value()) {
        reported = reported_objective(kind, rres->best.best_value);
        constructions = rres->constructions;
        auto& tf = traj_files.at(method);
        for (std::size_t restart = 0; restart < rres->restarts.size(); ++restart)
          for (const auto& rec : rres->restarts[restart].log)
            tf << method << "," << i << "," << restart << "," << rec.k << ","
               << format_double(reported_objective(kind, rec.best_objective)) << ","
               << format_double(reported_objective(kind, rec.batch_best)) << ","
               << format_double(rec.alpha) << "," << format_double(rec.wall_ms) << ","
               << static_cast<std::int64_t>(rec.k + 1) * a.b << "\n";
        // Anytime curve: mean over instances of the best-over-restarts value.
        for (int k = 0; k < a.K; ++k) {
          double best_k = std::numeric_limits<double>::infinity();
          for (const auto& restart : rres->restarts)
            best_k = std::min(best_k, restart.log[static_cast<std::size_t>(k)].best_objective);
          curves[method].points[static_cast<std::size_t>(k)].second +=
              reported_objective(kind, best_k) / static_cast<double>(instances.size());
        }
      }
      comparison << method << "," << i << "," << inst.n_nodes << "," << format_double(reported)
                 << ",";
      if (r.has_value())
        comparison << format_double(*r) << "," << format_double(gap_percent(kind, reported, *r));
      else
        comparison << ",";
      comparison << "," << constructions << "," << format_double(wall) << "\n";
    }
  }
  if (!curves.empty()) {
    std::vector<CurveSeries> series;
    for (auto& [name, s] : curves) series.push_back(std::move(s));
    write_svg_curves((fs::path(a.out) / "anytime_curves.svg").string(),
                     "mean best objective vs constructions", "constructions",
                     kind == ProblemKind::tsp ? "tour cost" : "set size", series);
  }
  std::cout << (fs::path(a.out) / "comparison.csv").string() << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::string head(32, '\0');
  f.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(f.gcount()));
  f.close();

  if (head.rfind("moco-checkpoint", 0) == 0) {
    std::cout << checkpoint_manifest(path);
    // Also show what features the stored networks consume.
    std::ifstream g(path, std::ios::binary);
    std::string line;
    std::string kind_str, phase_str;
    while (std::getline(g, line) && line != "data:") {
      if (line.rfind("kind: ", 0) == 0) kind_str = line.substr(6);
      if (line.rfind("phase: ", 0) == 0) phase_str = line.substr(7);
    }
    const ProblemKind kind = problem_kind_from_string(kind_str);
    std::cout << "\nfeature columns:\n";
    if (phase_str == "pair") {
      std::cout << "[init]\n"
                << feature_manifest(kind, GnnPhase::init) << "[update]\n"
                << feature_manifest(kind, GnnPhase::update);
    } else {
      std::cout << feature_manifest(kind, gnn_phase_from_string(phase_str));
    }
    return 0;
  }
  if (head.rfind("moco-dataset", 0) == 0) {
    ProblemKind kind = ProblemKind::tsp;
    const auto entries = manifest_entries(path, &kind);
    std::cout << "dataset kind: " << to_string(kind) << "\ninstances: " << entries.size() << "\n";
    std::map<int, int> hist;
    std::int64_t total_edges = 0;
    for (const auto& e : entries) {
      const ProblemInstance inst = load_instance(e);
      ++hist[inst.n_nodes];
      total_edges += inst.num_edges();
    }
    std::cout << "node-count histogram:\n";
    for (const auto& [n, c] : hist) std::cout << "  n=" << n << ": " << c << "\n";
    std::cout << "mean directed edges: "
              << format_double(static_cast<double>(total_edges) / static_cast<double>(entries.size()))
              << "\n";
    return 0;
  }
  if (head.rfind("moco-heatmap", 0) == 0) {
    ProblemKind kind = ProblemKind::tsp;
    const Heatmap h = load_heatmap(path, &kind);
    std::cout << "heatmap kind: " << to_string(kind) << "\nvalues: " << h.theta.size()
              << "\nmin: " << format_double(h.theta.minCoeff())
              << "\nmax: " << format_double(h.theta.maxCoeff()) << "\n";
    return 0;
  }
  if (head.rfind("NAME", 0) == 0 || fs::path(path).extension() == ".tsp" ||
      head.rfind("c ", 0) == 0 || head.rfind("p edge", 0) == 0) {
    const ProblemInstance inst = load_instance(path);
    std::cout << "instance kind: " << to_string(inst.kind) << "\nnodes: " << inst.n_nodes
              << "\ndirected edges: " << inst.num_edges() << "\nseed: " << inst.seed << "\n";
    if (inst.kind == ProblemKind::tsp) std::cout << "knn: " << inst.knn << "\n";
    return 0;
  }
  throw DataError(path + ": unknown file type (not a checkpoint, dataset, heatmap, or instance)");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"heatmap-construction solver with a learned search meta-optimizer"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cgen = app.add_subcommand("gen-data", "generate an instance dataset");
  cgen->add_option("--kind", gen.kind, "tsp or mis")->required();
  cgen->add_option("--count", gen.count, "number of instances")->required();
  cgen->add_option("--seed", gen.seed, "master seed");
  cgen->add_option("--out", gen.out, "output directory");
  cgen->add_option("--stem", gen.stem, "file name stem");
  cgen->add_option("--n", gen.n, "tsp: city count");
  cgen->add_option("--knn", gen.knn, "tsp: keep k nearest out-neighbours (0 = complete)");
  cgen->add_option("--n-min", gen.n_min, "mis: minimum node count");
  cgen->add_option("--n-max", gen.n_max, "mis: maximum node count");
  cgen->add_option("--p", gen.p, "mis: edge probability");

  TrainArgs tr;
  std::vector<std::string> train_sets;
  auto* ctrain = app.add_subcommand("train", "meta-train the heatmap networks");
  ctrain->add_option("--config", tr.config_path, "key = value config file");
  ctrain->add_option("--set", train_sets, "override config fields, key=value (repeatable)");
  ctrain->add_flag("--dry-run", tr.dry_run, "validate and print the resolved config only");

  SolveArgs so;
  auto* csolve = app.add_subcommand("solve", "run the search on a dataset");
  csolve->add_option("--checkpoint", so.checkpoint, "paired checkpoint file")->required();
  csolve->add_option("--dataset", so.dataset, "dataset manifest")->required();
  csolve->add_option("--K", so.K, "search iterations");
  csolve->add_option("--b", so.b, "constructions per iteration");
  csolve->add_option("--M", so.M, "parallel restarts");
  csolve->add_option("--conditioning", so.conditioning, "full or naive_continuation");
  csolve->add_option("--seed", so.seed, "master seed");
  csolve->add_option("--threads", so.threads, "worker threads");
  csolve->add_option("--start-node", so.start_node, "tsp: fix the start node");
  csolve->add_flag("--greedy", so.greedy, "take arg-max actions instead of sampling");
  csolve->add_option("--ref", so.ref_path, "reference objectives CSV (instance,value)");
  csolve->add_option("--out", so.out, "output directory");

  BenchArgs be;
  auto* cbench = app.add_subcommand("bench", "compare methods under a shared budget");
  cbench->add_option("--dataset", be.dataset, "dataset manifest")->required();
  cbench->add_option("--methods", be.methods, "comma list: moco,adam_theta,farthest_insertion");
  cbench->add_option("--checkpoint", be.checkpoint, "paired checkpoint (default: fresh init)");
  cbench->add_option("--K", be.K, "search iterations");
  cbench->add_option("--b", be.b, "constructions per iteration");
  cbench->add_option("--M", be.M, "parallel restarts");
  cbench->add_option("--adam-lr", be.adam_lr, "adam_theta learning rate");
  cbench->add_option("--seed", be.seed, "master seed");
  cbench->add_option("--threads", be.threads, "worker threads");
  cbench->add_option("--ref", be.ref_path, "reference objectives CSV");
  cbench->add_option("--out", be.out, "output directory");

  std::string inspect_path;
  auto* cinspect = app.add_subcommand("inspect", "describe a checkpoint/dataset/instance file");
  cinspect->add_option("path", inspect_path, "file to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cgen->parsed()) return cmd_gen_data(gen);
    if (ctrain->parsed()) {
      for (const auto& s : train_sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
          throw ConfigError("--set expects key=value, got '" + s + "'");
        tr.overrides[s.substr(0, eq)] = s.substr(eq + 1);
      }
      return cmd_train(tr);
    }
    if (csolve->parsed()) return cmd_solve(so);
    if (cbench->parsed()) return cmd_bench(be);
    if (cinspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace moco
