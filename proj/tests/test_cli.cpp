#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "moco/checkpoint.hpp"
#include "moco/cli.hpp"

using namespace moco;
namespace fs = std::filesystem;

namespace {

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::vector<std::string> full;
  full.emplace_back("moco");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : full) argv.push_back(s.data());

  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  int rc = -1;
  try {
    rc = run_cli(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old);
    throw;
  }
  std::cout.rdbuf(old);
  if (out != nullptr) *out = captured.str();
  return rc;
}

fs::path tmp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "moco_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("dataset generation, inspection and reproducible solving") {
  const fs::path dir = tmp_dir("roundtrip");
  const std::string manifest = (dir / "ds" / "tiny.manifest").string();
  CHECK(cli({"gen-data", "--kind", "tsp", "--count", "3", "--n", "6", "--seed", "5", "--out",
             (dir / "ds").string(), "--stem", "tiny"}) == 0);
  CHECK(fs::exists(manifest));

  std::string listing;
  CHECK(cli({"inspect", manifest}, &listing) == 0);
  CHECK(listing.find("kind: tsp") != std::string::npos);
  CHECK(listing.find("instances: 3") != std::string::npos);

  const std::string ckpt = (dir / "net.ckpt").string();
  save_bundle(make_default_bundle(ProblemKind::tsp, 3, InitScheme::uniform_fan_in, 8, 1), ckpt,
              {{"train_K", "4"}});

  std::string solve_out;
  CHECK(cli({"solve", "--checkpoint", ckpt, "--dataset", manifest, "--K", "3", "--b", "4", "--M",
             "2", "--seed", "11", "--out", (dir / "run1").string()},
            &solve_out) == 0);
  CHECK(solve_out.find("mean_gap_percent") != std::string::npos);
  CHECK(cli({"solve", "--checkpoint", ckpt, "--dataset", manifest, "--K", "3", "--b", "4", "--M",
             "2", "--seed", "11", "--out", (dir / "run2").string()}) == 0);

  // Same seed, byte-identical result tables.
  CHECK(read_file(dir / "run1" / "results.csv") == read_file(dir / "run2" / "results.csv"));

  // A different seed changes the outcome file.
  CHECK(cli({"solve", "--checkpoint", ckpt, "--dataset", manifest, "--K", "3", "--b", "4", "--M",
             "2", "--seed", "12", "--out", (dir / "run3").string()}) == 0);
  CHECK(read_file(dir / "run1" / "results.csv") != read_file(dir / "run3" / "results.csv"));

  CHECK(fs::exists(dir / "run1" / "trajectories.csv"));

  // Checkpoint kind must match the dataset kind.
  const std::string mis_ckpt = (dir / "mis.ckpt").string();
  save_bundle(make_default_bundle(ProblemKind::mis, 3, InitScheme::uniform_fan_in, 8, 1),
              mis_ckpt);
  CHECK(cli({"solve", "--checkpoint", mis_ckpt, "--dataset", manifest, "--out",
             (dir / "run4").string()}) == 2);
}

TEST_CASE("training dry runs resolve the config without side effects") {
  const fs::path dir = tmp_dir("train");
  std::string out;
  CHECK(cli({"train", "--set", "kind=tsp", "--set", "n=6", "--set",
             "stages=K=2,b=2,N=4,steps=1", "--set", "d_hidden=8", "--set", "n_blocks=1",
             "--set", "out_dir=" + (dir / "t").string(), "--dry-run"},
            &out) == 0);
  CHECK(out.find("kind=tsp") != std::string::npos);
  CHECK(out.find("stages=K=2,b=2,N=4,steps=1") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "t" / "final.ckpt"));

  // Config file + override layering: the command line wins.
  const fs::path cfg = dir / "train.cfg";
  {
    std::ofstream f(cfg);
    f << "# comment line\nkind = tsp\nn = 6\nstages = K=2,b=2,N=4,steps=1\n"
      << "d_hidden = 8\nn_blocks = 1\nseed = 3\n";
  }
  std::string out2;
  CHECK(cli({"train", "--config", cfg.string(), "--set", "seed=9", "--set",
             "out_dir=" + (dir / "t2").string(), "--dry-run"},
            &out2) == 0);
  CHECK(out2.find("seed=9") != std::string::npos);

  CHECK(cli({"train", "--set", "kind=tsp", "--set", "stages=K=0,b=2,N=4,steps=1", "--dry-run"}) ==
        2);
  CHECK(cli({"train", "--set", "no_such_field=1", "--dry-run"}) == 2);
  CHECK(cli({"train", "--set", "stages=K=2,b=2,Q=4,steps=1", "--dry-run"}) == 2);
  CHECK(cli({"train", "--config", (dir / "missing.cfg").string(), "--dry-run"}) == 3);
}

TEST_CASE("a minimal training run writes checkpoints the solver accepts") {
  const fs::path dir = tmp_dir("train_real");
  std::string out;
  CHECK(cli({"train", "--set", "kind=tsp", "--set", "n=6", "--set",
             "stages=K=2,b=2,N=4,steps=2", "--set", "d_hidden=8", "--set", "n_blocks=1",
             "--set", "meta_batch=2", "--set", "val_instances=0", "--set", "seed=4", "--set",
             "out_dir=" + (dir / "t").string()},
            &out) == 0);
  CHECK(out.find("final_checkpoint") != std::string::npos);
  CHECK(out.find("total_steps: 2") != std::string::npos);
  REQUIRE(fs::exists(dir / "t" / "final.ckpt"));

  const std::string manifest = (dir / "ds" / "d.manifest").string();
  CHECK(cli({"gen-data", "--kind", "tsp", "--count", "2", "--n", "6", "--out",
             (dir / "ds").string(), "--stem", "d"}) == 0);
  CHECK(cli({"solve", "--checkpoint", (dir / "t" / "final.ckpt").string(), "--dataset", manifest,
             "--K", "2", "--b", "4", "--greedy", "--out", (dir / "ev").string()}) == 0);
}

TEST_CASE("bench compares methods and rejects unknown ones") {
  const fs::path dir = tmp_dir("bench");
  const std::string manifest = (dir / "ds" / "b.manifest").string();
  CHECK(cli({"gen-data", "--kind", "tsp", "--count", "2", "--n", "6", "--seed", "2", "--out",
             (dir / "ds").string(), "--stem", "b"}) == 0);

  std::string out;
  CHECK(cli({"bench", "--dataset", manifest, "--methods", "moco,adam_theta,farthest_insertion",
             "--K", "2", "--b", "4", "--M", "1", "--seed", "3", "--out",
             (dir / "cmp").string()},
            &out) == 0);
  CHECK(fs::exists(dir / "cmp" / "comparison.csv"));
  CHECK(fs::exists(dir / "cmp" / "trajectory_moco.csv"));
  CHECK(fs::exists(dir / "cmp" / "trajectory_adam_theta.csv"));
  CHECK(fs::exists(dir / "cmp" / "anytime_curves.svg"));
  const std::string table = read_file(dir / "cmp" / "comparison.csv");
  CHECK(table.find("moco,") != std::string::npos);
  CHECK(table.find("adam_theta,") != std::string::npos);
  CHECK(table.find("farthest_insertion,") != std::string::npos);

  CHECK(cli({"bench", "--dataset", manifest, "--methods", "simulated_annealing", "--out",
             (dir / "cmp2").string()}) == 2);

  // farthest insertion has no mis analogue here.
  CHECK(cli({"gen-data", "--kind", "mis", "--count", "2", "--n-min", "6", "--n-max", "8", "--out",
             (dir / "dsm").string(), "--stem", "m"}) == 0);
  CHECK(cli({"bench", "--dataset", (dir / "dsm" / "m.manifest").string(), "--methods",
             "farthest_insertion", "--out", (dir / "cmp3").string()}) == 2);
}

TEST_CASE("missing files and malformed arguments map to distinct exit codes") {
  const fs::path dir = tmp_dir("errors");
  CHECK(cli({"inspect", (dir / "nope.ckpt").string()}) == 3);
  CHECK(cli({"solve", "--checkpoint", (dir / "nope.ckpt").string(), "--dataset",
             (dir / "nope.manifest").string()}) == 3);
  CHECK(cli({"gen-data", "--kind", "hypergraph", "--count", "1"}) == 2);
  CHECK(cli({"definitely-not-a-command"}) == 2);
  CHECK(cli({}) == 2);  // a subcommand is required
  std::string help;
  CHECK(cli({"--help"}, &help) == 0);
  CHECK(help.find("gen-data") != std::string::npos);
}

TEST_CASE("inspection covers checkpoints, heatmaps and single instances") {
  const fs::path dir = tmp_dir("inspect");
  const std::string ckpt = (dir / "n.ckpt").string();
  save_bundle(make_default_bundle(ProblemKind::mis, 1, InitScheme::uniform_fan_in, 8, 1), ckpt,
              {{"global_step", "12"}});
  std::string out;
  CHECK(cli({"inspect", ckpt}, &out) == 0);
  CHECK(out.find("phase: pair") != std::string::npos);
  CHECK(out.find("meta.global_step: 12") != std::string::npos);
  CHECK(out.find("feature") != std::string::npos);

  CHECK(cli({"gen-data", "--kind", "mis", "--count", "1", "--n-min", "5", "--n-max", "5",
             "--out", dir.string(), "--stem", "one"}) == 0);
  std::string inst_out;
  CHECK(cli({"inspect", (dir / "one_0000.gr").string()}, &inst_out) == 0);
  CHECK(inst_out.find("kind: mis") != std::string::npos);
  CHECK(inst_out.find("nodes: 5") != std::string::npos);
}
