#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "moco/errors.hpp"
#include "moco/instance.hpp"
#include "moco/instance_io.hpp"

using namespace moco;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "moco_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("format_double round trips doubles exactly") {
  for (const double v : {0.0, 1.0, -1.5, 0.1, 3.141592653589793, 1e-300, 12345.678901234567}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("tsp file round trip preserves the instance") {
  const ProblemInstance inst = generate_uniform_tsp(9, 4242);
  const fs::path path = temp_dir() / "round.tsp";
  save_instance(inst, path.string());
  const ProblemInstance back = load_instance(path.string());
  CHECK(back == inst);
}

TEST_CASE("tsp file round trip preserves knn sparsification") {
  const ProblemInstance inst = sparsify_knn(generate_uniform_tsp(11, 5), 3);
  const fs::path path = temp_dir() / "sparse.tsp";
  save_instance(inst, path.string());
  const ProblemInstance back = load_instance(path.string());
  CHECK(back.knn == 3);
  CHECK(back == inst);
}

TEST_CASE("mis file round trip preserves the instance") {
  const ProblemInstance inst = generate_er_graph(14, 14, 0.25, 8);
  const fs::path path = temp_dir() / "round.col";
  save_instance(inst, path.string());
  const ProblemInstance back = load_instance(path.string());
  CHECK(back == inst);
}

TEST_CASE("mis files store each undirected edge once") {
  const ProblemInstance inst = generate_er_graph(10, 10, 0.4, 3);
  const fs::path path = temp_dir() / "once.col";
  save_instance(inst, path.string());
  const std::string text = slurp(path);
  std::int64_t e_lines = 0;
  for (std::size_t pos = 0; (pos = text.find("\ne ", pos)) != std::string::npos; ++pos) ++e_lines;
  CHECK(e_lines == inst.num_edges() / 2);
}

TEST_CASE("malformed tsp files raise parse errors naming the line") {
  const fs::path path = temp_dir() / "bad.tsp";
  {
    std::ofstream f(path);
    f << "NAME : x\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\n"
      << "NODE_COORD_SECTION\n1 0.0 0.0\n2 oops 1.0\n3 1.0 1.0\nEOF\n";
  }
  try {
    load_instance(path.string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
    CHECK(std::string(e.what()).find(":7") != std::string::npos);
  }
}

TEST_CASE("truncated node sections are rejected") {
  const fs::path path = temp_dir() / "short.tsp";
  {
    std::ofstream f(path);
    f << "NAME : x\nTYPE : TSP\nDIMENSION : 5\nEDGE_WEIGHT_TYPE : EUC_2D\n"
      << "NODE_COORD_SECTION\n1 0.0 0.0\n2 0.5 1.0\nEOF\n";
  }
  CHECK_THROWS_AS(load_instance(path.string()), ParseError);
}

TEST_CASE("mis edge count must match the header") {
  const fs::path path = temp_dir() / "short.col";
  {
    std::ofstream f(path);
    f << "p edge 4 3\ne 1 2\ne 2 3\n";
  }
  CHECK_THROWS_AS(load_instance(path.string()), ParseError);
}

TEST_CASE("dataset save/load round trips all instances") {
  std::vector<ProblemInstance> set;
  for (int i = 0; i < 4; ++i) set.push_back(generate_uniform_tsp(7, 100 + static_cast<unsigned>(i)));
  const fs::path dir = temp_dir() / "ds";
  const std::string manifest = save_dataset(set, dir.string(), "tiny", "demo header");
  CHECK(slurp(manifest).find("# demo header") != std::string::npos);

  const std::vector<ProblemInstance> back = load_dataset(manifest);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(back[i] == set[i]);
}

TEST_CASE("mixed-kind datasets are rejected") {
  const fs::path dir = temp_dir() / "mixed";
  fs::create_directories(dir);
  save_instance(generate_uniform_tsp(5, 1), (dir / "a_0000.tsp").string());
  save_instance(generate_er_graph(5, 5, 0.5, 1), (dir / "a_0001.col").string());
  {
    std::ofstream f(dir / "a.manifest");
    f << "moco-dataset tsp 2\na_0000.tsp\na_0001.col\n";
  }
  CHECK_THROWS_AS(load_dataset((dir / "a.manifest").string()), DataError);
}

TEST_CASE("manifest count mismatches are rejected") {
  const fs::path dir = temp_dir() / "count";
  fs::create_directories(dir);
  save_instance(generate_uniform_tsp(5, 1), (dir / "b_0000.tsp").string());
  {
    std::ofstream f(dir / "b.manifest");
    f << "moco-dataset tsp 2\nb_0000.tsp\n";
  }
  CHECK_THROWS_AS(manifest_entries((dir / "b.manifest").string()), DataError);
}

TEST_CASE("missing files surface as data errors") {
  CHECK_THROWS_AS(load_instance("/nonexistent/nowhere.tsp"), DataError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.manifest"), DataError);
}
