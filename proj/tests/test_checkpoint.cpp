#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "moco/checkpoint.hpp"
#include "moco/errors.hpp"
#include "moco/gnn.hpp"

using namespace moco;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "moco_ckpt_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool same_mat(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("single-network checkpoints round trip bitwise") {
  const GnnParams p = init_params(3, ProblemKind::tsp, GnnPhase::update,
                                  InitScheme::uniform_fan_in, 16, 2);
  const auto path = tmp("single.ckpt").string();
  CheckpointMeta meta{{"note", "hello"}, {"global_step", "42"}};
  save_params(p, path, meta);

  CheckpointMeta back_meta;
  const GnnParams back = load_params(path, &back_meta);
  CHECK(back.kind == p.kind);
  CHECK(back.phase == p.phase);
  CHECK(back.d_hidden == p.d_hidden);
  CHECK(back.n_blocks == p.n_blocks);
  CHECK(back_meta == meta);
  REQUIRE(back.arrays.size() == p.arrays.size());
  for (std::size_t i = 0; i < p.arrays.size(); ++i) {
    CHECK(back.arrays[i].name == p.arrays[i].name);
    CHECK(back.arrays[i].m == p.arrays[i].m);
  }
}

TEST_CASE("paired checkpoints round trip both networks") {
  const CheckpointBundle bundle = make_default_bundle(ProblemKind::mis, 9,
                                                      InitScheme::uniform_fan_in, 8, 1);
  const auto path = tmp("pair.ckpt").string();
  save_bundle(bundle, path, {{"master_seed", "9"}});
  CheckpointMeta meta;
  const CheckpointBundle back = load_bundle(path, &meta);
  CHECK(meta.at("master_seed") == "9");
  CHECK(same_vec(flatten_params(back.init), flatten_params(bundle.init)));
  CHECK(same_vec(flatten_params(back.update), flatten_params(bundle.update)));
  CHECK(back.init.phase == GnnPhase::init);
  CHECK(back.update.phase == GnnPhase::update);

  // A paired file is not loadable as a single network, and vice versa.
  CHECK_THROWS_AS(load_params(path), CheckpointError);
  const auto single = tmp("single2.ckpt").string();
  save_params(bundle.init, single);
  CHECK_THROWS_AS(load_bundle(single), CheckpointError);
}

TEST_CASE("default bundles are deterministic per seed and kind") {
  const CheckpointBundle a = make_default_bundle(ProblemKind::tsp, 5, InitScheme::uniform_fan_in,
                                                 16, 2);
  const CheckpointBundle b = make_default_bundle(ProblemKind::tsp, 5, InitScheme::uniform_fan_in,
                                                 16, 2);
  const CheckpointBundle c = make_default_bundle(ProblemKind::tsp, 6, InitScheme::uniform_fan_in,
                                                 16, 2);
  CHECK(same_vec(flatten_params(a.init), flatten_params(b.init)));
  CHECK(same_vec(flatten_params(a.update), flatten_params(b.update)));
  CHECK_FALSE(same_vec(flatten_params(a.init), flatten_params(c.init)));
  // Init and update nets draw from different streams.
  CHECK_FALSE(same_mat(a.init.array("decode_theta_W"), a.update.array("decode_theta_W")));
}

TEST_CASE("truncated checkpoints are rejected") {
  const GnnParams p = init_params(1, ProblemKind::mis, GnnPhase::init, InitScheme::uniform_fan_in,
                                  8, 1);
  const auto path = tmp("trunc.ckpt");
  save_params(p, path.string());
  auto bytes = read_bytes(path);
  bytes.resize(bytes.size() / 2);
  write_bytes(path, bytes);
  CHECK_THROWS_AS(load_params(path.string()), CheckpointError);
}

TEST_CASE("corrupted payload bytes fail the checksum") {
  const GnnParams p = init_params(2, ProblemKind::mis, GnnPhase::init, InitScheme::uniform_fan_in,
                                  8, 1);
  const auto path = tmp("corrupt.ckpt");
  save_params(p, path.string());
  auto bytes = read_bytes(path);
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
  write_bytes(path, bytes);
  try {
    load_params(path.string());
    FAIL("expected a checkpoint error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
}

TEST_CASE("alien files are rejected by the magic header") {
  const auto path = tmp("alien.ckpt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "GIF89a definitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_params(path.string()), CheckpointError);
  CHECK_THROWS_AS(load_bundle(path.string()), CheckpointError);
}

TEST_CASE("missing checkpoint files surface as data errors") {
  CHECK_THROWS_AS(load_params("/nonexistent/x.ckpt"), DataError);
}

TEST_CASE("non-finite parameters are rejected on load") {
  GnnParams p = init_params(4, ProblemKind::mis, GnnPhase::init, InitScheme::uniform_fan_in, 8, 1);
  p.array("decode_theta_W")(0, 0) = std::numeric_limits<float>::quiet_NaN();
  const auto path = tmp("nan.ckpt").string();
  save_params(p, path);
  CHECK_THROWS_AS(load_params(path), CheckpointError);
}

TEST_CASE("checkpoint manifests summarise the stored arrays") {
  const CheckpointBundle bundle = make_default_bundle(ProblemKind::tsp, 1,
                                                      InitScheme::uniform_fan_in, 8, 1);
  const auto path = tmp("manifest.ckpt").string();
  save_bundle(bundle, path, {{"global_step", "7"}});
  const std::string m = checkpoint_manifest(path);
  CHECK(m.find("kind: tsp") != std::string::npos);
  CHECK(m.find("phase: pair") != std::string::npos);
  CHECK(m.find("init.embed_edge_W") != std::string::npos);
  CHECK(m.find("update.decode_alpha_W") != std::string::npos);
  CHECK(m.find("meta.global_step: 7") != std::string::npos);
}

TEST_CASE("meta keys survive sorted and intact") {
  const GnnParams p = init_params(6, ProblemKind::tsp, GnnPhase::init, InitScheme::zeros, 8, 1);
  const auto path = tmp("meta.ckpt").string();
  save_params(p, path, {{"zeta", "last"}, {"alpha", "first"}, {"k v", "with space"}});
  CheckpointMeta meta;
  load_params(path, &meta);
  CHECK(meta.size() == 3);
  CHECK(meta.at("zeta") == "last");
  CHECK(meta.at("k v") == "with space");
}
