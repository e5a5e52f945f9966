#include "moco/checkpoint.hpp"

#include <zlib.h>

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

namespace {

static_assert(sizeof(float) == 4, "32-bit float storage assumed");

constexpr const char* kMagic = "moco-checkpoint v1";

std::uint32_t crc_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size())));
}

struct RawCheckpoint {
  std::string kind;
  std::string phase;
  int d_hidden = 0;
  int n_blocks = 0;
  CheckpointMeta meta;
  std::vector<NamedArray> arrays;
};

void save_raw(const RawCheckpoint& raw, const std::string& path) {
  std::ostringstream os;
  os << kMagic << "\n";
  os << "kind: " << raw.kind << "\n";
  os << "phase: " << raw.phase << "\n";
  os << "d_hidden: " << raw.d_hidden << "\n";
  os << "blocks: " << raw.n_blocks << "\n";
  for (const auto& [k, v] : raw.meta) os << "meta." << k << ": " << v << "\n";
  for (const auto& a : raw.arrays)
    os << "array: " << a.name << " " << a.m.rows() << " " << a.m.cols() << "\n";
  os << "data:\n";
  for (const auto& a : raw.arrays)
    os.write(reinterpret_cast<const char*>(a.m.data()),
             static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(a.m.size())));
  std::string body = os.str();
  const std::uint32_t crc = crc_of(body);
  char crc_le[4];
  for (int i = 0; i < 4; ++i) crc_le[i] = static_cast<char>((crc >> (8 * i)) & 0xff);
  body.append(crc_le, 4);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw DataError("write failed for '" + path + "'");
}

RawCheckpoint load_raw(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < std::strlen(kMagic) + 5)
    throw CheckpointError(path + ": truncated checkpoint");
  const std::string body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
              << (8 * i);
  if (crc_of(body) != stored) throw CheckpointError(path + ": checksum mismatch (corrupt file)");

  RawCheckpoint raw;
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto nl = body.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError(path + ": unterminated header");
    std::string line = body.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw CheckpointError(path + ": bad magic (not a checkpoint)");
  std::vector<ArrayShape> shapes;
  for (;;) {
    const std::string line = next_line();
    if (line == "data:") break;
    const auto colon = line.find(": ");
    if (colon == std::string::npos)
      throw CheckpointError(path + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, colon);
    const std::string val = line.substr(colon + 2);
    if (key == "kind") {
      raw.kind = val;
    } else if (key == "phase") {
      raw.phase = val;
    } else if (key == "d_hidden") {
      raw.d_hidden = std::stoi(val);
    } else if (key == "blocks") {
      raw.n_blocks = std::stoi(val);
    } else if (key.rfind("meta.", 0) == 0) {
      raw.meta[key.substr(5)] = val;
    } else if (key == "array") {
      std::istringstream is(val);
      ArrayShape s;
      if (!(is >> s.name >> s.rows >> s.cols) || s.rows < 0 || s.cols < 0)
        throw CheckpointError(path + ": malformed array line '" + line + "'");
      shapes.push_back(std::move(s));
    } else {
      throw CheckpointError(path + ": unknown header key '" + key + "'");
    }
  }
  for (const auto& s : shapes) {
    const std::size_t count = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    if (pos + count * sizeof(float) > body.size())
      throw CheckpointError(path + ": truncated array data for '" + s.name + "'");
    NamedArray a;
    a.name = s.name;
    a.m.resize(s.rows, s.cols);
    std::memcpy(a.m.data(), body.data() + pos, count * sizeof(float));
    pos += count * sizeof(float);
    raw.arrays.push_back(std::move(a));
  }
  if (pos != body.size()) throw CheckpointError(path + ": trailing bytes after array data");
  return raw;
}

// Shape-checks arrays against the manifest for the declared architecture.
GnnParams params_from_arrays(std::vector<NamedArray> arrays, ProblemKind kind, GnnPhase phase,
                             int d_hidden, int n_blocks, const std::string& path) {
  const auto expect = param_manifest(kind, phase, d_hidden, n_blocks);
  if (arrays.size() != expect.size())
    throw CheckpointError(path + ": expected " + std::to_string(expect.size()) + " arrays, found " +
                          std::to_string(arrays.size()));
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (arrays[i].name != expect[i].name || arrays[i].m.rows() != expect[i].rows ||
        arrays[i].m.cols() != expect[i].cols)
      throw CheckpointError(path + ": array '" + arrays[i].name + "' does not match manifest (" +
                            expect[i].name + " " + std::to_string(expect[i].rows) + "x" +
                            std::to_string(expect[i].cols) + ")");
    if (!arrays[i].m.allFinite())
      throw CheckpointError(path + ": array '" + arrays[i].name + "' contains non-finite values");
  }
  GnnParams p;
  p.kind = kind;
  p.phase = phase;
  p.d_hidden = d_hidden;
  p.n_blocks = n_blocks;
  p.arrays = std::move(arrays);
  return p;
}

}  // namespace

void save_params(const GnnParams& params, const std::string& path, const CheckpointMeta& meta) {
  RawCheckpoint raw;
  raw.kind = to_string(params.kind);
  raw.phase = to_string(params.phase);
  raw.d_hidden = params.d_hidden;
  raw.n_blocks = params.n_blocks;
  raw.meta = meta;
  raw.arrays = params.arrays;
  save_raw(raw, path);
}

GnnParams load_params(const std::string& path, CheckpointMeta* meta_out) {
  RawCheckpoint raw = load_raw(path);
  if (raw.phase == "pair")
    throw CheckpointError(path + ": this is a paired checkpoint; load it as a bundle");
  const ProblemKind kind = problem_kind_from_string(raw.kind);
  const GnnPhase phase = gnn_phase_from_string(raw.phase);
  if (meta_out != nullptr) *meta_out = raw.meta;
  return params_from_arrays(std::move(raw.arrays), kind, phase, raw.d_hidden, raw.n_blocks, path);
}

void save_bundle(const CheckpointBundle& bundle, const std::string& path,
                 const CheckpointMeta& meta) {
  if (bundle.init.kind != bundle.update.kind)
    throw ContractViolation("bundle networks disagree on problem kind");
  if (bundle.init.phase != GnnPhase::init || bundle.update.phase != GnnPhase::update)
    throw ContractViolation("bundle needs an init-phase and an update-phase network");
  RawCheckpoint raw;
  raw.kind = to_string(bundle.init.kind);
  raw.phase = "pair";
  raw.d_hidden = bundle.init.d_hidden;
  raw.n_blocks = bundle.init.n_blocks;
  raw.meta = meta;
  for (const auto& a : bundle.init.arrays) raw.arrays.push_back({"init." + a.name, a.m});
  for (const auto& a : bundle.update.arrays) raw.arrays.push_back({"update." + a.name, a.m});
  save_raw(raw, path);
}

CheckpointBundle load_bundle(const std::string& path, CheckpointMeta* meta_out) {
  RawCheckpoint raw = load_raw(path);
  if (raw.phase != "pair")
    throw CheckpointError(path + ": expected a paired checkpoint, found phase '" + raw.phase + "'");
  const ProblemKind kind = problem_kind_from_string(raw.kind);
  std::vector<NamedArray> init_arrays, update_arrays;
  for (auto& a : raw.arrays) {
    if (a.name.rfind("init.", 0) == 0) {
      init_arrays.push_back({a.name.substr(5), std::move(a.m)});
    } else if (a.name.rfind("update.", 0) == 0) {
      update_arrays.push_back({a.name.substr(7), std::move(a.m)});
    } else {
      throw CheckpointError(path + ": array '" + a.name + "' lacks an init./update. prefix");
    }
  }
  CheckpointBundle bundle;
  bundle.init = params_from_arrays(std::move(init_arrays), kind, GnnPhase::init, raw.d_hidden,
                                   raw.n_blocks, path);
  bundle.update = params_from_arrays(std::move(update_arrays), kind, GnnPhase::update,
                                     raw.d_hidden, raw.n_blocks, path);
  if (meta_out != nullptr) *meta_out = raw.meta;
  return bundle;
}

CheckpointBundle make_default_bundle(ProblemKind kind, std::uint64_t seed, InitScheme scheme,
                                     int d_hidden, int n_blocks) {
  CheckpointBundle bundle;
  bundle.init = init_params(mix64(seed, 1), kind, GnnPhase::init, scheme, d_hidden, n_blocks);
  bundle.update = init_params(mix64(seed, 2), kind, GnnPhase::update, scheme, d_hidden, n_blocks);
  return bundle;
}

std::string checkpoint_manifest(const std::string& path) {
  RawCheckpoint raw = load_raw(path);
  std::ostringstream os;
  os << "kind: " << raw.kind << "\nphase: " << raw.phase << "\nd_hidden: " << raw.d_hidden
     << "\nblocks: " << raw.n_blocks << "\n";
  for (const auto& [k, v] : raw.meta) os << "meta." << k << ": " << v << "\n";
  std::int64_t total = 0;
  for (const auto& a : raw.arrays) {
    os << a.name << " " << a.m.rows() << "x" << a.m.cols() << "\n";
    total += static_cast<std::int64_t>(a.m.size());
  }
  os << "total parameters: " << total << "\n";
  return os.str();
}

}  // namespace moco
