#pragma once

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "brepmatch/errors.hpp"
#include "brepmatch/features.hpp"
#include "brepmatch/rng.hpp"

namespace brepmatch {

struct ModelConfig {
  int width = 64;
  int encoder_layers = 6;
  int gat_layers = 4;
  int heads = 8;
  int mlp_hidden = 64;
  int edge_types = 5;

  nlohmann::json to_json() const {
    return {{"width", width}, {"encoder_layers", encoder_layers}, {"gat_layers", gat_layers},
            {"heads", heads}, {"mlp_hidden", mlp_hidden}, {"edge_types", edge_types}};
  }
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.width = j.at("width").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.gat_layers = j.at("gat_layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.edge_types = j.at("edge_types").get<int>();
    return c;
  }
  bool operator==(const ModelConfig&) const = default;
};

// Every learnable tensor, addressed by name, stored in a fixed order.
//
// encoder layer l (prefix "enc<l>."), up sweep then down sweep:
//   up.v  [in_v -> w]           up.e  [in_e + w -> w]
//   up.l  [in_l + w -> w]       up.f  [in_f + w -> w]
//   down.f [w -> w]             down.l [2w -> w]
//   down.e [2w -> w]            down.v [2w -> w]
//   each map X has X.w (rows = input width) and X.b (1 x w)
// attention layer l ("gat<l>."): wq, wk, wv, wo (w x w), bo (1 x w),
//   aq, ak, at (heads x w/heads), types (edge_types x w)
// scorer ("mlp."): w1o, w1u (w x hidden), b1 (1 x hidden), w2 (hidden x 1), b2 (1 x 1)
struct ModelParams {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  std::size_t index_of(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) throw ShapeError("no parameter '" + name + "'");
    return it->second;
  }
  const Matrix& at(const std::string& name) const { return tensors[index_of(name)]; }
  Matrix& at(const std::string& name) { return tensors[index_of(name)]; }

  void add(const std::string& name, Matrix m) {
    lookup_[name] = names.size();
    names.push_back(name);
    tensors.push_back(std::move(m));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }

  ModelParams zeros_like() const {
    ModelParams z;
    z.config = config;
    z.seed = seed;
    for (std::size_t i = 0; i < names.size(); ++i) z.add(names[i], Matrix::Zero(tensors[i].rows(), tensors[i].cols()));
    return z;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      if (!t.allFinite()) return false;
    return true;
  }

  bool operator==(const ModelParams& o) const {
    if (!(config == o.config) || seed != o.seed || names != o.names) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (tensors[i].rows() != o.tensors[i].rows() || tensors[i].cols() != o.tensors[i].cols() ||
          std::memcmp(tensors[i].data(), o.tensors[i].data(), sizeof(double) * static_cast<std::size_t>(tensors[i].size())) != 0)
        return false;
    return true;
  }

private:
  std::map<std::string, std::size_t> lookup_;
};

// Shapes in canonical order. With `rng`, weights are Glorot-uniform and the
// attention vectors and type table small uniform; biases start at zero.
// Without it every tensor is zero.
inline ModelParams make_params(const ModelConfig& c, Rng* rng, std::uint64_t seed = 0) {
  ModelParams p;
  p.config = c;
  p.seed = seed;
  const int w = c.width;
  auto glorot = [&](int rows, int cols) {
    Matrix m = Matrix::Zero(rows, cols);
    if (rng) {
      const double a = std::sqrt(6.0 / (rows + cols));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform(-a, a);
    }
    return m;
  };
  auto small = [&](int rows, int cols, double a) {
    Matrix m = Matrix::Zero(rows, cols);
    if (rng)
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform(-a, a);
    return m;
  };
  auto linear = [&](const std::string& name, int in, int out) {
    p.add(name + ".w", glorot(in, out));
    p.add(name + ".b", Matrix::Zero(1, out));
  };
  for (int l = 0; l < c.encoder_layers; ++l) {
    const std::string pre = "enc" + std::to_string(l) + ".";
    const int in = l == 0 ? feat::kWidth : w;
    const int in_loop = l == 0 ? feat::kLoopWidth : w;
    linear(pre + "up.v", in, w);
    linear(pre + "up.e", in + w, w);
    linear(pre + "up.l", in_loop + w, w);
    linear(pre + "up.f", in + w, w);
    linear(pre + "down.f", w, w);
    linear(pre + "down.l", 2 * w, w);
    linear(pre + "down.e", 2 * w, w);
    linear(pre + "down.v", 2 * w, w);
  }
  const int dh = w / c.heads;
  for (int l = 0; l < c.gat_layers; ++l) {
    const std::string pre = "gat" + std::to_string(l) + ".";
    p.add(pre + "wq", glorot(w, w));
    p.add(pre + "wk", glorot(w, w));
    p.add(pre + "wv", glorot(w, w));
    p.add(pre + "aq", small(c.heads, dh, 0.3));
    p.add(pre + "ak", small(c.heads, dh, 0.3));
    p.add(pre + "at", small(c.heads, dh, 0.3));
    p.add(pre + "types", small(c.edge_types, w, 0.1));
    p.add(pre + "wo", glorot(w, w));
    p.add(pre + "bo", Matrix::Zero(1, w));
  }
  p.add("mlp.w1o", glorot(w, c.mlp_hidden));
  p.add("mlp.w1u", glorot(w, c.mlp_hidden));
  p.add("mlp.b1", Matrix::Zero(1, c.mlp_hidden));
  p.add("mlp.w2", glorot(c.mlp_hidden, 1));
  p.add("mlp.b2", Matrix::Zero(1, 1));
  return p;
}

inline ModelParams init_params(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417));
  return make_params(c, &rng, seed);
}

inline ModelParams zero_params(const ModelConfig& c = {}) { return make_params(c, nullptr); }

// ---- checkpoint ------------------------------------------------------------
//
// "BRMCKPT1" | u32 format version | u32 header length | header JSON
// (config, seed) | u32 tensor count | per tensor: u32 name length, name,
// u32 rows, u32 cols, rows*cols f64 | u32 CRC-32 of everything before it.
// All integers and reals little-endian.

inline constexpr char kCheckpointMagic[8] = {'B', 'R', 'M', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

template <class T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > s_.size()) throw CheckpointError("truncated checkpoint");
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, s_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > s_.size()) throw CheckpointError("truncated checkpoint");
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }

private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const std::string& s, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(n)));
}

}  // namespace ckpt_detail

inline std::string serialize_params(const ModelParams& p) {
  using ckpt_detail::put;
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = nlohmann::json{{"config", p.config.to_json()}, {"seed", p.seed}}.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors.size()));
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.names[i].size()));
    out += p.names[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors[i].rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors[i].cols()));
    for (Eigen::Index k = 0; k < p.tensors[i].size(); ++k) put<double>(out, p.tensors[i].data()[k]);
  }
  put<std::uint32_t>(out, ckpt_detail::crc32_of(out, out.size()));
  return out;
}

inline ModelParams deserialize_params(const std::string& bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 4 || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw CheckpointError("not a checkpoint");
  ckpt_detail::Reader r(bytes);
  r.bytes(sizeof kCheckpointMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  {
    const std::size_t body = bytes.size() - 4;
    ckpt_detail::Reader tail(bytes);
    tail.bytes(body);
    if (tail.get<std::uint32_t>() != ckpt_detail::crc32_of(bytes, body)) throw CheckpointError("checksum mismatch");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(r.get<std::uint32_t>()));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad header: ") + e.what());
  }
  ModelParams p;
  try {
    p = make_params(ModelConfig::from_json(header.at("config")), nullptr, header.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad header: ") + e.what());
  }
  const auto n = r.get<std::uint32_t>();
  if (n != p.tensors.size()) throw CheckpointError("tensor count does not match the config");
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (name != p.names[i]) throw CheckpointError("unexpected tensor '" + name + "'");
    Matrix& t = p.tensors[i];
    if (rows != t.rows() || cols != t.cols()) throw CheckpointError("shape mismatch for '" + name + "'");
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = r.get<double>();
  }
  if (r.pos() != bytes.size() - 4) throw CheckpointError("trailing bytes");
  if (!p.all_finite()) throw CheckpointError("non-finite parameter");
  return p;
}

inline void save_params(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  const std::string s = serialize_params(p);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_params(ss.str());
}

}  // namespace brepmatch
