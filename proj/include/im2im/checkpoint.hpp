#ifndef IM2IM_CHECKPOINT_HPP
#define IM2IM_CHECKPOINT_HPP

// Versioned binary checkpoint container. Byte layout (all little-endian):
//   magic "I2IC" | u32 version | u64 step
//   u64 config_len | config bytes (UTF-8 key=value snapshot)
//   u32 n_rngs     | { u64 name_len, name, u64 seed, u64 position }*
//   u32 n_counters | { u64 name_len, name, u64 value }*
//   u32 n_tensors  | { u64 name_len, name, u32 ndim, i64 dims[], f32 raw bits }*
// Save -> load -> save is byte-identical; a resumed run continues the
// uninterrupted trajectory bit for bit.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "im2im/tensor.hpp"
#include "im2im/train.hpp"

namespace im2im {

struct RngSnapshot {
  std::string name;
  uint64_t seed = 0;
  uint64_t position = 0;
};

struct Checkpoint {
  static constexpr uint32_t kVersion = 1;
  uint32_t version = kVersion;
  uint64_t step = 0;
  std::string config_text;
  std::vector<RngSnapshot> rngs;
  std::vector<std::pair<std::string, uint64_t>> counters;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}
inline void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

struct ByteReader {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;

  void need(size_t k) const {
    if (pos + k > n) throw Error("io", "truncated checkpoint file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + size_t(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[pos + size_t(i)]) << (8 * i);
    pos += 8;
    return v;
  }
  std::string str() {
    const uint64_t len = u64();
    need(size_t(len));
    std::string s(reinterpret_cast<const char*>(p + pos), size_t(len));
    pos += size_t(len);
    return s;
  }
};

}  // namespace detail

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string out;
  out += "I2IC";
  detail::put_u32(out, c.version);
  detail::put_u64(out, c.step);
  detail::put_str(out, c.config_text);

  detail::put_u32(out, uint32_t(c.rngs.size()));
  for (const auto& r : c.rngs) {
    detail::put_str(out, r.name);
    detail::put_u64(out, r.seed);
    detail::put_u64(out, r.position);
  }
  detail::put_u32(out, uint32_t(c.counters.size()));
  for (const auto& [name, v] : c.counters) {
    detail::put_str(out, name);
    detail::put_u64(out, v);
  }

  std::set<std::string> seen;
  detail::put_u32(out, uint32_t(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    if (!seen.insert(name).second)
      throw Error("checkpoint", "duplicate tensor name '" + name + "'");
    detail::put_str(out, name);
    detail::put_u32(out, uint32_t(t.ndim()));
    for (size_t i = 0; i < t.ndim(); ++i) detail::put_u64(out, uint64_t(t.dim(i)));
    for (int64_t i = 0; i < t.size(); ++i) {
      const uint32_t bits = std::bit_cast<uint32_t>(t.data()[i]);
      detail::put_u32(out, bits);
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open checkpoint '" + path + "' for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw Error("io", "short write to checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open checkpoint '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  detail::ByteReader r{bytes.data(), bytes.size()};

  r.need(4);
  if (std::memcmp(bytes.data(), "I2IC", 4) != 0)
    throw Error("checkpoint", "'" + path + "' is not a checkpoint file (bad magic)");
  r.pos = 4;

  Checkpoint c;
  c.version = r.u32();
  if (c.version != Checkpoint::kVersion)
    throw Error("version", "checkpoint version " + std::to_string(c.version) +
                               " unsupported (expected " + std::to_string(Checkpoint::kVersion) +
                               ")");
  c.step = r.u64();
  c.config_text = r.str();

  const uint32_t n_rngs = r.u32();
  std::set<std::string> seen;
  for (uint32_t i = 0; i < n_rngs; ++i) {
    RngSnapshot s;
    s.name = r.str();
    s.seed = r.u64();
    s.position = r.u64();
    c.rngs.push_back(std::move(s));
  }
  const uint32_t n_counters = r.u32();
  for (uint32_t i = 0; i < n_counters; ++i) {
    std::string name = r.str();
    c.counters.emplace_back(std::move(name), r.u64());
  }
  const uint32_t n_tensors = r.u32();
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    if (!seen.insert(name).second)
      throw Error("checkpoint", "duplicate tensor name '" + name + "' in '" + path + "'");
    const uint32_t ndim = r.u32();
    Shape shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(int64_t(r.u64()));
    check_shape_valid(shape);
    std::vector<float> vals(size_t(shape_numel(shape)));
    for (auto& v : vals) v = std::bit_cast<float>(r.u32());
    c.tensors.emplace_back(std::move(name), Tensor<float>::from_values(shape, std::move(vals)));
  }
  if (r.pos != bytes.size()) throw Error("io", "trailing bytes in checkpoint '" + path + "'");
  return c;
}

// ---------------------------------------------------------------------------
// Trainer snapshot / restore

inline Checkpoint make_checkpoint(Trainer<float>& t, const std::string& config_text) {
  Checkpoint c;
  c.step = t.step();
  c.config_text = config_text;
  c.rngs.push_back({"train", t.train_rng().seed(), t.train_rng().position()});
  c.counters.emplace_back("opt_g.t", t.opt_g().t());

  for (auto& [name, p] : t.generator().named_parameters()) c.tensors.emplace_back(name, p.clone());
  auto add_moments = [&c](Adam<float>& opt, const std::string& prefix) {
    auto& params = opt.params();
    for (size_t i = 0; i < params.size(); ++i) {
      c.tensors.emplace_back(prefix + ".m." + params[i].first, opt.first_moments()[i].clone());
      c.tensors.emplace_back(prefix + ".v." + params[i].first, opt.second_moments()[i].clone());
    }
  };
  add_moments(t.opt_g(), "opt_g");
  if (t.discriminator()) {
    for (auto& [name, p] : t.discriminator()->named_parameters())
      c.tensors.emplace_back(name, p.clone());
    c.counters.emplace_back("opt_d.t", t.opt_d()->t());
    add_moments(*t.opt_d(), "opt_d");
  }
  return c;
}

inline void restore_trainer(Trainer<float>& t, const Checkpoint& c) {
  auto restore_named = [&c](NamedTensors<float>& params, const std::string& prefix) {
    for (auto& [name, p] : params) {
      const Tensor<float>* src = c.find(prefix + name);
      if (!src) throw Error("checkpoint", "missing tensor '" + prefix + name + "'");
      if (src->shape() != p.shape())
        throw Error("checkpoint", "shape mismatch for '" + prefix + name + "': file " +
                                      shape_str(src->shape()) + " vs model " +
                                      shape_str(p.shape()));
      p.values() = src->values();
    }
  };
  auto g_params = t.generator().named_parameters();
  restore_named(g_params, "");

  auto restore_opt = [&](Adam<float>& opt, const std::string& prefix) {
    auto& params = opt.params();
    for (size_t i = 0; i < params.size(); ++i) {
      const Tensor<float>* m = c.find(prefix + ".m." + params[i].first);
      const Tensor<float>* v = c.find(prefix + ".v." + params[i].first);
      if (!m || !v)
        throw Error("checkpoint", "missing optimizer state for '" + params[i].first + "'");
      opt.first_moments()[i].values() = m->values();
      opt.second_moments()[i].values() = v->values();
    }
    for (const auto& [name, value] : c.counters)
      if (name == prefix + ".t") opt.set_t(value);
  };
  restore_opt(t.opt_g(), "opt_g");
  if (t.discriminator()) {
    auto d_params = t.discriminator()->named_parameters();
    restore_named(d_params, "");
    if (!t.opt_d()) throw Error("checkpoint", "model has no discriminator optimizer");
    restore_opt(*t.opt_d(), "opt_d");
  }

  for (const auto& r : c.rngs)
    if (r.name == "train") t.train_rng() = RngState(r.seed, r.position);
  t.set_step(c.step);
}

}  // namespace im2im

#endif  // IM2IM_CHECKPOINT_HPP
