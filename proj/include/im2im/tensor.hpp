#ifndef IM2IM_TENSOR_HPP
#define IM2IM_TENSOR_HPP

// Dense NCHW-convention tensors with an optional gradient slot, plus the
// seeded counter RNG every stochastic component of the library draws from.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace im2im {

// Domain error with a machine-parseable kind ("shape", "parse", "io", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline void check_shape_valid(const Shape& s) {
  if (s.empty()) throw Error("shape", "empty shape list rejected");
  for (int64_t d : s)
    if (d < 1) throw Error("shape", "non-positive dimension in " + shape_str(s));
}

// Counter-based RNG (splitmix64 over seed + position). The (seed, position)
// pair fully determines the stream, which makes snapshots in checkpoints a
// two-integer affair and restores O(1).
class RngState {
 public:
  RngState() : RngState(0) {}
  explicit RngState(uint64_t seed, uint64_t position = 0)
      : seed_(seed), position_(position) {}

  uint64_t seed() const { return seed_; }
  uint64_t position() const { return position_; }

  uint64_t next_u64() {
    ++position_;
    uint64_t z = seed_ + position_ * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; used where log() of the draw is taken.
  double uniform_open() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Box-Muller; consumes exactly two draws per sample (no cached spare, so
  // the stream position alone describes the state).
  double normal(double mean, double stddev) {
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Decorrelated child stream, e.g. for per-purpose substreams of a run seed.
  static RngState derive(uint64_t seed, uint64_t stream) {
    uint64_t z = (seed ^ 0x6A09E667F3BCC909ULL) + stream * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return RngState(z ^ (z >> 31));
  }

 private:
  uint64_t seed_;
  uint64_t position_;
};

template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor is float or double");

 public:
  struct Payload {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // empty until a gradient is first accumulated
    bool requires_grad = false;
  };

  Tensor() = default;

  static Tensor zeros(const Shape& s) { return filled(s, T(0)); }
  static Tensor ones(const Shape& s) { return filled(s, T(1)); }

  static Tensor filled(const Shape& s, T v) {
    check_shape_valid(s);
    Tensor t;
    t.p_ = std::make_shared<Payload>();
    t.p_->shape = s;
    t.p_->values.assign(size_t(shape_numel(s)), v);
    return t;
  }

  static Tensor from_values(const Shape& s, std::vector<T> v) {
    check_shape_valid(s);
    if (int64_t(v.size()) != shape_numel(s))
      throw Error("shape", "value count " + std::to_string(v.size()) +
                               " does not match shape " + shape_str(s));
    Tensor t;
    t.p_ = std::make_shared<Payload>();
    t.p_->shape = s;
    t.p_->values = std::move(v);
    return t;
  }

  static Tensor scalar(T v) { return filled({1}, v); }

  // I.i.d. Gaussian fill; deterministic given the rng state.
  static Tensor gaussian(const Shape& s, T mean, T stddev, RngState& rng) {
    if (!(stddev > T(0))) throw Error("value", "gaussian stddev must be > 0");
    Tensor t = zeros(s);
    for (T& x : t.p_->values) x = T(rng.normal(double(mean), double(stddev)));
    return t;
  }

  bool defined() const { return p_ != nullptr; }
  const Shape& shape() const { return p_->shape; }
  int64_t size() const { return int64_t(p_->values.size()); }
  int64_t dim(size_t i) const { return p_->shape.at(i); }
  size_t ndim() const { return p_->shape.size(); }

  std::vector<T>& values() { return p_->values; }
  const std::vector<T>& values() const { return p_->values; }
  T* data() { return p_->values.data(); }
  const T* data() const { return p_->values.data(); }

  T item() const {
    if (size() != 1) throw Error("shape", "item() on non-scalar tensor " + shape_str(shape()));
    return p_->values[0];
  }

  bool requires_grad() const { return p_->requires_grad; }
  void set_requires_grad(bool b) { p_->requires_grad = b; }

  bool has_grad() const { return !p_->grad.empty(); }

  // Gradient slot, allocated as zeros on first access.
  std::vector<T>& grad() {
    if (p_->grad.empty()) p_->grad.assign(p_->values.size(), T(0));
    return p_->grad;
  }
  const std::vector<T>& grad() const {
    return const_cast<Tensor*>(this)->grad();
  }

  void zero_grad() {
    if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), T(0));
  }

  // Same values, fresh storage, no graph participation.
  Tensor detach() const {
    Tensor t;
    t.p_ = std::make_shared<Payload>();
    t.p_->shape = p_->shape;
    t.p_->values = p_->values;
    return t;
  }

  Tensor clone() const { return detach(); }

  bool all_finite() const {
    for (T v : p_->values)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return p_->shape == o.p_->shape; }

  // NCHW element access for tests and small utilities; kernels index manually.
  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    const Shape& s = p_->shape;
    return p_->values[size_t(((n * s[1] + c) * s[2] + h) * s[3] + w)];
  }
  T at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return const_cast<Tensor*>(this)->at(n, c, h, w);
  }

  std::shared_ptr<Payload> payload() const { return p_; }

 private:
  std::shared_ptr<Payload> p_;
};

template <typename T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw Error("shape", std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

template <typename T>
inline void check_finite(const Tensor<T>& t, const std::string& context) {
  if (!t.all_finite()) throw Error("numeric", "non-finite values in " + context);
}

}  // namespace im2im

#endif  // IM2IM_TENSOR_HPP
