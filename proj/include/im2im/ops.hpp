#ifndef IM2IM_OPS_HPP
#define IM2IM_OPS_HPP

// Differentiable elementwise and reduction ops. Binary ops require identical
// shapes; the only broadcasting anywhere is tensor-by-scalar. Reductions
// accumulate in double regardless of the tensor scalar type so that analytic
// identities hold to tight tolerances even in 32-bit mode.

#include <cmath>

#include "im2im/tape.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (detail::track(a, b)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), bp = b.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      if (ap->requires_grad) {
        auto* g = detail::grad_of<T>(ap);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i];
      }
      if (bp->requires_grad) {
        auto* g = detail::grad_of<T>(bp);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (detail::track(a, b)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), bp = b.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      if (ap->requires_grad) {
        auto* g = detail::grad_of<T>(ap);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i];
      }
      if (bp->requires_grad) {
        auto* g = detail::grad_of<T>(bp);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] -= op->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (detail::track(a, b)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), bp = b.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      if (ap->requires_grad) {
        auto* g = detail::grad_of<T>(ap);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i] * bp->values[i];
      }
      if (bp->requires_grad) {
        auto* g = detail::grad_of<T>(bp);
        for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i] * ap->values[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scalar_mul(const Tensor<T>& a, T s) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * s;
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload(), s] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i] * s;
    });
  }
  return out;
}

template <typename T>
Tensor<T> scalar_add(const Tensor<T>& a, T s) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + s;
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return scalar_mul(a, T(-1));
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) {
    if (!(a.data()[i] > T(0)))
      throw Error("value", "log of non-positive value " + std::to_string(double(a.data()[i])));
    out.data()[i] = std::log(a.data()[i]);
  }
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      for (size_t i = 0; i < op->grad.size(); ++i) (*g)[i] += op->grad[i] / ap->values[i];
    });
  }
  return out;
}

// The abs kink at 0 takes the right branch: d|x|/dx = +1 at x == 0.
template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) {
    detail::note_kink_distance(a.data()[i]);
    out.data()[i] = std::fabs(a.data()[i]);
  }
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      for (size_t i = 0; i < op->grad.size(); ++i)
        (*g)[i] += ap->values[i] < T(0) ? -op->grad[i] : op->grad[i];
    });
  }
  return out;
}

// Pass-through gradient inside [lo, hi] (inclusive), zero outside.
template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) {
    T v = a.data()[i];
    out.data()[i] = v < lo ? lo : (v > hi ? hi : v);
  }
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload(), lo, hi] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      for (size_t i = 0; i < op->grad.size(); ++i) {
        T v = ap->values[i];
        if (v >= lo && v <= hi) (*g)[i] += op->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a) {
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += double(a.data()[i]);
  Tensor<T> out = Tensor<T>::scalar(T(acc));
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload()] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      const T go = op->grad[0];
      for (size_t i = 0; i < g->size(); ++i) (*g)[i] += go;
    });
  }
  return out;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a) {
  if (a.size() == 0) throw Error("shape", "reduce_mean of empty tensor");
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += double(a.data()[i]);
  const int64_t n = a.size();
  Tensor<T> out = Tensor<T>::scalar(T(acc / double(n)));
  if (detail::track(a)) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), op = out.payload(), n] {
      if (op->grad.empty()) return;
      auto* g = detail::grad_of<T>(ap);
      const T go = op->grad[0] / T(n);
      for (size_t i = 0; i < g->size(); ++i) (*g)[i] += go;
    });
  }
  return out;
}

}  // namespace im2im

#endif  // IM2IM_OPS_HPP
