#ifndef IM2IM_TAPE_HPP
#define IM2IM_TAPE_HPP

// Define-by-run reverse-mode autodiff. Ops append a backward closure to the
// active tape while they execute; backward() replays the record in reverse.

#include <functional>
#include <utility>
#include <vector>

#include "im2im/tensor.hpp"

namespace im2im {

namespace detail {

inline thread_local int no_grad_depth = 0;

// Finite-difference checks exclude coordinates whose perturbed forward pass
// ran a kinked op (relu / leaky relu / abs) within some threshold of the
// kink; while a watch is installed those ops record the smallest
// |pre-kink value| they see.
inline thread_local double* kink_watch = nullptr;

template <typename V>
inline void note_kink_distance(V v) {
  if (kink_watch) {
    double a = v < V(0) ? -double(v) : double(v);
    if (a < *kink_watch) *kink_watch = a;
  }
}

struct KinkWatchScope {
  double min_abs = std::numeric_limits<double>::infinity();
  double* prev;
  KinkWatchScope() : prev(kink_watch) { kink_watch = &min_abs; }
  ~KinkWatchScope() { kink_watch = prev; }
  KinkWatchScope(const KinkWatchScope&) = delete;
  KinkWatchScope& operator=(const KinkWatchScope&) = delete;
};

}  // namespace detail

// Suspends recording for its lifetime (forward passes that will never be
// differentiated, optimizer updates, metric evaluation).
struct NoGrad {
  NoGrad() { ++detail::no_grad_depth; }
  ~NoGrad() { --detail::no_grad_depth; }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

template <typename T>
class Tape {
 public:
  Tape() : prev_(active_) { active_ = this; }
  ~Tape() { active_ = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_; }
  static bool recording() { return active_ != nullptr && detail::no_grad_depth == 0 && !active_->consumed_; }

  void record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
  }

  size_t op_count() const { return steps_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds d(loss)/d(loss) = 1 and replays every recorded op exactly once in
  // reverse order. The tape is consumed afterwards.
  void backward(Tensor<T> loss) {
    if (consumed_) throw Error("autodiff", "backward() called twice on a consumed tape");
    if (loss.size() != 1)
      throw Error("autodiff", "backward() requires a scalar loss, got " + shape_str(loss.shape()));
    loss.grad()[0] += T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
    consumed_ = true;
  }

 private:
  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
  Tape* prev_ = nullptr;
  inline static thread_local Tape* active_ = nullptr;
};

namespace detail {

template <typename T>
inline bool track(const Tensor<T>& a) {
  return Tape<T>::recording() && a.requires_grad();
}

template <typename T>
inline bool track(const Tensor<T>& a, const Tensor<T>& b) {
  return Tape<T>::recording() && (a.requires_grad() || b.requires_grad());
}

template <typename T>
inline std::vector<T>* grad_of(const std::shared_ptr<typename Tensor<T>::Payload>& p) {
  if (p->grad.empty()) p->grad.assign(p->values.size(), T(0));
  return &p->grad;
}

}  // namespace detail

}  // namespace im2im

#endif  // IM2IM_TAPE_HPP
