#ifndef IM2IM_GRADCHECK_HPP
#define IM2IM_GRADCHECK_HPP

// Central finite-difference gradient verification. The numeric side never
// touches the tape, so it stays an independent oracle for the backward rules.

#include <functional>
#include <string>
#include <vector>

#include "im2im/ops.hpp"
#include "im2im/tape.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

struct GradCheckOptions {
  double step = 1e-5;            // absolute central-difference step
  double tolerance = 1e-5;
  double kink_threshold = 1e-4;  // exclude coords that evaluated this close to a kink
  int64_t max_coords_per_tensor = 0;  // 0 = check every coordinate
  uint64_t coord_seed = 0x5eedULL;
  // Denominator floor as a fraction of the gradient's global magnitude; the
  // absolute-tolerance analog for coordinates whose gradient is near zero.
  // 32-bit evaluations need a larger floor than the 64-bit default because
  // the difference quotient carries float rounding noise.
  double denom_floor_frac = 1e-3;
};

struct GradCheckEntry {
  size_t tensor_index;
  int64_t coord;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  int64_t checked = 0;
  int64_t excluded_kinks = 0;
  std::vector<GradCheckEntry> entries;
  GradCheckEntry worst{};
};

// Checks d(f)/d(params[i]) for every supplied parameter tensor. `f` must be a
// deterministic scalar-valued closure over the parameters (freeze dropout by
// resetting the rng it draws from inside `f`). Relative error uses
// |a - n| / (max(|a|,|n|) + 0.001 * S) with S the largest gradient magnitude
// seen, so near-zero coordinates are judged against the gradient's own scale.
template <typename T>
GradCheckReport finite_diff_check_params(const std::function<Tensor<T>()>& f,
                                         std::vector<Tensor<T>> params,
                                         const GradCheckOptions& opt = {}) {
  GradCheckReport report;

  // Determinism gate: two untaped evaluations must agree bit-for-bit.
  double probe1, probe2;
  {
    NoGrad ng;
    probe1 = double(f().item());
    probe2 = double(f().item());
  }
  if (probe1 != probe2)
    throw Error("determinism", "finite_diff_check: f is non-deterministic across evaluations");

  // Analytic gradients.
  std::vector<bool> saved_rg;
  for (auto& p : params) {
    saved_rg.push_back(p.requires_grad());
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::vector<std::vector<T>> analytic;
  {
    Tape<T> tape;
    Tensor<T> loss = f();
    if (loss.size() != 1) throw Error("autodiff", "finite_diff_check: f must be scalar-valued");
    tape.backward(loss);
  }
  for (auto& p : params) analytic.push_back(p.grad());
  for (size_t i = 0; i < params.size(); ++i) {
    params[i].set_requires_grad(saved_rg[i]);
    params[i].zero_grad();
  }

  // Coordinate selection.
  RngState pick(opt.coord_seed);
  struct Coord {
    size_t t;
    int64_t i;
  };
  std::vector<Coord> coords;
  for (size_t t = 0; t < params.size(); ++t) {
    const int64_t n = params[t].size();
    if (opt.max_coords_per_tensor <= 0 || n <= opt.max_coords_per_tensor) {
      for (int64_t i = 0; i < n; ++i) coords.push_back({t, i});
    } else {
      for (int64_t j = 0; j < opt.max_coords_per_tensor; ++j)
        coords.push_back({t, int64_t(pick.uniform() * double(n))});
    }
  }

  // Numeric side.
  struct Raw {
    size_t t;
    int64_t i;
    double a, n;
  };
  std::vector<Raw> raws;
  double scale = 0.0;
  {
    NoGrad ng;
    for (const Coord& c : coords) {
      T* slot = params[c.t].data() + c.i;
      const T orig = *slot;
      const T h = T(opt.step);
      detail::KinkWatchScope watch;
      *slot = orig + h;
      const double fp = double(f().item());
      *slot = orig - h;
      const double fm = double(f().item());
      *slot = orig;
      if (watch.min_abs < opt.kink_threshold) {
        ++report.excluded_kinks;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * double(h));
      const double a = double(analytic[c.t][size_t(c.i)]);
      raws.push_back({c.t, c.i, a, numeric});
      scale = std::max({scale, std::fabs(a), std::fabs(numeric)});
    }
  }

  const double floor = opt.denom_floor_frac * scale + 1e-300;
  for (const Raw& r : raws) {
    const double rel = std::fabs(r.a - r.n) / (std::max(std::fabs(r.a), std::fabs(r.n)) + floor);
    GradCheckEntry e{r.t, r.i, r.a, r.n, rel};
    report.entries.push_back(e);
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = e;
    }
  }
  report.checked = int64_t(report.entries.size());
  report.pass = report.max_rel_error < opt.tolerance;
  return report;
}

// Single-tensor convenience form: checks d(f(t))/dt.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                                  const Tensor<T>& t, const GradCheckOptions& opt = {}) {
  Tensor<T> arg = t;
  return finite_diff_check_params<T>([&f, &arg] { return f(arg); }, {arg}, opt);
}

}  // namespace im2im

#endif  // IM2IM_GRADCHECK_HPP
