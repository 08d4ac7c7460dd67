#ifndef IM2IM_SYNTHETIC_HPP
#define IM2IM_SYNTHETIC_HPP

// Synthetic paired tasks: an outlines->filled-shapes translation problem and
// a bimodal flat-color task. Both are used by the scaled-down experiments
// and by the `synth` CLI subcommand for demo datasets.

#include <cmath>

#include "im2im/data.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

// The two modes of the bimodal color task: a warm and a cool saturated color
// whose midpoint is a desaturated gray, far from either mode in Lab space.
inline constexpr std::array<float, 3> kBimodalColorA{0.8f, -0.2f, -0.7f};
inline constexpr std::array<float, 3> kBimodalColorB{-0.7f, -0.1f, 0.8f};

namespace detail {
template <typename T>
void fill_plane(Tensor<T>& t, int64_t c, T v) {
  const int64_t HW = t.dim(1) * t.dim(2);
  std::fill_n(t.data() + c * HW, HW, v);
}
}  // namespace detail

// x: dark canvas with white shape outlines. y: the same shapes filled with
// flat colors on a muted background. Deterministic given the rng state.
template <typename T>
PairedSample<T> synth_shapes_pair(int64_t size, RngState& rng) {
  PairedSample<T> s;
  s.x = Tensor<T>::zeros({3, size, size});
  s.y = Tensor<T>::zeros({3, size, size});
  for (int64_t c = 0; c < 3; ++c) {
    detail::fill_plane(s.x, c, T(-1));
    detail::fill_plane(s.y, c, T(-0.5 + 0.2 * rng.uniform()));
  }

  auto put = [&](Tensor<T>& t, int64_t c, int64_t h, int64_t w, T v) {
    t.data()[(c * size + h) * size + w] = v;
  };
  const int n_shapes = 1 + int(rng.uniform() * 3);
  for (int k = 0; k < n_shapes; ++k) {
    const bool circle = rng.uniform() < 0.5;
    const T col[3] = {T(-0.8 + 1.7 * rng.uniform()), T(-0.8 + 1.7 * rng.uniform()),
                      T(-0.8 + 1.7 * rng.uniform())};
    if (circle) {
      const double cy = size * (0.2 + 0.6 * rng.uniform());
      const double cx = size * (0.2 + 0.6 * rng.uniform());
      const double r = size * (0.08 + 0.17 * rng.uniform());
      for (int64_t h = 0; h < size; ++h)
        for (int64_t w = 0; w < size; ++w) {
          const double d = std::hypot(double(h) - cy, double(w) - cx);
          if (d < r)
            for (int64_t c = 0; c < 3; ++c) put(s.y, c, h, w, col[c]);
          if (d >= r - 1.0 && d < r + 0.2)
            for (int64_t c = 0; c < 3; ++c) put(s.x, c, h, w, T(1));
        }
    } else {
      const int64_t h0 = int64_t(size * 0.1 + rng.uniform() * size * 0.5);
      const int64_t w0 = int64_t(size * 0.1 + rng.uniform() * size * 0.5);
      const int64_t hh = int64_t(size * 0.15 + rng.uniform() * size * 0.3);
      const int64_t ww = int64_t(size * 0.15 + rng.uniform() * size * 0.3);
      const int64_t h1 = std::min(size - 2, h0 + hh), w1 = std::min(size - 2, w0 + ww);
      for (int64_t h = h0; h <= h1; ++h)
        for (int64_t w = w0; w <= w1; ++w)
          for (int64_t c = 0; c < 3; ++c) put(s.y, c, h, w, col[c]);
      for (int64_t w = w0; w <= w1; ++w)
        for (int64_t c = 0; c < 3; ++c) {
          put(s.x, c, h0, w, T(1));
          put(s.x, c, h1, w, T(1));
        }
      for (int64_t h = h0; h <= h1; ++h)
        for (int64_t c = 0; c < 3; ++c) {
          put(s.x, c, h, w0, T(1));
          put(s.x, c, h, w1, T(1));
        }
    }
  }
  return s;
}

// Bimodal-color task: the input is always the same circle outline; the
// target fills the disc with color A or color B with probability 1/2 on a
// neutral background. The conditional distribution over fill colors is
// bimodal, which is what separates a median-seeking L1 regressor from an
// adversarially trained one. `fill_mask`, when given, receives 1 for disc
// pixels (the region whose color is bimodal).
template <typename T>
PairedSample<T> synth_bimodal_pair(int64_t size, RngState& rng,
                                   const std::array<T, 3>& color_a,
                                   const std::array<T, 3>& color_b,
                                   std::vector<char>* fill_mask = nullptr) {
  PairedSample<T> s;
  s.x = Tensor<T>::filled({3, size, size}, T(-1));
  s.y = Tensor<T>::filled({3, size, size}, T(-0.6));
  const auto& col = rng.uniform() < 0.5 ? color_a : color_b;
  const double c0 = double(size) / 2.0 - 0.5;
  const double r = 0.38 * double(size);
  if (fill_mask) fill_mask->assign(size_t(size * size), 0);
  for (int64_t h = 0; h < size; ++h)
    for (int64_t w = 0; w < size; ++w) {
      const double d = std::hypot(double(h) - c0, double(w) - c0);
      if (d < r) {
        for (int64_t c = 0; c < 3; ++c)
          s.y.data()[(c * size + h) * size + w] = col[size_t(c)];
        if (fill_mask) (*fill_mask)[size_t(h * size + w)] = 1;
      }
      if (d >= r - 1.2 && d < r + 0.4)
        for (int64_t c = 0; c < 3; ++c) s.x.data()[(c * size + h) * size + w] = T(1);
    }
  return s;
}

// Renders a pair as one side-by-side A|B image (the dataset convention).
template <typename T>
ImageU8 pair_to_side_by_side(const PairedSample<T>& s) {
  ImageU8 a = tensor_to_image(s.x), b = tensor_to_image(s.y);
  ImageU8 out;
  out.height = a.height;
  out.width = a.width * 2;
  out.channels = a.channels;
  out.pixels.resize(size_t(out.height * out.width * out.channels));
  for (int64_t h = 0; h < out.height; ++h)
    for (int64_t w = 0; w < a.width; ++w)
      for (int64_t c = 0; c < out.channels; ++c) {
        out.at(h, w, c) = a.at(h, w, c);
        out.at(h, w + a.width, c) = b.at(h, w, c);
      }
  return out;
}

}  // namespace im2im

#endif  // IM2IM_SYNTHETIC_HPP
