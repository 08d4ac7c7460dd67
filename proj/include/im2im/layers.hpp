#ifndef IM2IM_LAYERS_HPP
#define IM2IM_LAYERS_HPP

// Layer vocabulary: 4x4 (and 1x1) convolutions at stride 1 or 2, transposed
// convolutions, batch normalization over current-batch statistics, inverted
// dropout, leaky ReLU(0.2) / ReLU / tanh / sigmoid, channel concat/slice and
// zero padding. Every op registers its backward rule on the active tape.

#include <algorithm>
#include <cmath>
#include <vector>

#include "im2im/ops.hpp"
#include "im2im/tape.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

namespace detail {

inline int64_t div_ceil(int64_t a, int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

inline int64_t div_floor(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// y[n,co,ho,wo] (+)= bias[co] + sum_{ci,kh,kw} x[n,ci,ho*s-p+kh,wo*s-p+kw] * w[co,ci,kh,kw]
template <typename T>
void conv_gather(const T* x, int64_t N, int64_t Ci, int64_t H, int64_t W,
                 const T* w, int64_t Co, int64_t K, int64_t stride, int64_t pad,
                 const T* bias, T* y, int64_t Ho, int64_t Wo, bool accumulate) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      const T b0 = bias ? bias[co] : T(0);
      T* yrow = y + ((n * Co + co) * Ho) * Wo;
      for (int64_t ho = 0; ho < Ho; ++ho) {
        for (int64_t wo = 0; wo < Wo; ++wo) {
          const int64_t iw0 = wo * stride - pad;
          T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            const T* xch = x + ((n * Ci + ci) * H) * W;
            const T* wch = w + ((co * Ci + ci) * K) * K;
            for (int64_t kh = 0; kh < K; ++kh) {
              const int64_t ih = ho * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              const T* xr = xch + ih * W;
              const T* wr = wch + kh * K;
              if (K == 4 && iw0 >= 0 && iw0 + 3 < W) {
                a0 += xr[iw0] * wr[0];
                a1 += xr[iw0 + 1] * wr[1];
                a2 += xr[iw0 + 2] * wr[2];
                a3 += xr[iw0 + 3] * wr[3];
              } else {
                for (int64_t kw = 0; kw < K; ++kw) {
                  const int64_t iw = iw0 + kw;
                  if (iw >= 0 && iw < W) a0 += xr[iw] * wr[kw];
                }
              }
            }
          }
          const T v = b0 + ((a0 + a1) + (a2 + a3));
          if (accumulate)
            yrow[ho * Wo + wo] += v;
          else
            yrow[ho * Wo + wo] = v;
        }
      }
    }
  }
}

// dst[n,ci,ho*s-p+kh,wo*s-p+kw] += src[n,co,ho,wo] * w[co,ci,kh,kw]
// (transposed-convolution forward and convolution input-gradient share this.)
template <typename T>
void conv_scatter(const T* src, int64_t N, int64_t Co, int64_t Ho, int64_t Wo,
                  const T* w, int64_t Ci, int64_t K, int64_t stride, int64_t pad,
                  T* dst, int64_t H, int64_t W) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      const T* srow = src + ((n * Co + co) * Ho) * Wo;
      for (int64_t ho = 0; ho < Ho; ++ho) {
        for (int64_t wo = 0; wo < Wo; ++wo) {
          const T g = srow[ho * Wo + wo];
          const int64_t iw0 = wo * stride - pad;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            T* dch = dst + ((n * Ci + ci) * H) * W;
            const T* wch = w + ((co * Ci + ci) * K) * K;
            for (int64_t kh = 0; kh < K; ++kh) {
              const int64_t ih = ho * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              T* dr = dch + ih * W;
              const T* wr = wch + kh * K;
              if (K == 4 && iw0 >= 0 && iw0 + 3 < W) {
                dr[iw0] += g * wr[0];
                dr[iw0 + 1] += g * wr[1];
                dr[iw0 + 2] += g * wr[2];
                dr[iw0 + 3] += g * wr[3];
              } else {
                for (int64_t kw = 0; kw < K; ++kw) {
                  const int64_t iw = iw0 + kw;
                  if (iw >= 0 && iw < W) dr[iw] += g * wr[kw];
                }
              }
            }
          }
        }
      }
    }
  }
}

// dw[co,ci,kh,kw] += sum_{n,ho,wo} x[n,ci,ho*s-p+kh,wo*s-p+kw] * dy[n,co,ho,wo]
template <typename T>
void conv_wgrad(const T* x, int64_t N, int64_t Ci, int64_t H, int64_t W,
                const T* dy, int64_t Co, int64_t Ho, int64_t Wo,
                int64_t K, int64_t stride, int64_t pad, T* dw) {
  for (int64_t co = 0; co < Co; ++co) {
    for (int64_t ci = 0; ci < Ci; ++ci) {
      for (int64_t kh = 0; kh < K; ++kh) {
        for (int64_t kw = 0; kw < K; ++kw) {
          const int64_t wo_lo = std::max<int64_t>(0, div_ceil(pad - kw, stride));
          const int64_t wo_hi = std::min(Wo - 1, div_floor(W - 1 - kw + pad, stride));
          T acc = 0;
          for (int64_t n = 0; n < N; ++n) {
            const T* xch = x + ((n * Ci + ci) * H) * W;
            const T* dych = dy + ((n * Co + co) * Ho) * Wo;
            for (int64_t ho = 0; ho < Ho; ++ho) {
              const int64_t ih = ho * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              const int64_t xbase = ih * W + kw - pad;
              const T* dyr = dych + ho * Wo;
              for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                acc += xch[xbase + wo * stride] * dyr[wo];
            }
          }
          dw[((co * Ci + ci) * K + kh) * K + kw] += acc;
        }
      }
    }
  }
}

// db[c] += sum over (N,H,W) of dy
template <typename T>
void conv_bgrad(const T* dy, int64_t N, int64_t C, int64_t H, int64_t W, T* db) {
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      double acc = 0.0;
      const T* r = dy + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) acc += double(r[i]);
      db[c] += T(acc);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution

template <typename T>
struct Conv2dParams {
  Tensor<T> weight;  // conv: [out,in,k,k]; transpose: [in,out,k,k]
  Tensor<T> bias;    // [out]
  int stride = 2;
  int pad = 1;

  int64_t kernel() const { return weight.dim(2); }

  static void check(const Conv2dParams& p) {
    const int64_t k = p.weight.dim(2);
    if (p.weight.ndim() != 4 || p.weight.dim(2) != p.weight.dim(3))
      throw Error("config", "conv weight must be [a,b,k,k]");
    if (k != 1 && k != 4) throw Error("config", "kernel size must be 1 or 4");
    if (p.stride != 1 && p.stride != 2) throw Error("config", "stride must be 1 or 2");
    if (p.pad < 0) throw Error("config", "padding must be >= 0");
  }

  // Weight init N(0, 0.02), zero bias.
  static Conv2dParams make(int64_t in_ch, int64_t out_ch, int64_t k, int stride,
                           int pad, RngState& rng, bool transpose = false) {
    Conv2dParams p;
    Shape ws = transpose ? Shape{in_ch, out_ch, k, k} : Shape{out_ch, in_ch, k, k};
    p.weight = Tensor<T>::gaussian(ws, T(0), T(0.02), rng);
    p.bias = Tensor<T>::zeros({out_ch});
    p.stride = stride;
    p.pad = pad;
    check(p);
    return p;
  }
};

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2dParams<T>& p) {
  Conv2dParams<T>::check(p);
  if (x.ndim() != 4) throw Error("shape", "conv2d input must be NCHW");
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = p.weight.dim(0), K = p.kernel();
  if (p.weight.dim(1) != Ci)
    throw Error("shape", "conv2d channel mismatch: input " + std::to_string(Ci) +
                             ", weight expects " + std::to_string(p.weight.dim(1)));
  if (H + 2 * p.pad < K || W + 2 * p.pad < K)
    throw Error("shape", "conv2d input smaller than kernel after padding");
  const int64_t Ho = (H + 2 * p.pad - K) / p.stride + 1;
  const int64_t Wo = (W + 2 * p.pad - K) / p.stride + 1;
  if (Ho < 1 || Wo < 1) throw Error("shape", "conv2d output dimension < 1");

  Tensor<T> y = Tensor<T>::zeros({N, Co, Ho, Wo});
  detail::conv_gather(x.data(), N, Ci, H, W, p.weight.data(), Co, K, p.stride, p.pad,
                      p.bias.data(), y.data(), Ho, Wo, false);

  const bool need = Tape<T>::recording() &&
                    (x.requires_grad() || p.weight.requires_grad() || p.bias.requires_grad());
  if (need) {
    y.set_requires_grad(true);
    auto xp = x.payload(), wp = p.weight.payload(), bp = p.bias.payload(), yp = y.payload();
    const int s = p.stride, pd = p.pad;
    Tape<T>::active()->record([=] {
      if (yp->grad.empty()) return;
      const T* dy = yp->grad.data();
      if (xp->requires_grad) {
        auto* gx = detail::grad_of<T>(xp);
        detail::conv_scatter(dy, N, Co, Ho, Wo, wp->values.data(), Ci, K, s, pd,
                             gx->data(), H, W);
      }
      if (wp->requires_grad) {
        auto* gw = detail::grad_of<T>(wp);
        detail::conv_wgrad(xp->values.data(), N, Ci, H, W, dy, Co, Ho, Wo, K, s, pd,
                           gw->data());
      }
      if (bp->requires_grad) {
        auto* gb = detail::grad_of<T>(bp);
        detail::conv_bgrad(dy, N, Co, Ho, Wo, gb->data());
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Conv2dParams<T>& p) {
  Conv2dParams<T>::check(p);
  if (x.ndim() != 4) throw Error("shape", "conv_transpose2d input must be NCHW");
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = p.weight.dim(1), K = p.kernel();
  if (p.weight.dim(0) != Ci)
    throw Error("shape", "conv_transpose2d channel mismatch: input " + std::to_string(Ci) +
                             ", weight expects " + std::to_string(p.weight.dim(0)));
  const int64_t Ho = (H - 1) * p.stride - 2 * p.pad + K;
  const int64_t Wo = (W - 1) * p.stride - 2 * p.pad + K;
  if (Ho < 1 || Wo < 1) throw Error("shape", "conv_transpose2d output dimension < 1");

  Tensor<T> y = Tensor<T>::zeros({N, Co, Ho, Wo});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < Co; ++c)
      std::fill_n(y.data() + ((n * Co + c) * Ho) * Wo, Ho * Wo, p.bias.data()[c]);
  detail::conv_scatter(x.data(), N, Ci, H, W, p.weight.data(), Co, K, p.stride, p.pad,
                       y.data(), Ho, Wo);

  const bool need = Tape<T>::recording() &&
                    (x.requires_grad() || p.weight.requires_grad() || p.bias.requires_grad());
  if (need) {
    y.set_requires_grad(true);
    auto xp = x.payload(), wp = p.weight.payload(), bp = p.bias.payload(), yp = y.payload();
    const int s = p.stride, pd = p.pad;
    Tape<T>::active()->record([=] {
      if (yp->grad.empty()) return;
      const T* dy = yp->grad.data();
      if (xp->requires_grad) {
        // Adjoint relationship: d(input) is a plain convolution of the cotangent.
        auto* gx = detail::grad_of<T>(xp);
        detail::conv_gather(dy, N, Co, Ho, Wo, wp->values.data(), Ci, K, s, pd,
                            (const T*)nullptr, gx->data(), H, W, true);
      }
      if (wp->requires_grad) {
        auto* gw = detail::grad_of<T>(wp);
        detail::conv_wgrad(dy, N, Co, Ho, Wo, xp->values.data(), Ci, H, W, K, s, pd,
                           gw->data());
      }
      if (bp->requires_grad) {
        auto* gb = detail::grad_of<T>(bp);
        detail::conv_bgrad(dy, N, Co, Ho, Wo, gb->data());
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
struct BatchNormParams {
  Tensor<T> gamma;  // [ch]
  Tensor<T> beta;   // [ch]
  T eps = T(1e-5);

  static BatchNormParams make(int64_t ch) {
    BatchNormParams p;
    p.gamma = Tensor<T>::ones({ch});
    p.beta = Tensor<T>::zeros({ch});
    return p;
  }
  // Scale init N(1, 0.02) as in DCGAN-family nets; shift zero.
  static BatchNormParams make_random(int64_t ch, RngState& rng) {
    BatchNormParams p = make(ch);
    for (T& g : p.gamma.values()) g = T(rng.normal(1.0, 0.02));
    return p;
  }
};

enum class BnMode { train, test_batch_stats };

// Normalizes each channel over (N,H,W) with the statistics of the current
// batch in BOTH modes; no running averages exist anywhere. With batch 1 and
// 1x1 spatial extent the output is identically beta.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const BatchNormParams<T>& p, BnMode /*mode*/) {
  if (x.ndim() != 4) throw Error("shape", "batchnorm2d input must be NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (p.gamma.dim(0) != C) throw Error("shape", "batchnorm2d channel mismatch");
  const int64_t M = N * H * W;
  const int64_t HW = H * W;

  auto mean = std::make_shared<std::vector<double>>(C, 0.0);
  auto inv_std = std::make_shared<std::vector<double>>(C, 0.0);
  for (int64_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const T* r = x.data() + ((n * C + c) * HW);
      for (int64_t i = 0; i < HW; ++i) s += double(r[i]);
    }
    const double mu = s / double(M);
    double v = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const T* r = x.data() + ((n * C + c) * HW);
      for (int64_t i = 0; i < HW; ++i) {
        const double d = double(r[i]) - mu;
        v += d * d;
      }
    }
    (*mean)[c] = mu;
    (*inv_std)[c] = 1.0 / std::sqrt(v / double(M) + double(p.eps));
  }

  Tensor<T> y = Tensor<T>::zeros(x.shape());
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const T* r = x.data() + ((n * C + c) * HW);
      T* o = y.data() + ((n * C + c) * HW);
      const double mu = (*mean)[c], is = (*inv_std)[c];
      const double g = double(p.gamma.data()[c]), b = double(p.beta.data()[c]);
      for (int64_t i = 0; i < HW; ++i)
        o[i] = T((double(r[i]) - mu) * is * g + b);
    }

  const bool need = Tape<T>::recording() &&
                    (x.requires_grad() || p.gamma.requires_grad() || p.beta.requires_grad());
  if (need) {
    y.set_requires_grad(true);
    auto xp = x.payload(), gp = p.gamma.payload(), bp = p.beta.payload(), yp = y.payload();
    Tape<T>::active()->record([=] {
      if (yp->grad.empty()) return;
      const T* dy = yp->grad.data();
      const T* xv = xp->values.data();
      for (int64_t c = 0; c < C; ++c) {
        const double mu = (*mean)[c], is = (*inv_std)[c];
        // Per-channel sums of dy and dy*xhat.
        double s_dy = 0.0, s_dyx = 0.0;
        for (int64_t n = 0; n < N; ++n) {
          const int64_t base = (n * C + c) * HW;
          for (int64_t i = 0; i < HW; ++i) {
            const double d = double(dy[base + i]);
            s_dy += d;
            s_dyx += d * (double(xv[base + i]) - mu) * is;
          }
        }
        if (bp->requires_grad) detail::grad_of<T>(bp)->data()[c] += T(s_dy);
        if (gp->requires_grad) detail::grad_of<T>(gp)->data()[c] += T(s_dyx);
        if (xp->requires_grad) {
          auto* gx = detail::grad_of<T>(xp);
          const double g = double(gp->values[c]);
          const double m_dy = s_dy / double(M), m_dyx = s_dyx / double(M);
          for (int64_t n = 0; n < N; ++n) {
            const int64_t base = (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) {
              const double xhat = (double(xv[base + i]) - mu) * is;
              gx->data()[base + i] +=
                  T(g * is * (double(dy[base + i]) - m_dy - xhat * m_dyx));
            }
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Dropout

struct DropoutState {
  double rate = 0.5;
  bool active = true;  // stays true at inference; dropout is the noise source
};

// Mask values are 0 (dropped) or 1/(1-rate) so expectations are preserved.
template <typename T>
Tensor<T> dropout_mask(const Shape& s, double rate, RngState& rng) {
  Tensor<T> m = Tensor<T>::zeros(s);
  const T keep = T(1.0 / (1.0 - rate));
  for (T& v : m.values()) v = rng.uniform() < rate ? T(0) : keep;
  return m;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, const DropoutState& d, RngState& rng) {
  if (!d.active || d.rate <= 0.0) return x;
  Tensor<T> m = dropout_mask<T>(x.shape(), d.rate, rng);
  return mul(x, m);
}

// ---------------------------------------------------------------------------
// Activations (kink derivative takes the right branch at exactly 0)

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2)) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) {
    detail::note_kink_distance(x.data()[i]);
    y.data()[i] = x.data()[i] < T(0) ? slope * x.data()[i] : x.data()[i];
  }
  if (detail::track(x)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([xp = x.payload(), yp = y.payload(), slope] {
      if (yp->grad.empty()) return;
      auto* g = detail::grad_of<T>(xp);
      for (size_t i = 0; i < yp->grad.size(); ++i)
        (*g)[i] += xp->values[i] < T(0) ? slope * yp->grad[i] : yp->grad[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return leaky_relu(x, T(0));
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y.data()[i] = std::tanh(x.data()[i]);
  if (detail::track(x)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([xp = x.payload(), yp = y.payload()] {
      if (yp->grad.empty()) return;
      auto* g = detail::grad_of<T>(xp);
      for (size_t i = 0; i < yp->grad.size(); ++i) {
        const T t = yp->values[i];
        (*g)[i] += yp->grad[i] * (T(1) - t * t);
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y.data()[i] = T(1) / (T(1) + std::exp(-x.data()[i]));
  if (detail::track(x)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([xp = x.payload(), yp = y.payload()] {
      if (yp->grad.empty()) return;
      auto* g = detail::grad_of<T>(xp);
      for (size_t i = 0; i < yp->grad.size(); ++i) {
        const T s = yp->values[i];
        (*g)[i] += yp->grad[i] * s * (T(1) - s);
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Shape ops

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 4 || b.ndim() != 4)
    throw Error("shape", "concat_channels expects NCHW tensors");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw Error("shape", "concat_channels: batch/spatial mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
  const int64_t N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
  const int64_t HW = H * W;
  Tensor<T> y = Tensor<T>::zeros({N, Ca + Cb, H, W});
  for (int64_t n = 0; n < N; ++n) {
    std::copy_n(a.data() + n * Ca * HW, Ca * HW, y.data() + n * (Ca + Cb) * HW);
    std::copy_n(b.data() + n * Cb * HW, Cb * HW, y.data() + (n * (Ca + Cb) + Ca) * HW);
  }
  if (detail::track(a, b)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([ap = a.payload(), bp = b.payload(), yp = y.payload(),
                               N, Ca, Cb, HW] {
      if (yp->grad.empty()) return;
      if (ap->requires_grad) {
        auto* g = detail::grad_of<T>(ap);
        for (int64_t n = 0; n < N; ++n)
          for (int64_t i = 0; i < Ca * HW; ++i)
            (*g)[size_t(n * Ca * HW + i)] += yp->grad[size_t(n * (Ca + Cb) * HW + i)];
      }
      if (bp->requires_grad) {
        auto* g = detail::grad_of<T>(bp);
        for (int64_t n = 0; n < N; ++n)
          for (int64_t i = 0; i < Cb * HW; ++i)
            (*g)[size_t(n * Cb * HW + i)] += yp->grad[size_t((n * (Ca + Cb) + Ca) * HW + i)];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int64_t c0, int64_t c1) {
  if (x.ndim() != 4) throw Error("shape", "slice_channels expects NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (c0 < 0 || c1 <= c0 || c1 > C) throw Error("shape", "slice_channels range invalid");
  const int64_t Cs = c1 - c0, HW = H * W;
  Tensor<T> y = Tensor<T>::zeros({N, Cs, H, W});
  for (int64_t n = 0; n < N; ++n)
    std::copy_n(x.data() + (n * C + c0) * HW, Cs * HW, y.data() + n * Cs * HW);
  if (detail::track(x)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([xp = x.payload(), yp = y.payload(), N, C, c0, Cs, HW] {
      if (yp->grad.empty()) return;
      auto* g = detail::grad_of<T>(xp);
      for (int64_t n = 0; n < N; ++n)
        for (int64_t i = 0; i < Cs * HW; ++i)
          (*g)[size_t((n * C + c0) * HW + i)] += yp->grad[size_t(n * Cs * HW + i)];
    });
  }
  return y;
}

// Symmetric spatial zero padding.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, int64_t pad) {
  if (x.ndim() != 4) throw Error("shape", "pad2d expects NCHW");
  if (pad < 0) throw Error("shape", "pad2d negative pad");
  if (pad == 0) return x;
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  Tensor<T> y = Tensor<T>::zeros({N, C, Hp, Wp});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t h = 0; h < H; ++h)
        std::copy_n(x.data() + ((n * C + c) * H + h) * W, W,
                    y.data() + ((n * C + c) * Hp + h + pad) * Wp + pad);
  if (detail::track(x)) {
    y.set_requires_grad(true);
    Tape<T>::active()->record([xp = x.payload(), yp = y.payload(), N, C, H, W, Hp, Wp, pad] {
      if (yp->grad.empty()) return;
      auto* g = detail::grad_of<T>(xp);
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
          for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w)
              (*g)[size_t(((n * C + c) * H + h) * W + w)] +=
                  yp->grad[size_t(((n * C + c) * Hp + h + pad) * Wp + w + pad)];
    });
  }
  return y;
}

}  // namespace im2im

#endif  // IM2IM_LAYERS_HPP
