// Layer ops against independent oracles: naive nested-loop convolution, the
// conv/conv-transpose adjoint identity, batchnorm statistics, dropout masks.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "im2im/gradcheck.hpp"
#include "im2im/layers.hpp"
#include "im2im/tensor.hpp"

using namespace im2im;

namespace {

// Six plain loops, no shared code with the library kernel.
Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w,
                           const Tensor<double>& b, int s, int p) {
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = w.dim(0), K = w.dim(2);
  const int64_t Ho = (H + 2 * p - K) / s + 1, Wo = (W + 2 * p - K) / s + 1;
  auto y = Tensor<double>::zeros({N, Co, Ho, Wo});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ho = 0; ho < Ho; ++ho)
        for (int64_t wo = 0; wo < Wo; ++wo) {
          double acc = b.data()[co];
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t kh = 0; kh < K; ++kh)
              for (int64_t kw = 0; kw < K; ++kw) {
                const int64_t ih = ho * s - p + kh, iw = wo * s - p + kw;
                if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                  acc += x.at(n, ci, ih, iw) * w.at(co, ci, kh, kw);
              }
          y.at(n, co, ho, wo) = acc;
        }
  return y;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (int64_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

TEST(Conv2d, FirstEncoderLayerShape) {
  RngState rng(1);
  auto x = Tensor<float>::zeros({1, 3, 256, 256});
  auto p = Conv2dParams<float>::make(3, 64, 4, 2, 1, rng);
  auto y = conv2d(x, p);
  EXPECT_EQ(y.shape(), (Shape{1, 64, 128, 128}));
}

TEST(Conv2d, DeltaKernelShiftsInput) {
  RngState rng(2);
  auto x = Tensor<float>::gaussian({1, 1, 8, 8}, 0.f, 1.f, rng);
  Conv2dParams<float> p;
  p.weight = Tensor<float>::zeros({1, 1, 4, 4});
  p.weight.at(0, 0, 1, 1) = 1.0f;  // tap at (1,1) cancels pad 1 exactly
  p.bias = Tensor<float>::zeros({1});
  p.stride = 1;
  p.pad = 1;
  auto y = conv2d(x, p);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 7, 7}));
  for (int64_t h = 0; h < 7; ++h)
    for (int64_t w = 0; w < 7; ++w)
      EXPECT_EQ(y.at(0, 0, h, w), x.at(0, 0, h, w));
}

TEST(Conv2d, MatchesNaiveOracle) {
  RngState rng(3);
  auto x = Tensor<double>::gaussian({1, 2, 6, 6}, 0.0, 1.0, rng);
  Conv2dParams<double> p = Conv2dParams<double>::make(2, 3, 4, 2, 1, rng);
  auto y = conv2d(x, p);
  auto ref = conv_oracle(x, p.weight, p.bias, 2, 1);
  ASSERT_EQ(y.shape(), ref.shape());
  for (int64_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data()[i], ref.data()[i], 1e-5);
}

TEST(Conv2d, ShapeFormulaMatchesExecution) {
  RngState rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    const int64_t k = rng.uniform() < 0.5 ? 1 : 4;
    const int s = rng.uniform() < 0.5 ? 1 : 2;
    const int pad = int(rng.uniform() * 2);
    const int64_t H = 4 + int64_t(rng.uniform() * 8);
    const int64_t W = 4 + int64_t(rng.uniform() * 8);
    const int64_t Ci = 1 + int64_t(rng.uniform() * 3);
    const int64_t Co = 1 + int64_t(rng.uniform() * 3);
    if (H + 2 * pad < k || W + 2 * pad < k) continue;
    auto p = Conv2dParams<double>::make(Ci, Co, k, s, pad, rng);
    auto x = Tensor<double>::gaussian({1, Ci, H, W}, 0.0, 1.0, rng);
    auto y = conv2d(x, p);
    EXPECT_EQ(y.dim(2), (H + 2 * pad - k) / s + 1);
    EXPECT_EQ(y.dim(3), (W + 2 * pad - k) / s + 1);
  }
}

TEST(Conv2d, ErrorCases) {
  RngState rng(5);
  auto p = Conv2dParams<float>::make(3, 8, 4, 2, 1, rng);
  auto bad_ch = Tensor<float>::zeros({1, 2, 8, 8});
  EXPECT_THROW(conv2d(bad_ch, p), Error);
  auto tiny = Tensor<float>::zeros({1, 3, 1, 1});
  EXPECT_THROW(conv2d(tiny, p), Error);
  EXPECT_THROW(Conv2dParams<float>::make(3, 8, 3, 2, 1, rng), Error);  // kernel 3
  EXPECT_THROW(Conv2dParams<float>::make(3, 8, 4, 3, 1, rng), Error);  // stride 3
}

TEST(ConvTranspose2d, BottleneckUpsampleShape) {
  RngState rng(6);
  auto x = Tensor<float>::zeros({1, 512, 1, 1});
  auto p = Conv2dParams<float>::make(512, 512, 4, 2, 1, rng, /*transpose=*/true);
  auto y = conv_transpose2d(x, p);
  EXPECT_EQ(y.shape(), (Shape{1, 512, 2, 2}));
}

TEST(ConvTranspose2d, EightDoublingsReach256) {
  RngState rng(7);
  auto x = Tensor<float>::gaussian({1, 1, 1, 1}, 0.f, 1.f, rng);
  for (int i = 0; i < 8; ++i) {
    auto p = Conv2dParams<float>::make(1, 1, 4, 2, 1, rng, true);
    x = conv_transpose2d(x, p);
  }
  EXPECT_EQ(x.shape(), (Shape{1, 1, 256, 256}));
}

TEST(ConvTranspose2d, AdjointIdentityWithSharedWeights) {
  RngState rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const int s = trial % 2 ? 1 : 2;
    auto p = Conv2dParams<double>::make(2, 3, 4, s, 1, rng);
    p.bias = Tensor<double>::zeros({3});  // identity holds for the linear part
    auto x = Tensor<double>::gaussian({1, 2, 8, 8}, 0.0, 1.0, rng);
    auto cx = conv2d(x, p);
    auto y = Tensor<double>::gaussian(cx.shape(), 0.0, 1.0, rng);
    Conv2dParams<double> pt = p;  // same weight tensor, read as [in,out,k,k]
    pt.bias = Tensor<double>::zeros({2});
    auto cty = conv_transpose2d(y, pt);
    ASSERT_EQ(cty.shape(), x.shape());
    EXPECT_NEAR(dot(cx, y), dot(x, cty), 1e-4);
  }
}

TEST(BatchNorm, ConstantInputGoesToZero) {
  auto x = Tensor<float>::filled({2, 3, 4, 4}, 7.25f);
  auto p = BatchNormParams<float>::make(3);
  auto y = batchnorm2d(x, p, BnMode::train);
  for (float v : y.values()) EXPECT_NEAR(v, 0.0f, 1e-3f);
}

TEST(BatchNorm, NormalizesPerChannel) {
  RngState rng(9);
  auto x = Tensor<float>::gaussian({2, 3, 8, 8}, 1.5f, 2.0f, rng);
  auto p = BatchNormParams<float>::make(3);
  auto y = batchnorm2d(x, p, BnMode::test_batch_stats);
  const int64_t M = 2 * 8 * 8;
  for (int64_t c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t h = 0; h < 8; ++h)
        for (int64_t w = 0; w < 8; ++w) mean += y.at(n, c, h, w);
    mean /= double(M);
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t h = 0; h < 8; ++h)
        for (int64_t w = 0; w < 8; ++w) {
          double d = y.at(n, c, h, w) - mean;
          var += d * d;
        }
    var /= double(M);
    EXPECT_LT(std::fabs(mean), 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(BatchNorm, BottleneckBatch1ZeroesActivations) {
  // batch 1 at 1x1 spatial: output is identically beta, independent of input.
  auto x = Tensor<float>::filled({1, 4, 1, 1}, 123.456f);
  auto p = BatchNormParams<float>::make(4);
  for (int64_t c = 0; c < 4; ++c) p.beta.data()[c] = float(c) * 0.5f;
  auto y = batchnorm2d(x, p, BnMode::test_batch_stats);
  for (int64_t c = 0; c < 4; ++c) EXPECT_EQ(y.at(0, c, 0, 0), float(c) * 0.5f);

  auto x2 = Tensor<float>::filled({1, 4, 1, 1}, -777.0f);
  auto y2 = batchnorm2d(x2, p, BnMode::test_batch_stats);
  EXPECT_EQ(y.values(), y2.values());
}

TEST(Dropout, InactiveIsIdentity) {
  RngState rng(10);
  auto x = Tensor<float>::gaussian({2, 2, 3, 3}, 0.f, 1.f, rng);
  DropoutState d;
  d.active = false;
  auto y = dropout(x, d, rng);
  EXPECT_EQ(y.values(), x.values());
}

TEST(Dropout, PreservesExpectation) {
  RngState rng(11);
  auto x = Tensor<double>::ones({10000});
  DropoutState d;
  auto y = dropout(x, d, rng);
  double mean = 0;
  for (double v : y.values()) mean += v;
  mean /= double(y.size());
  // survivors are 2.0, var = 1, 3-sigma over 10000 draws = 0.03
  EXPECT_NEAR(mean, 1.0, 0.03);
}

TEST(Dropout, FrozenMaskBackwardIsMaskPattern) {
  RngState rng(12);
  auto x = Tensor<float>::ones({16});
  x.set_requires_grad(true);
  auto mask = dropout_mask<float>({16}, 0.5, rng);
  Tape<float> tape;
  auto loss = reduce_sum(mul(x, mask));
  tape.backward(loss);
  for (int64_t i = 0; i < 16; ++i) {
    EXPECT_EQ(x.grad()[size_t(i)], mask.data()[i]);
    EXPECT_TRUE(mask.data()[i] == 0.0f || mask.data()[i] == 2.0f);
  }
}

TEST(Activations, PaperValues) {
  auto t = Tensor<float>::from_values({1}, {-1.f});
  EXPECT_FLOAT_EQ(leaky_relu(t).item(), -0.2f);
  EXPECT_EQ(im2im::tanh(Tensor<float>::from_values({1}, {0.f})).item(), 0.0f);
  EXPECT_EQ(sigmoid(Tensor<float>::from_values({1}, {0.f})).item(), 0.5f);
  auto r = relu(Tensor<float>::from_values({2}, {-2.f, 3.f}));
  EXPECT_EQ(r.values(), (std::vector<float>{0.f, 3.f}));
}

TEST(Concat, ChannelDoubling) {
  auto a = Tensor<float>::ones({1, 512, 2, 2});
  auto b = Tensor<float>::zeros({1, 512, 2, 2});
  auto y = concat_channels(a, b);
  EXPECT_EQ(y.shape(), (Shape{1, 1024, 2, 2}));
  EXPECT_EQ(y.at(0, 0, 0, 0), 1.0f);
  EXPECT_EQ(y.at(0, 512, 0, 0), 0.0f);

  auto c = Tensor<float>::zeros({1, 512, 3, 2});
  EXPECT_THROW(concat_channels(a, c), Error);
}

TEST(Concat, BackwardSplitsCotangent) {
  auto x = Tensor<float>::ones({1, 2, 2, 2});
  auto z = Tensor<float>::zeros({1, 3, 2, 2});
  x.set_requires_grad(true);
  Tape<float> tape;
  auto y = concat_channels(x, z);
  auto sliced = slice_channels(y, 0, 2);
  tape.backward(reduce_sum(sliced));
  for (float g : x.grad()) EXPECT_EQ(g, 1.0f);
}

TEST(GradChecks, AllLayerOpsDouble) {
  RngState rng(13);
  GradCheckOptions opt;
  opt.tolerance = 1e-5;

  // conv2d w.r.t. x, w, b
  {
    auto x = Tensor<double>::gaussian({1, 2, 6, 6}, 0.0, 1.0, rng);
    auto p = Conv2dParams<double>::make(2, 3, 4, 2, 1, rng);
    auto rep = finite_diff_check_params<double>(
        [&] { return reduce_mean(conv2d(x, p)); }, {x, p.weight, p.bias}, opt);
    EXPECT_TRUE(rep.pass) << "conv2d " << rep.max_rel_error;
  }
  // conv_transpose2d w.r.t. x, w, b
  {
    auto x = Tensor<double>::gaussian({1, 3, 3, 3}, 0.0, 1.0, rng);
    auto p = Conv2dParams<double>::make(3, 2, 4, 2, 1, rng, true);
    auto rep = finite_diff_check_params<double>(
        [&] { return reduce_mean(conv_transpose2d(x, p)); }, {x, p.weight, p.bias}, opt);
    EXPECT_TRUE(rep.pass) << "conv_transpose2d " << rep.max_rel_error;
  }
  // conv_transpose2d at the bottleneck extent (1x1 -> 2x2), where several
  // kernel taps never touch the output
  {
    auto x = Tensor<double>::gaussian({1, 3, 1, 1}, 0.0, 1.0, rng);
    auto p = Conv2dParams<double>::make(3, 2, 4, 2, 1, rng, true);
    auto rep = finite_diff_check_params<double>(
        [&] { return reduce_mean(mul(conv_transpose2d(x, p), conv_transpose2d(x, p))); },
        {x, p.weight, p.bias}, opt);
    EXPECT_TRUE(rep.pass) << "conv_transpose2d 1x1 " << rep.max_rel_error;
  }
  // batchnorm w.r.t. x, gamma, beta
  {
    auto x = Tensor<double>::gaussian({2, 2, 3, 3}, 0.0, 1.0, rng);
    auto p = BatchNormParams<double>::make(2);
    auto rep = finite_diff_check_params<double>(
        [&] { return reduce_mean(mul(batchnorm2d(x, p, BnMode::train),
                                     batchnorm2d(x, p, BnMode::train))); },
        {x, p.gamma, p.beta}, opt);
    EXPECT_TRUE(rep.pass) << "batchnorm " << rep.max_rel_error;
  }
  // activations
  {
    auto x = Tensor<double>::gaussian({20}, 0.0, 1.0, rng);
    for (auto fn : {+[](const Tensor<double>& t) { return leaky_relu(t); },
                    +[](const Tensor<double>& t) { return relu(t); },
                    +[](const Tensor<double>& t) { return im2im::tanh(t); },
                    +[](const Tensor<double>& t) { return sigmoid(t); }}) {
      auto rep = finite_diff_check<double>(
          [fn](const Tensor<double>& t) { return reduce_mean(fn(t)); }, x, opt);
      EXPECT_TRUE(rep.pass) << "activation " << rep.max_rel_error;
    }
  }
  // concat / slice / pad
  {
    auto a = Tensor<double>::gaussian({1, 2, 3, 3}, 0.0, 1.0, rng);
    auto b = Tensor<double>::gaussian({1, 1, 3, 3}, 0.0, 1.0, rng);
    auto rep = finite_diff_check_params<double>(
        [&] {
          auto y = concat_channels(a, b);
          return reduce_mean(mul(y, y));
        },
        {a, b}, opt);
    EXPECT_TRUE(rep.pass) << "concat " << rep.max_rel_error;

    rep = finite_diff_check<double>(
        [](const Tensor<double>& t) {
          return reduce_mean(mul(slice_channels(t, 1, 2), slice_channels(t, 0, 1)));
        },
        a, opt);
    EXPECT_TRUE(rep.pass) << "slice " << rep.max_rel_error;

    rep = finite_diff_check<double>(
        [](const Tensor<double>& t) {
          auto y = pad2d(t, 2);
          return reduce_mean(mul(y, y));
        },
        a, opt);
    EXPECT_TRUE(rep.pass) << "pad " << rep.max_rel_error;
  }
  // dropout with frozen mask
  {
    auto x = Tensor<double>::gaussian({24}, 0.0, 1.0, rng);
    auto rep = finite_diff_check<double>(
        [](const Tensor<double>& t) {
          RngState mask_rng(77);
          DropoutState d;
          return reduce_mean(dropout(t, d, mask_rng));
        },
        x, opt);
    EXPECT_TRUE(rep.pass) << "dropout " << rep.max_rel_error;
  }
}

TEST(GradChecks, CompositeConvReluMeanGraph) {
  // conv -> relu -> mean on a random 1x2x6x6 input, checked coordinatewise
  // against central differences with step 1e-5.
  RngState rng(21);
  auto x = Tensor<double>::gaussian({1, 2, 6, 6}, 0.0, 1.0, rng);
  auto p = Conv2dParams<double>::make(2, 3, 4, 2, 1, rng);
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.tolerance = 1e-3;
  auto rep = finite_diff_check_params<double>(
      [&] { return reduce_mean(relu(conv2d(x, p))); }, {x, p.weight, p.bias}, opt);
  EXPECT_TRUE(rep.pass) << rep.max_rel_error;
}

TEST(Pad2d, ZeroPadBordersAndIdentity) {
  auto x = Tensor<float>::ones({1, 1, 2, 2});
  auto y = pad2d(x, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(y.at(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(y.at(0, 0, 1, 1), 1.0f);
  auto same = pad2d(x, 0);
  EXPECT_EQ(same.values(), x.values());
}
