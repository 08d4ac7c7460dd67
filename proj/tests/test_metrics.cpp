// Color-space fixed points against an independent scalar reference,
// histogram properties, palette quantization round trips, and segmentation
// metrics against a brute-force enumeration oracle.

#include <gtest/gtest.h>

#include <cmath>

#include "im2im/metrics.hpp"

using namespace im2im;

namespace {

// Independent scalar sRGB -> Lab reference, written straight from the
// standard's definition (shares no code with the library path).
struct RefLab {
  double L, a, b;
};
RefLab reference_lab(double r8, double g8, double b8) {  // inputs in [0,255]
  auto lin = [](double u) {
    u /= 255.0;
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
  };
  const double R = lin(r8), G = lin(g8), B = lin(b8);
  const double X = (0.4124564 * R + 0.3575761 * G + 0.1804375 * B) / 0.95047;
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double Z = (0.0193339 * R + 0.1191920 * G + 0.9503041 * B) / 1.08883;
  auto f = [](double t) {
    return t > 0.008856451679035631 ? std::cbrt(t) : 7.787037037037035 * t + 16.0 / 116.0;
  };
  return {116.0 * f(Y) - 16.0, 500.0 * (f(X) - f(Y)), 200.0 * (f(Y) - f(Z))};
}

Tensor<float> flat_color(float r, float g, float b, int64_t size = 4) {
  auto t = Tensor<float>::zeros({3, size, size});
  const int64_t HW = size * size;
  std::fill_n(t.data(), HW, r);
  std::fill_n(t.data() + HW, HW, g);
  std::fill_n(t.data() + 2 * HW, HW, b);
  return t;
}

// Exhaustive per-pixel / per-class recomputation, organized differently from
// the library (explicit per-class pixel scans instead of one confusion pass).
SegMetrics brute_force_seg(const LabelMap& pred, const LabelMap& gt, int n_classes) {
  SegMetrics m;
  const int64_t total = pred.h * pred.w;
  int64_t ok = 0;
  for (int64_t i = 0; i < total; ++i)
    if (pred.labels[size_t(i)] == gt.labels[size_t(i)]) ++ok;
  m.per_pixel_acc = double(ok) / double(total);

  double rec = 0, iou = 0;
  int present = 0;
  for (int c = 0; c < n_classes; ++c) {
    int64_t in_gt = 0, in_pred = 0, both = 0;
    for (int64_t i = 0; i < total; ++i) {
      const bool g = gt.labels[size_t(i)] == c, p = pred.labels[size_t(i)] == c;
      in_gt += g;
      in_pred += p;
      both += g && p;
    }
    if (in_gt == 0) continue;
    ++present;
    rec += double(both) / double(in_gt);
    const int64_t uni = in_gt + in_pred - both;
    iou += uni ? double(both) / double(uni) : 0.0;
  }
  m.per_class_acc = rec / present;
  m.class_iou = iou / present;
  return m;
}

}  // namespace

TEST(Lab, WhiteBlackFixedPoints) {
  auto white = srgb_to_lab(flat_color(1, 1, 1, 1));
  EXPECT_NEAR(white.data()[0], 100.0, 1e-3);
  EXPECT_NEAR(white.data()[1], 0.0, 1e-3);
  EXPECT_NEAR(white.data()[2], 0.0, 1e-3);

  auto black = srgb_to_lab(flat_color(-1, -1, -1, 1));
  EXPECT_NEAR(black.data()[0], 0.0, 1e-3);
  EXPECT_NEAR(black.data()[1], 0.0, 1e-3);
  EXPECT_NEAR(black.data()[2], 0.0, 1e-3);
}

TEST(Lab, MidGrayAgainstScalarReference) {
  // srgb 127.5 (0.0 in [-1,1]): a = b = 0, L from the reference formulas.
  RefLab ref = reference_lab(127.5, 127.5, 127.5);
  auto lab = srgb_to_lab(flat_color(0, 0, 0, 1));
  EXPECT_NEAR(lab.data()[0], ref.L, 1e-3);
  EXPECT_NEAR(lab.data()[1], 0.0, 1e-3);
  EXPECT_NEAR(lab.data()[2], 0.0, 1e-3);
  EXPECT_NEAR(ref.L, 53.389, 0.01);  // frozen from the reference evaluation
}

TEST(Lab, AgreesWithReferenceOnRandomColors) {
  RngState rng(3);
  for (int i = 0; i < 50; ++i) {
    const double r = rng.uniform() * 255, g = rng.uniform() * 255, b = rng.uniform() * 255;
    RefLab ref = reference_lab(r, g, b);
    auto lab = srgb_to_lab(flat_color(float(r / 127.5 - 1), float(g / 127.5 - 1),
                                      float(b / 127.5 - 1), 1));
    EXPECT_NEAR(lab.data()[0], ref.L, 2e-3);
    EXPECT_NEAR(lab.data()[1], ref.a, 2e-3);
    EXPECT_NEAR(lab.data()[2], ref.b, 2e-3);
  }
}

TEST(Lab, MonotoneAlongGrayAxis) {
  double prev = -1;
  for (int v = 0; v <= 255; v += 5) {
    const float u = float(v) / 127.5f - 1.0f;
    const double L = srgb_to_lab(flat_color(u, u, u, 1)).data()[0];
    EXPECT_GT(L, prev);
    prev = L;
  }
  EXPECT_THROW(srgb_to_lab(Tensor<float>::zeros({1, 2, 2})), Error);
}

TEST(LabHist, UniformImageSingleBin) {
  auto h = lab_marginal_hist<float>({flat_color(0.3f, -0.2f, 0.5f)}, 1);
  double sum = 0;
  int nonzero = 0;
  for (double c : h.counts) {
    sum += c;
    nonzero += c > 0;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_EQ(nonzero, 1);
}

TEST(LabHist, PooledDisjointColorsAndIntersection) {
  auto img_a = flat_color(0.9f, -0.8f, -0.8f);  // strongly red
  auto img_b = flat_color(-0.8f, -0.8f, 0.9f);  // strongly blue
  auto pooled = lab_marginal_hist<float>({img_a, img_b}, 2);
  int half_bins = 0;
  for (double c : pooled.counts) half_bins += c == 0.5;
  EXPECT_EQ(half_bins, 2);

  auto ha = lab_marginal_hist<float>({img_a}, 2);
  auto hb = lab_marginal_hist<float>({img_b}, 2);
  EXPECT_EQ(hist_intersection(ha, ha), 1.0);
  EXPECT_EQ(hist_intersection(ha, hb), 0.0);
  EXPECT_EQ(hist_intersection(ha, hb), hist_intersection(hb, ha));
  EXPECT_NEAR(hist_intersection(ha, pooled), 0.5, 1e-9);

  auto wrong_bins = lab_marginal_hist<float>({img_a}, 2, 32);
  EXPECT_THROW(hist_intersection(ha, wrong_bins), Error);

  // identical arrays for a histogram of the same images
  auto ha2 = lab_marginal_hist<float>({img_a}, 2);
  EXPECT_EQ(ha.counts, ha2.counts);
}

TEST(LabHist, LogPlotDataShape) {
  auto h = lab_marginal_hist<float>({flat_color(0.1f, 0.1f, 0.1f)}, 0);
  auto pts = hist_log_plot(h);
  ASSERT_EQ(int64_t(pts.size()), h.bins);
  EXPECT_NEAR(pts.front().first, h.lo + 0.5 * (h.hi - h.lo) / double(h.bins), 1e-12);
}

namespace {
ClassPalette test_palette() {
  ClassPalette p;
  p.entries = {{0, {0, 0, 0}}, {1, {255, 0, 0}}, {2, {0, 255, 0}}, {3, {0, 0, 255}}};
  return p;
}
}  // namespace

TEST(Quantize, ExactColorsAndTieBreak) {
  auto pal = test_palette();
  auto img = flat_color(-1, -1, -1, 2);        // exactly class 0
  auto m = quantize_to_labels(img, pal);
  for (int v : m.labels) EXPECT_EQ(v, 0);

  // equidistant between class 0 (0,0,0) and class 3 (0,0,255): blue = 127.5
  auto tie = flat_color(-1, -1, 0, 2);
  auto mt = quantize_to_labels(tie, pal);
  for (int v : mt.labels) EXPECT_EQ(v, 0);  // lowest id wins
}

TEST(Quantize, RenderRoundTripAndNoiseRecovery) {
  auto pal = test_palette();
  RngState rng(9);
  LabelMap m;
  m.h = 8;
  m.w = 8;
  m.labels.resize(64);
  for (int& v : m.labels) v = int(rng.uniform() * 4);

  auto img = palette_render<float>(m, pal);
  auto back = quantize_to_labels(img, pal);
  EXPECT_EQ(back.labels, m.labels);

  // small perturbation keeps the assignment
  for (auto& v : img.values()) v += float((rng.uniform() - 0.5) * 0.05);
  auto noisy = quantize_to_labels(img, pal);
  EXPECT_EQ(noisy.labels, m.labels);
}

TEST(SegMetrics, HandComputedExamples) {
  LabelMap gt{2, 2, {0, 0, 1, 1}};
  LabelMap pred{2, 2, {0, 1, 1, 1}};
  auto m = seg_metrics(pred, gt, 2);
  EXPECT_DOUBLE_EQ(m.per_pixel_acc, 0.75);
  EXPECT_DOUBLE_EQ(m.per_class_acc, 0.75);           // mean(1/2, 1)
  EXPECT_NEAR(m.class_iou, (0.5 + 2.0 / 3.0) / 2, 1e-12);

  LabelMap gt2{2, 2, {0, 0, 1, 1}};
  LabelMap pred2{2, 2, {0, 0, 0, 0}};
  auto m2 = seg_metrics(pred2, gt2, 2);
  EXPECT_DOUBLE_EQ(m2.per_pixel_acc, 0.5);
  EXPECT_DOUBLE_EQ(m2.per_class_acc, 0.5);  // mean(1, 0)
  EXPECT_DOUBLE_EQ(m2.class_iou, 0.25);     // mean(0.5, 0)

  auto perfect = seg_metrics(gt, gt, 2);
  EXPECT_DOUBLE_EQ(perfect.per_pixel_acc, 1.0);
  EXPECT_DOUBLE_EQ(perfect.per_class_acc, 1.0);
  EXPECT_DOUBLE_EQ(perfect.class_iou, 1.0);
}

TEST(SegMetrics, ErrorsAndExclusions) {
  LabelMap gt{2, 2, {0, 0, 0, 0}};  // class 1 absent from GT
  LabelMap pred{2, 2, {0, 1, 0, 1}};
  auto m = seg_metrics(pred, gt, 2);
  ASSERT_EQ(m.per_class.size(), 1u);  // only class 0 counted
  EXPECT_DOUBLE_EQ(m.per_class_acc, 0.5);

  LabelMap bad{2, 2, {0, 0, 0, 5}};
  EXPECT_THROW(seg_metrics(bad, gt, 2), Error);
  LabelMap small{1, 2, {0, 0}};
  EXPECT_THROW(seg_metrics(small, gt, 2), Error);
}

TEST(SegMetrics, MatchesBruteForceOn500RandomMaps) {
  RngState rng(123);
  for (int trial = 0; trial < 500; ++trial) {
    const int64_t h = 1 + int64_t(rng.uniform() * 8);
    const int64_t w = 1 + int64_t(rng.uniform() * 8);
    const int n_classes = 1 + int(rng.uniform() * 4);
    LabelMap gt{h, w, {}}, pred{h, w, {}};
    gt.labels.resize(size_t(h * w));
    pred.labels.resize(size_t(h * w));
    for (auto& v : gt.labels) v = int(rng.uniform() * n_classes);
    for (auto& v : pred.labels) v = int(rng.uniform() * n_classes);

    auto a = seg_metrics(pred, gt, n_classes);
    auto b = brute_force_seg(pred, gt, n_classes);
    EXPECT_DOUBLE_EQ(a.per_pixel_acc, b.per_pixel_acc) << "trial " << trial;
    EXPECT_DOUBLE_EQ(a.per_class_acc, b.per_class_acc) << "trial " << trial;
    EXPECT_DOUBLE_EQ(a.class_iou, b.class_iou) << "trial " << trial;
  }
}

TEST(L1Error, BasicsAndSymmetry) {
  auto a = flat_color(0.1f, 0.1f, 0.1f);
  auto b = flat_color(0.2f, 0.2f, 0.2f);
  EXPECT_EQ(l1_error(a, a), 0.0);
  EXPECT_NEAR(l1_error(a, b), 0.1, 1e-7);
  EXPECT_EQ(l1_error(a, b), l1_error(b, a));
  EXPECT_THROW(l1_error(a, Tensor<float>::zeros({3, 2, 2})), Error);
}

TEST(Palette, LoadValidation) {
  ClassPalette dup;
  dup.entries = {{0, {1, 2, 3}}, {1, {1, 2, 3}}};
  EXPECT_THROW(dup.validate(), Error);
  ClassPalette empty;
  EXPECT_THROW(empty.validate(), Error);
}
