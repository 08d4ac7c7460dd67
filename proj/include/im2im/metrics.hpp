#ifndef IM2IM_METRICS_HPP
#define IM2IM_METRICS_HPP

// Evaluation analyses computable without external trained models: mean L1,
// Lab-space marginal color histograms with histogram intersection, and
// confusion-matrix segmentation metrics over palette-quantized label maps.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "im2im/tensor.hpp"

namespace im2im {

// ---------------------------------------------------------------------------
// sRGB -> CIELAB (D65 / 2 degrees, standard transfer function)

namespace detail {
inline double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}
inline double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}
}  // namespace detail

// rgb components in [-1,1] (tensor convention); returns (L, a, b).
inline std::array<double, 3> srgb_to_lab_pixel(double r, double g, double b) {
  const double rl = detail::srgb_linearize((r + 1.0) * 0.5);
  const double gl = detail::srgb_linearize((g + 1.0) * 0.5);
  const double bl = detail::srgb_linearize((b + 1.0) * 0.5);
  const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double fx = detail::lab_f(X / 0.95047);
  const double fy = detail::lab_f(Y / 1.0);
  const double fz = detail::lab_f(Z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// [3,H,W] in [-1,1] -> [3,H,W] Lab planes.
template <typename T>
Tensor<T> srgb_to_lab(const Tensor<T>& rgb) {
  if (rgb.ndim() != 3 || rgb.dim(0) != 3)
    throw Error("shape", "srgb_to_lab expects a [3,H,W] tensor, got " + shape_str(rgb.shape()));
  const int64_t H = rgb.dim(1), W = rgb.dim(2), HW = H * W;
  Tensor<T> lab = Tensor<T>::zeros(rgb.shape());
  for (int64_t i = 0; i < HW; ++i) {
    auto v = srgb_to_lab_pixel(double(rgb.data()[i]), double(rgb.data()[HW + i]),
                               double(rgb.data()[2 * HW + i]));
    lab.data()[i] = T(v[0]);
    lab.data()[HW + i] = T(v[1]);
    lab.data()[2 * HW + i] = T(v[2]);
  }
  return lab;
}

// ---------------------------------------------------------------------------
// Lab marginal histograms

// Fixed binning: L over [0,100], a and b over [-110,110]. Intersection values
// depend on the binning, so it is a documented constant (64 bins/channel).
constexpr int64_t kLabHistBins = 64;

inline std::pair<double, double> lab_channel_range(int channel) {
  if (channel == 0) return {0.0, 100.0};
  if (channel == 1 || channel == 2) return {-110.0, 110.0};
  throw Error("config", "Lab channel index must be 0 (L), 1 (a) or 2 (b)");
}

struct LabHistogram {
  int channel = 0;
  int64_t bins = kLabHistBins;
  double lo = 0.0, hi = 100.0;
  std::vector<double> counts;  // normalized to sum 1

  double bin_center(int64_t i) const {
    return lo + (double(i) + 0.5) * (hi - lo) / double(bins);
  }
};

// Pools all pixels of all images (each [3,H,W] RGB in [-1,1]).
template <typename T>
LabHistogram lab_marginal_hist(const std::vector<Tensor<T>>& images, int channel,
                               int64_t bins = kLabHistBins) {
  if (images.empty()) throw Error("config", "lab_marginal_hist needs at least one image");
  LabHistogram h;
  h.channel = channel;
  h.bins = bins;
  std::tie(h.lo, h.hi) = lab_channel_range(channel);
  h.counts.assign(size_t(bins), 0.0);
  double total = 0.0;
  for (const auto& img : images) {
    Tensor<T> lab = srgb_to_lab(img);
    const int64_t HW = lab.dim(1) * lab.dim(2);
    const T* plane = lab.data() + channel * HW;
    for (int64_t i = 0; i < HW; ++i) {
      double t = (double(plane[i]) - h.lo) / (h.hi - h.lo);
      int64_t bin = int64_t(t * double(bins));
      bin = std::max<int64_t>(0, std::min(bins - 1, bin));
      h.counts[size_t(bin)] += 1.0;
      total += 1.0;
    }
  }
  for (double& c : h.counts) c /= total;
  return h;
}

// Sum of per-bin minima; 1 for identical distributions, 0 for disjoint.
inline double hist_intersection(const LabHistogram& p, const LabHistogram& q) {
  if (p.channel != q.channel || p.bins != q.bins || p.lo != q.lo || p.hi != q.hi)
    throw Error("metric", "histogram intersection requires identical binning");
  double s = 0.0;
  for (size_t i = 0; i < p.counts.size(); ++i) s += std::min(p.counts[i], q.counts[i]);
  return s;
}

// (bin center, log probability) pairs for external plotting.
inline std::vector<std::pair<double, double>> hist_log_plot(const LabHistogram& h) {
  std::vector<std::pair<double, double>> out;
  for (int64_t i = 0; i < h.bins; ++i)
    out.emplace_back(h.bin_center(i), std::log(std::max(h.counts[size_t(i)], 1e-12)));
  return out;
}

// ---------------------------------------------------------------------------
// Label maps and segmentation metrics

struct PaletteEntry {
  int id = 0;
  std::array<uint8_t, 3> rgb{0, 0, 0};
};

struct ClassPalette {
  std::vector<PaletteEntry> entries;  // sorted by id

  void validate() const {
    if (entries.empty()) throw Error("config", "palette is empty");
    for (size_t i = 0; i < entries.size(); ++i)
      for (size_t j = i + 1; j < entries.size(); ++j) {
        if (entries[i].id == entries[j].id)
          throw Error("config", "palette ids must be distinct");
        if (entries[i].rgb == entries[j].rgb)
          throw Error("config", "palette colors must be pairwise distinct");
      }
  }
};

// Text format: one "id R G B" line per class, '#' comments.
inline ClassPalette load_palette(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("io", "cannot open palette '" + path + "'");
  ClassPalette p;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    int id, r, g, b;
    if (!(is >> id >> r >> g >> b))
      throw Error("parse", "bad palette line '" + line + "' (expected: id R G B)");
    p.entries.push_back({id, {uint8_t(r), uint8_t(g), uint8_t(b)}});
  }
  std::sort(p.entries.begin(), p.entries.end(),
            [](const PaletteEntry& a, const PaletteEntry& b) { return a.id < b.id; });
  p.validate();
  return p;
}

struct LabelMap {
  int64_t h = 0, w = 0;
  std::vector<int> labels;

  int& at(int64_t y, int64_t x) { return labels[size_t(y * w + x)]; }
  int at(int64_t y, int64_t x) const { return labels[size_t(y * w + x)]; }
};

// Nearest palette color in RGB (Euclidean); ties break to the lowest id.
template <typename T>
LabelMap quantize_to_labels(const Tensor<T>& img, const ClassPalette& palette) {
  palette.validate();
  if (img.ndim() != 3 || img.dim(0) != 3)
    throw Error("shape", "quantize_to_labels expects [3,H,W]");
  const int64_t H = img.dim(1), W = img.dim(2), HW = H * W;
  LabelMap m;
  m.h = H;
  m.w = W;
  m.labels.resize(size_t(HW));
  for (int64_t i = 0; i < HW; ++i) {
    const double r = (double(img.data()[i]) + 1.0) * 127.5;
    const double g = (double(img.data()[HW + i]) + 1.0) * 127.5;
    const double b = (double(img.data()[2 * HW + i]) + 1.0) * 127.5;
    double best = std::numeric_limits<double>::infinity();
    int best_id = palette.entries.front().id;
    for (const auto& e : palette.entries) {  // ascending id: strict < keeps the lowest on ties
      const double dr = r - e.rgb[0], dg = g - e.rgb[1], db = b - e.rgb[2];
      const double d = dr * dr + dg * dg + db * db;
      if (d < best) {
        best = d;
        best_id = e.id;
      }
    }
    m.labels[size_t(i)] = best_id;
  }
  return m;
}

template <typename T>
Tensor<T> palette_render(const LabelMap& m, const ClassPalette& palette) {
  Tensor<T> img = Tensor<T>::zeros({3, m.h, m.w});
  const int64_t HW = m.h * m.w;
  for (int64_t i = 0; i < HW; ++i) {
    const PaletteEntry* e = nullptr;
    for (const auto& cand : palette.entries)
      if (cand.id == m.labels[size_t(i)]) e = &cand;
    if (!e) throw Error("config", "label " + std::to_string(m.labels[size_t(i)]) +
                                      " missing from palette");
    img.data()[i] = T(double(e->rgb[0]) / 127.5 - 1.0);
    img.data()[HW + i] = T(double(e->rgb[1]) / 127.5 - 1.0);
    img.data()[2 * HW + i] = T(double(e->rgb[2]) / 127.5 - 1.0);
  }
  return img;
}

struct SegMetrics {
  double per_pixel_acc = 0;
  double per_class_acc = 0;  // mean recall over classes present in ground truth
  double class_iou = 0;      // mean IOU over classes present in ground truth
  struct PerClass {
    int id = 0;
    int64_t gt_pixels = 0;
    double recall = 0;
    double iou = 0;
  };
  std::vector<PerClass> per_class;  // one row per class present in ground truth
};

inline SegMetrics seg_metrics(const LabelMap& pred, const LabelMap& gt, int n_classes) {
  if (pred.h != gt.h || pred.w != gt.w)
    throw Error("shape", "seg_metrics label map sizes differ");
  if (n_classes < 1) throw Error("config", "n_classes must be >= 1");

  std::vector<int64_t> tp(size_t(n_classes), 0), gt_count(size_t(n_classes), 0),
      pred_count(size_t(n_classes), 0);
  int64_t correct = 0;
  const int64_t total = pred.h * pred.w;
  for (int64_t i = 0; i < total; ++i) {
    const int p = pred.labels[size_t(i)], g = gt.labels[size_t(i)];
    if (p < 0 || p >= n_classes || g < 0 || g >= n_classes)
      throw Error("value", "label out of range [0," + std::to_string(n_classes) + ")");
    ++gt_count[size_t(g)];
    ++pred_count[size_t(p)];
    if (p == g) {
      ++correct;
      ++tp[size_t(g)];
    }
  }

  SegMetrics m;
  m.per_pixel_acc = double(correct) / double(total);
  double recall_sum = 0, iou_sum = 0;
  int present = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (gt_count[size_t(c)] == 0) continue;  // absent from GT: recall undefined, excluded
    ++present;
    SegMetrics::PerClass pc;
    pc.id = c;
    pc.gt_pixels = gt_count[size_t(c)];
    pc.recall = double(tp[size_t(c)]) / double(gt_count[size_t(c)]);
    const int64_t uni = gt_count[size_t(c)] + pred_count[size_t(c)] - tp[size_t(c)];
    pc.iou = uni == 0 ? 0.0 : double(tp[size_t(c)]) / double(uni);
    recall_sum += pc.recall;
    iou_sum += pc.iou;
    m.per_class.push_back(pc);
  }
  m.per_class_acc = recall_sum / double(present);
  m.class_iou = iou_sum / double(present);
  return m;
}

// Mean absolute difference, the evaluation-side L1 statistic.
template <typename T>
double l1_error(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "l1_error");
  double s = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) s += std::fabs(double(a.data()[i]) - double(b.data()[i]));
  return s / double(a.size());
}

}  // namespace im2im

#endif  // IM2IM_METRICS_HPP
