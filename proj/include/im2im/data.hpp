#ifndef IM2IM_DATA_HPP
#define IM2IM_DATA_HPP

// Paired datasets: side-by-side A|B images (the released paired datasets'
// convention) or two mirrored folders, plain-text manifests with a seeded
// train/test split, and the resize-crop-mirror jitter augmentation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "im2im/png_io.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

template <typename T>
struct PairedSample {
  Tensor<T> x, y;  // [C,H,W] in [-1,1], identical spatial extents
  std::string id;
};

enum class PairLayout { side_by_side, two_folders };

inline std::string layout_name(PairLayout l) {
  return l == PairLayout::side_by_side ? "side_by_side" : "two_folders";
}
inline PairLayout parse_layout(const std::string& s) {
  if (s == "side_by_side") return PairLayout::side_by_side;
  if (s == "two_folders") return PairLayout::two_folders;
  throw Error("config", "unknown layout '" + s + "' (expected side_by_side|two_folders)");
}

struct ManifestEntry {
  std::string a;  // image path, relative to the manifest root
  std::string b;  // second path for two_folders; empty otherwise
};

struct DatasetManifest {
  std::string root;
  PairLayout layout = PairLayout::side_by_side;
  std::vector<ManifestEntry> entries;
};

// Format: "layout=<name>" then one entry per line ("a" or "a|b").
inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("io", "cannot open manifest '" + path + "' for writing");
  f << "layout=" << layout_name(m.layout) << "\n";
  for (const auto& e : m.entries) {
    f << e.a;
    if (!e.b.empty()) f << '|' << e.b;
    f << "\n";
  }
  if (!f) throw Error("io", "short write to manifest '" + path + "'");
}

inline DatasetManifest load_manifest(const std::string& path, const std::string& root) {
  std::ifstream f(path);
  if (!f) throw Error("io", "cannot open manifest '" + path + "'");
  DatasetManifest m;
  m.root = root;
  std::string line;
  bool have_layout = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_layout) {
      if (line.rfind("layout=", 0) != 0)
        throw Error("parse", "manifest '" + path + "' must start with layout=<name>");
      m.layout = parse_layout(line.substr(7));
      have_layout = true;
      continue;
    }
    ManifestEntry e;
    const size_t bar = line.find('|');
    if (bar == std::string::npos) {
      e.a = line;
    } else {
      e.a = line.substr(0, bar);
      e.b = line.substr(bar + 1);
    }
    m.entries.push_back(std::move(e));
  }
  if (!have_layout) throw Error("parse", "manifest '" + path + "' is empty");
  return m;
}

// Loads and normalizes one pair. Side-by-side files split at width/2 into
// (x | y); two_folders reads both files.
template <typename T>
PairedSample<T> load_paired(const DatasetManifest& m, const ManifestEntry& e) {
  namespace fs = std::filesystem;
  PairedSample<T> s;
  s.id = e.a;
  if (m.layout == PairLayout::side_by_side) {
    ImageU8 img = png_read_file((fs::path(m.root) / e.a).string());
    if (img.width % 2 != 0)
      throw Error("decode", "side_by_side image '" + e.a + "' has odd width " +
                                std::to_string(img.width));
    const int64_t half = img.width / 2;
    ImageU8 left{half, img.height, img.channels, {}};
    ImageU8 right{half, img.height, img.channels, {}};
    left.pixels.resize(size_t(half * img.height * img.channels));
    right.pixels.resize(left.pixels.size());
    for (int64_t h = 0; h < img.height; ++h)
      for (int64_t w = 0; w < half; ++w)
        for (int64_t c = 0; c < img.channels; ++c) {
          left.at(h, w, c) = img.at(h, w, c);
          right.at(h, w, c) = img.at(h, w + half, c);
        }
    s.x = image_to_tensor<T>(left);
    s.y = image_to_tensor<T>(right);
  } else {
    ImageU8 a = png_read_file((fs::path(m.root) / e.a).string());
    ImageU8 b = png_read_file((fs::path(m.root) / e.b).string());
    if (a.width != b.width || a.height != b.height)
      throw Error("decode", "pair '" + e.a + "' / '" + e.b + "' sizes differ");
    s.x = image_to_tensor<T>(a);
    s.y = image_to_tensor<T>(b);
  }
  return s;
}

// Scans root for *.png (sorted for determinism), verifies each file decodes,
// then splits by a seeded shuffle. Undecodable files are reported together.
inline std::pair<DatasetManifest, DatasetManifest> prepare_split(const std::string& root,
                                                                 PairLayout layout,
                                                                 double train_frac,
                                                                 uint64_t seed) {
  namespace fs = std::filesystem;
  if (train_frac < 0.0 || train_frac > 1.0)
    throw Error("config", "split fraction must be in [0,1]");
  if (!fs::is_directory(root)) throw Error("io", "dataset root '" + root + "' is not a directory");

  std::vector<ManifestEntry> entries;
  std::string bad;
  if (layout == PairLayout::side_by_side) {
    std::vector<std::string> names;
    for (const auto& de : fs::directory_iterator(root))
      if (de.is_regular_file() && de.path().extension() == ".png")
        names.push_back(de.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) {
      try {
        ImageU8 img = png_read_file((fs::path(root) / n).string());
        if (img.width % 2 != 0) throw Error("decode", "odd width");
        entries.push_back({n, ""});
      } catch (const Error&) {
        bad += (bad.empty() ? "" : ", ") + n;
      }
    }
  } else {
    const fs::path a_dir = fs::path(root) / "A", b_dir = fs::path(root) / "B";
    if (!fs::is_directory(a_dir) || !fs::is_directory(b_dir))
      throw Error("io", "two_folders layout expects '" + root + "/A' and '" + root + "/B'");
    std::vector<std::string> names;
    for (const auto& de : fs::directory_iterator(a_dir))
      if (de.is_regular_file() && de.path().extension() == ".png")
        names.push_back(de.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) {
      try {
        png_read_file((a_dir / n).string());
        png_read_file((b_dir / n).string());
        entries.push_back({"A/" + n, "B/" + n});
      } catch (const Error&) {
        bad += (bad.empty() ? "" : ", ") + n;
      }
    }
  }
  if (entries.empty())
    throw Error("io", "no decodable .png pairs under '" + root + "'" +
                          (bad.empty() ? "" : " (rejected: " + bad + ")"));
  if (!bad.empty()) throw Error("decode", "undecodable files under '" + root + "': " + bad);

  RngState rng(seed);
  for (size_t i = entries.size(); i > 1; --i)
    std::swap(entries[i - 1], entries[size_t(rng.uniform() * double(i))]);

  const size_t n_train = size_t(std::llround(train_frac * double(entries.size())));
  DatasetManifest train{root, layout, {entries.begin(), entries.begin() + n_train}};
  DatasetManifest test{root, layout, {entries.begin() + n_train, entries.end()}};
  return {train, test};
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentConfig {
  bool jitter = true;
  bool mirror = true;
  int64_t load_size = 286;  // resize target before the random crop
  int64_t crop_size = 256;  // final training extent

  void validate() const {
    if (load_size < crop_size) throw Error("config", "load_size must be >= crop_size");
    if (crop_size < 1) throw Error("config", "crop_size must be >= 1");
  }
};

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& t, int64_t out_h, int64_t out_w) {
  if (t.ndim() != 3) throw Error("shape", "bilinear_resize expects [C,H,W]");
  const int64_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  if (out_h == H && out_w == W) return t.clone();
  Tensor<T> out = Tensor<T>::zeros({C, out_h, out_w});
  const double sh = double(H) / double(out_h), sw = double(W) / double(out_w);
  for (int64_t c = 0; c < C; ++c)
    for (int64_t oh = 0; oh < out_h; ++oh) {
      double fy = (double(oh) + 0.5) * sh - 0.5;
      fy = std::max(0.0, std::min(fy, double(H - 1)));
      const int64_t y0 = int64_t(fy), y1 = std::min(y0 + 1, H - 1);
      const double wy = fy - double(y0);
      for (int64_t ow = 0; ow < out_w; ++ow) {
        double fx = (double(ow) + 0.5) * sw - 0.5;
        fx = std::max(0.0, std::min(fx, double(W - 1)));
        const int64_t x0 = int64_t(fx), x1 = std::min(x0 + 1, W - 1);
        const double wx = fx - double(x0);
        const double v00 = double(t.data()[(c * H + y0) * W + x0]);
        const double v01 = double(t.data()[(c * H + y0) * W + x1]);
        const double v10 = double(t.data()[(c * H + y1) * W + x0]);
        const double v11 = double(t.data()[(c * H + y1) * W + x1]);
        out.data()[(c * out_h + oh) * out_w + ow] =
            T((1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
      }
    }
  return out;
}

namespace detail {
template <typename T>
Tensor<T> crop(const Tensor<T>& t, int64_t oy, int64_t ox, int64_t size) {
  const int64_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  Tensor<T> out = Tensor<T>::zeros({C, size, size});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < size; ++h)
      std::copy_n(t.data() + (c * H + h + oy) * W + ox, size,
                  out.data() + (c * size + h) * size);
  return out;
}

template <typename T>
Tensor<T> mirror_w(const Tensor<T>& t) {
  const int64_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  Tensor<T> out = Tensor<T>::zeros(t.shape());
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < H; ++h)
      for (int64_t w = 0; w < W; ++w)
        out.data()[(c * H + h) * W + w] = t.data()[(c * H + h) * W + (W - 1 - w)];
  return out;
}
}  // namespace detail

// One shared geometric transform for x and y: bilinear resize to load_size,
// a single random crop back to crop_size, and a single coin-flip horizontal
// mirror. Draw order is fixed (crop y, crop x, coin) for determinism.
template <typename T>
PairedSample<T> jitter_and_mirror(const PairedSample<T>& s, const AugmentConfig& cfg,
                                  RngState& rng) {
  cfg.validate();
  PairedSample<T> out;
  out.id = s.id;
  out.x = s.x;
  out.y = s.y;
  if (cfg.jitter) {
    out.x = bilinear_resize(out.x, cfg.load_size, cfg.load_size);
    out.y = bilinear_resize(out.y, cfg.load_size, cfg.load_size);
    const int64_t span = cfg.load_size - cfg.crop_size + 1;
    const int64_t oy = int64_t(rng.uniform() * double(span));
    const int64_t ox = int64_t(rng.uniform() * double(span));
    out.x = detail::crop(out.x, oy, ox, cfg.crop_size);
    out.y = detail::crop(out.y, oy, ox, cfg.crop_size);
  }
  if (cfg.mirror && rng.uniform() < 0.5) {
    out.x = detail::mirror_w(out.x);
    out.y = detail::mirror_w(out.y);
  }
  return out;
}

}  // namespace im2im

#endif  // IM2IM_DATA_HPP
