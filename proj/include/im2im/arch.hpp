#ifndef IM2IM_ARCH_HPP
#define IM2IM_ARCH_HPP

// Ck / CDk architecture notation, the four patch-discriminator presets, and
// closed-form receptive-field / parameter / shape algebra over layer stacks.

#include <cstdint>
#include <string>
#include <vector>

#include "im2im/tensor.hpp"

namespace im2im {

enum class Activation { leaky_relu_02, relu, tanh, sigmoid, none };

struct LayerSpec {
  bool dropout = false;  // CD layers carry rate-0.5 dropout
  int64_t filters = 0;
  int stride = 2;
  int64_t kernel = 4;
  int pad = 1;
  bool batchnorm = true;
  Activation activation = Activation::leaky_relu_02;

  bool operator==(const LayerSpec&) const = default;
};

struct HeadSpec {
  int64_t filters = 1;
  int64_t kernel = 4;
  int stride = 1;
  int pad = 1;
  Activation activation = Activation::sigmoid;
  bool transpose = false;

  bool operator==(const HeadSpec&) const = default;
};

struct ArchSpec {
  std::vector<LayerSpec> layers;
  HeadSpec head;

  bool operator==(const ArchSpec&) const = default;
};

struct ReceptiveField {
  int64_t size = 1;
  int64_t jump = 1;  // product of strides: spacing of output units in input pixels
};

// Parses "C64-C128-CD256" style strings with the discriminator role defaults:
// 4x4 kernels, stride 2 on every listed layer except the last (stride 1),
// batchnorm everywhere but the first layer, leaky ReLU 0.2, and a 1-filter
// 4x4 stride-1 sigmoid head.
inline ArchSpec parse_arch(const std::string& text) {
  ArchSpec spec;
  size_t pos = 0;
  int token_index = 0;
  while (pos <= text.size()) {
    size_t dash = text.find('-', pos);
    std::string tok = text.substr(pos, dash == std::string::npos ? dash : dash - pos);
    ++token_index;
    LayerSpec layer;
    size_t digits = 0;
    if (tok.size() >= 2 && tok[0] == 'C') {
      if (tok[1] == 'D') {
        layer.dropout = true;
        digits = 2;
      } else {
        digits = 1;
      }
    }
    if (digits == 0 || digits >= tok.size())
      throw Error("parse", "unknown token '" + tok + "' at position " +
                               std::to_string(token_index));
    int64_t filters = 0;
    for (size_t i = digits; i < tok.size(); ++i) {
      if (tok[i] < '0' || tok[i] > '9')
        throw Error("parse", "unknown token '" + tok + "' at position " +
                                 std::to_string(token_index));
      filters = filters * 10 + (tok[i] - '0');
    }
    if (filters <= 0)
      throw Error("parse", "non-positive filter count in token '" + tok + "' at position " +
                               std::to_string(token_index));
    layer.filters = filters;
    spec.layers.push_back(layer);
    if (dash == std::string::npos) break;
    pos = dash + 1;
  }
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    spec.layers[i].stride = (i + 1 == spec.layers.size()) ? 1 : 2;
    spec.layers[i].batchnorm = (i != 0);
  }
  return spec;
}

// Canonical textual form: the C/CD kind with the filter count, dash-joined.
inline std::string print_arch(const ArchSpec& spec) {
  std::string out;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    if (i) out += '-';
    out += spec.layers[i].dropout ? "CD" : "C";
    out += std::to_string(spec.layers[i].filters);
  }
  return out;
}

// Backward recurrence r_in = (r_out - 1) * stride + kernel over every layer
// including the head conv.
inline ReceptiveField receptive_field(const ArchSpec& spec) {
  ReceptiveField rf;
  rf.size = (rf.size - 1) * spec.head.stride + spec.head.kernel;
  rf.jump = spec.head.stride;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    rf.size = (rf.size - 1) * it->stride + it->kernel;
    rf.jump *= it->stride;
  }
  return rf;
}

// Exact parameter count: conv weights + biases + batchnorm affine pairs.
inline int64_t param_count(const ArchSpec& spec, int64_t in_channels) {
  int64_t total = 0;
  int64_t prev = in_channels;
  for (const LayerSpec& l : spec.layers) {
    total += prev * l.filters * l.kernel * l.kernel + l.filters;
    if (l.batchnorm) total += 2 * l.filters;
    prev = l.filters;
  }
  total += prev * spec.head.filters * spec.head.kernel * spec.head.kernel + spec.head.filters;
  return total;
}

namespace detail {
inline int64_t conv_out_extent(int64_t in, int64_t k, int stride, int pad, bool transpose) {
  const int64_t out = transpose ? (in - 1) * stride - 2 * pad + k
                                : (in + 2 * pad - k) / stride + 1;
  if (out < 1 || (!transpose && in + 2 * pad < k))
    throw Error("shape", "layer output extent < 1 (input " + std::to_string(in) + ")");
  return out;
}
}  // namespace detail

// Output shapes after each listed layer and the head, for an NCHW input.
inline std::vector<Shape> output_shapes(const ArchSpec& spec, const Shape& in_shape) {
  if (in_shape.size() != 4) throw Error("shape", "output_shapes expects NCHW input shape");
  std::vector<Shape> shapes;
  int64_t c = in_shape[1], h = in_shape[2], w = in_shape[3];
  for (const LayerSpec& l : spec.layers) {
    h = detail::conv_out_extent(h, l.kernel, l.stride, l.pad, false);
    w = detail::conv_out_extent(w, l.kernel, l.stride, l.pad, false);
    c = l.filters;
    shapes.push_back({in_shape[0], c, h, w});
  }
  h = detail::conv_out_extent(h, spec.head.kernel, spec.head.stride, spec.head.pad,
                              spec.head.transpose);
  w = detail::conv_out_extent(w, spec.head.kernel, spec.head.stride, spec.head.pad,
                              spec.head.transpose);
  shapes.push_back({in_shape[0], spec.head.filters, h, w});
  return shapes;
}

inline Shape output_shape(const ArchSpec& spec, const Shape& in_shape) {
  return output_shapes(spec, in_shape).back();
}

// ---------------------------------------------------------------------------
// Network configurations

enum class GeneratorVariant { unet, encoder_decoder };

struct GeneratorConfig {
  GeneratorVariant variant = GeneratorVariant::unet;
  int depth = 8;  // strided convs per side; input extent must be a multiple of 2^depth
  int64_t in_channels = 3;
  int64_t out_channels = 3;
  int64_t base_filters = 64;

  // Encoder output widths: base * min(2^i, 8), capped as in the full-scale
  // C64-C128-C256-C512-C512-C512-C512-C512 stack.
  int64_t encoder_width(int i) const {
    int64_t mult = 1;
    for (int k = 0; k < i && mult < 8; ++k) mult *= 2;
    return base_filters * std::min<int64_t>(mult, 8);
  }

  void validate() const {
    if (depth < 2 || depth > 8) throw Error("config", "generator depth must be in [2, 8]");
    if (in_channels < 1 || out_channels < 1) throw Error("config", "channel counts must be >= 1");
    if (base_filters < 1) throw Error("config", "base_filters must be >= 1");
  }
};

struct DiscriminatorConfig {
  int patch = 70;  // receptive field: 1, 16, 70 or 286
  bool conditional = true;
  int64_t x_channels = 3;
  int64_t y_channels = 3;
  int64_t base_filters = 64;

  int64_t in_channels() const { return conditional ? x_channels + y_channels : y_channels; }

  void validate() const {
    if (patch != 1 && patch != 16 && patch != 70 && patch != 286)
      throw Error("config", "discriminator patch size must be one of 1, 16, 70, 286");
    if (base_filters < 1) throw Error("config", "base_filters must be >= 1");
  }
};

// The four appendix discriminators. Listed layers run at stride 2 except the
// final one (stride 1); the 1-filter head conv is stride 1. The 1x1 variant
// uses 1x1 kernels throughout.
inline ArchSpec discriminator_spec(const DiscriminatorConfig& cfg) {
  cfg.validate();
  const int64_t f = cfg.base_filters;
  ArchSpec spec;
  switch (cfg.patch) {
    case 1:
      spec = parse_arch("C" + std::to_string(f) + "-C" + std::to_string(2 * f));
      for (LayerSpec& l : spec.layers) {
        l.kernel = 1;
        l.stride = 1;
        l.pad = 0;
      }
      spec.head.kernel = 1;
      spec.head.stride = 1;
      spec.head.pad = 0;
      break;
    case 16:
      spec = parse_arch("C" + std::to_string(f) + "-C" + std::to_string(2 * f));
      break;
    case 70:
      spec = parse_arch("C" + std::to_string(f) + "-C" + std::to_string(2 * f) + "-C" +
                        std::to_string(4 * f) + "-C" + std::to_string(8 * f));
      break;
    case 286:
      spec = parse_arch("C" + std::to_string(f) + "-C" + std::to_string(2 * f) + "-C" +
                        std::to_string(4 * f) + "-C" + std::to_string(8 * f) + "-C" +
                        std::to_string(8 * f) + "-C" + std::to_string(8 * f));
      break;
  }
  return spec;
}

// Appendix notation for the generator halves. The encoder string lists output
// widths; the decoder string lists the per-layer input widths, which is where
// the U-Net's doubled (concatenated) channel counts show up.
inline std::string generator_encoder_string(const GeneratorConfig& cfg) {
  std::string s;
  for (int i = 0; i < cfg.depth; ++i) {
    if (i) s += '-';
    s += "C" + std::to_string(cfg.encoder_width(i));
  }
  return s;
}

// One row per layer of a network table: the arch CLI prints these and the
// tests cross-check them against live forwards.
struct LayerRow {
  std::string name;
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t out_extent = 0;  // spatial size for a square input
  int64_t params = 0;      // conv weights + bias + batchnorm affine
  bool dropout = false;
};

inline std::vector<LayerRow> generator_layer_table(const GeneratorConfig& cfg,
                                                   int64_t input_size) {
  cfg.validate();
  const int64_t div = int64_t(1) << cfg.depth;
  if (input_size % div != 0 || input_size < div)
    throw Error("size", "generator input extent must be a positive multiple of 2^depth = " +
                            std::to_string(div));
  const bool unet = cfg.variant == GeneratorVariant::unet;
  std::vector<LayerRow> rows;
  int64_t prev = cfg.in_channels, extent = input_size;
  for (int i = 0; i < cfg.depth; ++i) {
    LayerRow r;
    r.name = "enc" + std::to_string(i);
    r.in_channels = prev;
    r.out_channels = cfg.encoder_width(i);
    extent /= 2;
    r.out_extent = extent;
    r.params = prev * r.out_channels * 16 + r.out_channels;
    if (i != 0 && i != cfg.depth - 1) r.params += 2 * r.out_channels;  // batchnorm affine
    rows.push_back(r);
    prev = r.out_channels;
  }
  for (int j = 0; j < cfg.depth; ++j) {
    const bool head = (j == cfg.depth - 1);
    LayerRow r;
    r.name = head ? "head" : "dec" + std::to_string(j);
    r.in_channels = (j == 0) ? prev : (unet ? 2 * prev : prev);
    r.out_channels = head ? cfg.out_channels : cfg.encoder_width(cfg.depth - 2 - j);
    extent *= 2;
    r.out_extent = extent;
    r.params = r.in_channels * r.out_channels * 16 + r.out_channels;
    if (!head) r.params += 2 * r.out_channels;
    r.dropout = !head && j < 3;
    rows.push_back(r);
    prev = r.out_channels;
  }
  return rows;
}

inline int64_t generator_param_count(const GeneratorConfig& cfg) {
  int64_t total = 0;
  for (const LayerRow& r : generator_layer_table(cfg, int64_t(1) << cfg.depth))
    total += r.params;
  return total;
}

inline std::string generator_decoder_string(const GeneratorConfig& cfg) {
  std::string s;
  if (cfg.variant == GeneratorVariant::unet) {
    // Input widths of all depth ups (the head included as the final entry).
    int64_t prev_out = cfg.encoder_width(cfg.depth - 1);  // bottleneck width
    for (int j = 0; j < cfg.depth; ++j) {
      const bool head = (j == cfg.depth - 1);
      const int64_t in = (j == 0) ? prev_out : 2 * prev_out;
      if (j) s += '-';
      s += (j < 3 && !head) ? "CD" : "C";
      s += std::to_string(in);
      if (!head) prev_out = cfg.encoder_width(cfg.depth - 2 - j);
    }
  } else {
    // Output widths of the depth-1 ups before the head.
    for (int j = 0; j < cfg.depth - 1; ++j) {
      if (j) s += '-';
      s += (j < 3) ? "CD" : "C";
      s += std::to_string(cfg.encoder_width(cfg.depth - 2 - j));
    }
  }
  return s;
}

}  // namespace im2im

#endif  // IM2IM_ARCH_HPP
