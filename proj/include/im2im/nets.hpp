#ifndef IM2IM_NETS_HPP
#define IM2IM_NETS_HPP

// The two network families: U-Net / encoder-decoder generators and the patch
// discriminator stack. Builders are pure given an rng; parameters are plain
// tensors enumerated by name for the optimizer and checkpoints.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "im2im/arch.hpp"
#include "im2im/layers.hpp"
#include "im2im/tensor.hpp"

namespace im2im {

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
inline void set_requires_grad(NamedTensors<T>& params, bool value) {
  for (auto& [name, t] : params) t.set_requires_grad(value);
}

struct GenForwardOptions {
  bool dropout_active = true;  // stays true at inference; dropout is the noise source
  bool zero_skips = false;     // test hook: isolate the skip contribution
};

template <typename T>
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, RngState& rng) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.depth;
    const bool unet = cfg_.variant == GeneratorVariant::unet;
    int64_t prev = cfg_.in_channels;
    for (int i = 0; i < d; ++i) {
      EncLayer l;
      const int64_t out = cfg_.encoder_width(i);
      l.conv = Conv2dParams<T>::make(prev, out, 4, 2, 1, rng);
      // No batchnorm on the first encoder layer, nor on the bottleneck
      // (batch-1 training would zero the 1x1 activations otherwise).
      if (i != 0 && i != d - 1) l.bn = BatchNormParams<T>::make_random(out, rng);
      enc_.push_back(std::move(l));
      prev = out;
    }
    for (int j = 0; j < d; ++j) {
      DecLayer l;
      const bool head = (j == d - 1);
      const int64_t in = (j == 0) ? prev : (unet ? 2 * prev : prev);
      const int64_t out = head ? cfg_.out_channels : cfg_.encoder_width(d - 2 - j);
      l.conv = Conv2dParams<T>::make(in, out, 4, 2, 1, rng, /*transpose=*/true);
      if (!head) l.bn = BatchNormParams<T>::make_random(out, rng);
      l.dropout = (!head && j < 3);
      dec_.push_back(std::move(l));
      prev = out;
    }
  }

  const GeneratorConfig& config() const { return cfg_; }

  // Fully convolutional: any input whose extents are positive multiples of
  // 2^depth is accepted; training-size inputs reach a 1x1 bottleneck.
  Tensor<T> forward(const Tensor<T>& x, RngState& rng, const GenForwardOptions& opts = {}) {
    if (x.ndim() != 4) throw Error("shape", "generator input must be NCHW");
    if (x.dim(1) != cfg_.in_channels)
      throw Error("shape", "generator expects " + std::to_string(cfg_.in_channels) +
                               " input channels, got " + std::to_string(x.dim(1)));
    const int64_t div = int64_t(1) << cfg_.depth;
    if (x.dim(2) % div != 0 || x.dim(3) % div != 0 || x.dim(2) < div || x.dim(3) < div)
      throw Error("size", "generator input extent must be a positive multiple of 2^depth = " +
                              std::to_string(div) + ", got " + std::to_string(x.dim(2)) + "x" +
                              std::to_string(x.dim(3)));

    const bool unet = cfg_.variant == GeneratorVariant::unet;
    const int d = cfg_.depth;
    std::vector<Tensor<T>> acts;
    Tensor<T> h = x;
    for (int i = 0; i < d; ++i) {
      h = conv2d(h, enc_[i].conv);
      if (enc_[i].bn) h = batchnorm2d(h, *enc_[i].bn, BnMode::test_batch_stats);
      h = leaky_relu(h, T(0.2));
      acts.push_back(h);
    }
    DropoutState drop{0.5, opts.dropout_active};
    for (int j = 0; j < d; ++j) {
      const bool head = (j == d - 1);
      h = conv_transpose2d(h, dec_[j].conv);
      if (dec_[j].bn) h = batchnorm2d(h, *dec_[j].bn, BnMode::test_batch_stats);
      if (dec_[j].dropout) h = dropout(h, drop, rng);
      if (head) {
        h = im2im::tanh(h);
      } else {
        h = relu(h);
        if (unet) {
          Tensor<T> skip = acts[size_t(d - 2 - j)];
          if (opts.zero_skips) skip = Tensor<T>::zeros(skip.shape());
          h = concat_channels(h, skip);
        }
      }
    }
    return h;
  }

  NamedTensors<T> named_parameters() {
    NamedTensors<T> out;
    for (size_t i = 0; i < enc_.size(); ++i) {
      const std::string p = "g.enc" + std::to_string(i);
      out.emplace_back(p + ".w", enc_[i].conv.weight);
      out.emplace_back(p + ".b", enc_[i].conv.bias);
      if (enc_[i].bn) {
        out.emplace_back(p + ".bn.g", enc_[i].bn->gamma);
        out.emplace_back(p + ".bn.b", enc_[i].bn->beta);
      }
    }
    for (size_t j = 0; j < dec_.size(); ++j) {
      const std::string p = "g.dec" + std::to_string(j);
      out.emplace_back(p + ".w", dec_[j].conv.weight);
      out.emplace_back(p + ".b", dec_[j].conv.bias);
      if (dec_[j].bn) {
        out.emplace_back(p + ".bn.g", dec_[j].bn->gamma);
        out.emplace_back(p + ".bn.b", dec_[j].bn->beta);
      }
    }
    return out;
  }

  // Weight access for the zero-skip / severed-skip equivalence checks.
  Conv2dParams<T>& decoder_conv(int j) { return dec_[size_t(j)].conv; }
  BatchNormParams<T>* decoder_bn(int j) {
    return dec_[size_t(j)].bn ? &*dec_[size_t(j)].bn : nullptr;
  }
  Conv2dParams<T>& encoder_conv(int i) { return enc_[size_t(i)].conv; }
  BatchNormParams<T>* encoder_bn(int i) {
    return enc_[size_t(i)].bn ? &*enc_[size_t(i)].bn : nullptr;
  }

 private:
  struct EncLayer {
    Conv2dParams<T> conv;
    std::optional<BatchNormParams<T>> bn;
  };
  struct DecLayer {
    Conv2dParams<T> conv;
    std::optional<BatchNormParams<T>> bn;
    bool dropout = false;
  };
  GeneratorConfig cfg_;
  std::vector<EncLayer> enc_;
  std::vector<DecLayer> dec_;  // final entry is the output head (tanh, no bn)
};

template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, RngState& rng)
      : Discriminator(discriminator_spec(cfg), cfg.in_channels(), rng) {
    cfg_ = cfg;
    // Inputs smaller than the receptive field are zero-padded up to it
    // (the 286x286 discriminator on 256x256 images).
    min_input_ = receptive_field(spec_).size;
  }

  Discriminator(const ArchSpec& spec, int64_t in_channels, RngState& rng)
      : spec_(spec), in_channels_(in_channels) {
    int64_t prev = in_channels;
    for (const LayerSpec& ls : spec_.layers) {
      Layer l;
      l.conv = Conv2dParams<T>::make(prev, ls.filters, ls.kernel, ls.stride, ls.pad, rng);
      if (ls.batchnorm) l.bn = BatchNormParams<T>::make_random(ls.filters, rng);
      l.act = ls.activation;
      layers_.push_back(std::move(l));
      prev = ls.filters;
    }
    head_.conv = Conv2dParams<T>::make(prev, spec_.head.filters, spec_.head.kernel,
                                       spec_.head.stride, spec_.head.pad, rng);
    head_.act = spec_.head.activation;
  }

  const ArchSpec& spec() const { return spec_; }
  int64_t in_channels() const { return in_channels_; }
  const std::optional<DiscriminatorConfig>& config() const { return cfg_; }

  // Probability map in (0,1); one value per N x N input patch.
  Tensor<T> forward(const Tensor<T>& x) {
    if (x.ndim() != 4) throw Error("shape", "discriminator input must be NCHW");
    if (x.dim(1) != in_channels_)
      throw Error("shape", "discriminator expects " + std::to_string(in_channels_) +
                               " input channels, got " + std::to_string(x.dim(1)));
    Tensor<T> h = x;
    if (min_input_ > 0 && (h.dim(2) < min_input_ || h.dim(3) < min_input_)) {
      const int64_t need = std::max(min_input_ - h.dim(2), min_input_ - h.dim(3));
      h = pad2d(h, (need + 1) / 2);
    }
    for (Layer& l : layers_) {
      h = conv2d(h, l.conv);
      if (l.bn) h = batchnorm2d(h, *l.bn, BnMode::test_batch_stats);
      h = apply_activation(h, l.act);
    }
    h = conv2d(h, head_.conv);
    return apply_activation(h, head_.act);
  }

  NamedTensors<T> named_parameters() {
    NamedTensors<T> out;
    for (size_t i = 0; i < layers_.size(); ++i) {
      const std::string p = "d.l" + std::to_string(i);
      out.emplace_back(p + ".w", layers_[i].conv.weight);
      out.emplace_back(p + ".b", layers_[i].conv.bias);
      if (layers_[i].bn) {
        out.emplace_back(p + ".bn.g", layers_[i].bn->gamma);
        out.emplace_back(p + ".bn.b", layers_[i].bn->beta);
      }
    }
    out.emplace_back("d.head.w", head_.conv.weight);
    out.emplace_back("d.head.b", head_.conv.bias);
    return out;
  }

 private:
  static Tensor<T> apply_activation(const Tensor<T>& h, Activation a) {
    switch (a) {
      case Activation::leaky_relu_02:
        return leaky_relu(h, T(0.2));
      case Activation::relu:
        return relu(h);
      case Activation::tanh:
        return im2im::tanh(h);
      case Activation::sigmoid:
        return sigmoid(h);
      case Activation::none:
        return h;
    }
    return h;
  }

  struct Layer {
    Conv2dParams<T> conv;
    std::optional<BatchNormParams<T>> bn;
    Activation act = Activation::leaky_relu_02;
  };
  ArchSpec spec_;
  int64_t in_channels_ = 0;
  int64_t min_input_ = 0;
  std::optional<DiscriminatorConfig> cfg_;
  std::vector<Layer> layers_;
  Layer head_;
};

template <typename T>
inline int64_t total_parameter_count(NamedTensors<T> params) {
  int64_t n = 0;
  for (auto& [name, t] : params) n += t.size();
  return n;
}

}  // namespace im2im

#endif  // IM2IM_NETS_HPP
