#ifndef IM2IM_PNG_IO_HPP
#define IM2IM_PNG_IO_HPP

// 8-bit RGB / grayscale PNG codec boundary (libpng underneath) and the
// u8 <-> [-1,1] value mapping used everywhere images meet tensors.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "im2im/tensor.hpp"

namespace im2im {

// Row-major HWC, 8 bits per sample, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
  int64_t width = 0;
  int64_t height = 0;
  int64_t channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t& at(int64_t h, int64_t w, int64_t c) {
    return pixels[size_t((h * width + w) * channels + c)];
  }
  uint8_t at(int64_t h, int64_t w, int64_t c) const {
    return pixels[size_t((h * width + w) * channels + c)];
  }
};

namespace detail {

struct PngReadCursor {
  const uint8_t* data;
  size_t size;
  size_t pos;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->size) {
    png_error(png, "truncated stream");
    return;
  }
  std::memcpy(out, cur->data + cur->pos, n);
  cur->pos += n;
}

inline void png_mem_write(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

inline void png_noflush(png_structp) {}

}  // namespace detail

inline ImageU8 png_decode(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error("decode", "not a PNG stream");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("decode", "libpng allocation failure");
  }

  ImageU8 img;
  std::vector<png_bytep> rows;
  detail::PngReadCursor cursor{bytes.data(), bytes.size(), 0};
  bool failed = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_set_read_fn(png, &cursor, detail::png_mem_read);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw Error("decode", "unsupported bit depth 16 (8-bit PNGs only)");
    }
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    (void)png_set_interlace_handling(png);
    png_read_update_info(png, info);

    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.channels = png_get_channels(png, info);
    if (img.channels != 1 && img.channels != 3) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw Error("decode", "unsupported channel count " + std::to_string(img.channels));
    }
    img.pixels.resize(size_t(img.width * img.height * img.channels));
    rows.resize(size_t(img.height));
    for (int64_t h = 0; h < img.height; ++h)
      rows[size_t(h)] = img.pixels.data() + h * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (failed) throw Error("decode", "malformed PNG stream");
  return img;
}

inline std::vector<uint8_t> png_encode(const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw Error("encode", "PNG encoder supports 1 or 3 channels");
  if (img.width < 1 || img.height < 1) throw Error("encode", "empty image");
  if (int64_t(img.pixels.size()) != img.width * img.height * img.channels)
    throw Error("encode", "pixel buffer size does not match dimensions");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("encode", "libpng allocation failure");
  }

  std::vector<uint8_t> out;
  bool failed = false;
  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_set_write_fn(png, &out, detail::png_mem_write, detail::png_noflush);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int64_t h = 0; h < img.height; ++h)
      png_write_row(png, const_cast<png_bytep>(img.pixels.data() + h * img.width * img.channels));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  if (failed) throw Error("encode", "PNG encode failure");
  return out;
}

inline ImageU8 png_read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open '" + path + "' for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  try {
    return png_decode(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (file '" + path + "')");
  }
}

inline void png_write_file(const std::string& path, const ImageU8& img) {
  auto bytes = png_encode(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw Error("io", "short write to '" + path + "'");
}

// u8 -> [-1,1]: v / 127.5 - 1 (0 -> -1, 255 -> +1, exact at the endpoints).
template <typename T>
inline T u8_to_unit(uint8_t v) {
  return T(double(v) / 127.5 - 1.0);
}

// [-1,1] -> u8, rounding to nearest; inverse of u8_to_unit on all 256 values.
template <typename T>
inline uint8_t unit_to_u8(T v) {
  const double u = (double(v) + 1.0) * 127.5;
  const long r = std::lround(u);
  return uint8_t(r < 0 ? 0 : (r > 255 ? 255 : r));
}

template <typename T>
Tensor<T> image_to_tensor(const ImageU8& img) {
  Tensor<T> t = Tensor<T>::zeros({img.channels, img.height, img.width});
  for (int64_t c = 0; c < img.channels; ++c)
    for (int64_t h = 0; h < img.height; ++h)
      for (int64_t w = 0; w < img.width; ++w)
        t.values()[size_t((c * img.height + h) * img.width + w)] = u8_to_unit<T>(img.at(h, w, c));
  return t;
}

// Accepts [C,H,W] or [1,C,H,W] with C in {1,3}.
template <typename T>
ImageU8 tensor_to_image(const Tensor<T>& t) {
  Shape s = t.shape();
  if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 3 || (s[0] != 1 && s[0] != 3))
    throw Error("shape", "tensor_to_image expects [C,H,W] with 1 or 3 channels, got " +
                             shape_str(t.shape()));
  ImageU8 img;
  img.channels = s[0];
  img.height = s[1];
  img.width = s[2];
  img.pixels.resize(size_t(img.channels * img.height * img.width));
  for (int64_t c = 0; c < img.channels; ++c)
    for (int64_t h = 0; h < img.height; ++h)
      for (int64_t w = 0; w < img.width; ++w)
        img.at(h, w, c) = unit_to_u8(t.data()[(c * img.height + h) * img.width + w]);
  return img;
}

// Horizontal strip of equally sized images (sample grids, side-by-side pairs).
inline ImageU8 hconcat_images(const std::vector<ImageU8>& images) {
  if (images.empty()) throw Error("shape", "hconcat_images of nothing");
  ImageU8 out;
  out.height = images[0].height;
  out.channels = images[0].channels;
  for (const auto& img : images) {
    if (img.height != out.height || img.channels != out.channels)
      throw Error("shape", "hconcat_images requires equal heights and channel counts");
    out.width += img.width;
  }
  out.pixels.resize(size_t(out.width * out.height * out.channels));
  int64_t x0 = 0;
  for (const auto& img : images) {
    for (int64_t h = 0; h < img.height; ++h)
      for (int64_t w = 0; w < img.width; ++w)
        for (int64_t c = 0; c < img.channels; ++c)
          out.at(h, x0 + w, c) = img.at(h, w, c);
    x0 += img.width;
  }
  return out;
}

// Crops a horizontal panel out of an n-panel strip.
inline ImageU8 hsplit_panel(const ImageU8& strip, int64_t index, int64_t n_panels) {
  if (n_panels < 1 || strip.width % n_panels != 0)
    throw Error("shape", "strip width not divisible into panels");
  const int64_t pw = strip.width / n_panels;
  ImageU8 out;
  out.width = pw;
  out.height = strip.height;
  out.channels = strip.channels;
  out.pixels.resize(size_t(pw * out.height * out.channels));
  for (int64_t h = 0; h < out.height; ++h)
    for (int64_t w = 0; w < pw; ++w)
      for (int64_t c = 0; c < out.channels; ++c)
        out.at(h, w, c) = strip.at(h, index * pw + w, c);
  return out;
}

}  // namespace im2im

#endif  // IM2IM_PNG_IO_HPP
