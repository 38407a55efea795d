#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "orfseg/errors.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

namespace detail {

struct PngReadResult {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> bytes;
};

// Reads an 8-bit grayscale or RGB PNG. Anything else (16-bit, palette,
// alpha) is rejected rather than converted.
inline PngReadResult read_png8(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw io_error("cannot read PNG '" + path + "': " + msg);
  }
  int channels;
  if (image.format == PNG_FORMAT_GRAY) {
    channels = 1;
  } else if (image.format == PNG_FORMAT_RGB) {
    channels = 3;
  } else {
    png_image_free(&image);
    throw io_error("unsupported bit depth or color type in '" + path +
                   "' (need 8-bit grayscale or RGB)");
  }
  PngReadResult out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = channels;
  out.bytes.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw io_error("PNG decode failed for '" + path + "': " + msg);
  }
  return out;
}

inline void write_png8(const std::string& path, int width, int height,
                       int channels, const std::uint8_t* bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes, 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw io_error("cannot write PNG '" + path + "': " + msg);
  }
}

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Intensities scaled to [0,1] by dividing by 255.
inline Image load_image(const std::string& path) {
  detail::PngReadResult r = detail::read_png8(path);
  Image img;
  img.width = r.width;
  img.height = r.height;
  img.channels = r.channels;
  img.data.resize(r.bytes.size());
  for (std::size_t i = 0; i < r.bytes.size(); ++i)
    img.data[i] = static_cast<float>(r.bytes[i]) / 255.0f;
  return img;
}

inline void save_image(const Image& img, const std::string& path) {
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(img.data[i] * 255.0f));
  detail::write_png8(path, img.width, img.height, img.channels, bytes.data());
}

// Masks are stored on disk as 8-bit grayscale PNG with values in {0, 255};
// any intermediate value is rejected, since it signals a belief map passed
// where a label was expected.
inline Mask load_mask(const std::string& path) {
  detail::PngReadResult r = detail::read_png8(path);
  if (r.channels != 1)
    throw io_error("mask PNG '" + path + "' must be grayscale");
  Mask m;
  m.width = r.width;
  m.height = r.height;
  m.data.resize(r.bytes.size());
  for (std::size_t i = 0; i < r.bytes.size(); ++i) {
    if (r.bytes[i] == 0) {
      m.data[i] = 0;
    } else if (r.bytes[i] == 255) {
      m.data[i] = 1;
    } else {
      throw io_error("mask PNG '" + path + "' contains value " +
                     std::to_string(r.bytes[i]) + " (only 0 and 255 are valid)");
    }
  }
  return m;
}

inline void save_mask(const Mask& m, const std::string& path) {
  std::vector<std::uint8_t> bytes(m.data.size());
  for (std::size_t i = 0; i < m.data.size(); ++i) bytes[i] = m.data[i] ? 255 : 0;
  detail::write_png8(path, m.width, m.height, 1, bytes.data());
}

// Quantized view for human inspection: round(p * 255).
inline void save_belief_png(const BeliefMap& b, const std::string& path) {
  std::vector<std::uint8_t> bytes(b.data.size());
  for (std::size_t i = 0; i < b.data.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(b.data[i] * 255.0f));
  detail::write_png8(path, b.width, b.height, 1, bytes.data());
}

inline constexpr char kBeliefMagic[8] = {'B', 'M', 'A', 'P', 'v', '1', '\0', '\0'};

// Lossless sidecar: 8-byte magic "BMAPv1\0\0", then width and height as
// little-endian u32, then row-major little-endian f32 samples.
inline void save_belief_f32(const BeliefMap& b, const std::string& path) {
  std::string out;
  out.reserve(16 + b.data.size() * 4);
  out.append(kBeliefMagic, 8);
  detail::put_u32le(out, static_cast<std::uint32_t>(b.width));
  detail::put_u32le(out, static_cast<std::uint32_t>(b.height));
  for (float v : b.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    detail::put_u32le(out, bits);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw io_error("write failed for '" + path + "'");
}

inline BeliefMap load_belief_f32(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kBeliefMagic, 8) != 0)
    throw io_error("'" + path + "' is not a belief map sidecar");
  BeliefMap b;
  b.width = static_cast<int>(detail::get_u32le(bytes.data() + 8));
  b.height = static_cast<int>(detail::get_u32le(bytes.data() + 12));
  std::size_t n = static_cast<std::size_t>(b.width) * b.height;
  if (bytes.size() != 16 + n * 4)
    throw io_error("belief map sidecar '" + path + "' has truncated payload");
  b.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = detail::get_u32le(bytes.data() + 16 + i * 4);
    std::memcpy(&b.data[i], &bits, 4);
  }
  return b;
}

}  // namespace orfseg
