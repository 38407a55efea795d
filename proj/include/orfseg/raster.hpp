#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "orfseg/errors.hpp"

namespace orfseg {

// Row-major, channel-interleaved intensities in [0,1]. Grayscale (1 channel)
// or RGB (3 channels). Immutable by convention once constructed.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  static Image filled(int width, int height, float value, int channels = 1) {
    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(width) * height * channels, value);
    return img;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  float at(int row, int col, int channel = 0) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }

  float& at(int row, int col, int channel = 0) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }

  // Rec. 601 luma for RGB; the sample itself for grayscale.
  float luminance(int row, int col) const {
    if (channels == 1) return at(row, col);
    return 0.299f * at(row, col, 0) + 0.587f * at(row, col, 1) + 0.114f * at(row, col, 2);
  }

  void validate() const {
    if (width < 0 || height < 0) throw validation_error("Image: negative dimensions");
    if (channels != 1 && channels != 3)
      throw validation_error("Image: channels must be 1 or 3");
    if (data.size() != static_cast<std::size_t>(width) * height * channels)
      throw validation_error("Image: data length != width*height*channels");
    for (float v : data)
      if (!(v >= 0.0f && v <= 1.0f))
        throw validation_error("Image: intensity outside [0,1]");
  }
};

// Binary label raster; values are exactly 0 or 1.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  static Mask filled(int width, int height, std::uint8_t value) {
    Mask m;
    m.width = width;
    m.height = height;
    m.data.assign(static_cast<std::size_t>(width) * height, value);
    return m;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  std::uint8_t at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  std::uint8_t& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  std::size_t positive_count() const {
    std::size_t n = 0;
    for (std::uint8_t v : data) n += v;
    return n;
  }

  bool operator==(const Mask& other) const = default;

  void validate() const {
    if (width < 0 || height < 0) throw validation_error("Mask: negative dimensions");
    if (data.size() != static_cast<std::size_t>(width) * height)
      throw validation_error("Mask: data length != width*height");
    for (std::uint8_t v : data)
      if (v > 1) throw validation_error("Mask: value not in {0,1}");
  }
};

// Per-pixel probability raster in [0,1].
struct BeliefMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  static BeliefMap filled(int width, int height, float value) {
    BeliefMap b;
    b.width = width;
    b.height = height;
    b.data.assign(static_cast<std::size_t>(width) * height, value);
    return b;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  float at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  float& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  bool operator==(const BeliefMap& other) const = default;

  void validate() const {
    if (width < 0 || height < 0) throw validation_error("BeliefMap: negative dimensions");
    if (data.size() != static_cast<std::size_t>(width) * height)
      throw validation_error("BeliefMap: data length != width*height");
    for (float v : data)
      if (!(v >= 0.0f && v <= 1.0f))
        throw validation_error("BeliefMap: value outside [0,1]");
  }
};

inline bool same_dimensions(const Mask& a, const Mask& b) {
  return a.width == b.width && a.height == b.height;
}

inline bool same_dimensions(const BeliefMap& a, const Mask& b) {
  return a.width == b.width && a.height == b.height;
}

}  // namespace orfseg
