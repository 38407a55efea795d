#pragma once

#include <array>
#include <cstdint>

#include "orfseg/errors.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

enum class BinarizeMethod { Otsu, Fixed };

struct BinarizeConfig {
  BinarizeMethod method = BinarizeMethod::Otsu;
  double fixed_threshold = 0.9;

  void validate() const {
    if (!(fixed_threshold >= 0.0 && fixed_threshold <= 1.0))
      throw validation_error("binarize: fixed_threshold must be in [0,1]");
  }
};

namespace detail {
inline int histogram_bin(float v) {
  int b = static_cast<int>(v * 256.0f);
  return b > 255 ? 255 : (b < 0 ? 0 : b);
}
}  // namespace detail

// Otsu's threshold over a 256-bin luminance histogram. Returns the real
// threshold t such that "luminance >= t" selects the upper class. Ties in
// the between-class variance go to the lowest split.
inline double otsu_threshold(const Image& img) {
  std::array<std::int64_t, 256> hist{};
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) ++hist[detail::histogram_bin(img.luminance(r, c))];

  std::int64_t total = static_cast<std::int64_t>(img.pixel_count());
  if (total == 0) throw validation_error("otsu_threshold: empty image");

  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

  double best_score = -1.0;
  int best_split = 0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[t]);
    if (w0 == 0.0) continue;
    double w1 = static_cast<double>(total) - w0;
    if (w1 == 0.0) break;
    sum0 += static_cast<double>(t) * hist[t];
    double mean0 = sum0 / w0;
    double mean1 = (sum_all - sum0) / w1;
    double score = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
    if (score > best_score) {
      best_score = score;
      best_split = t;
    }
  }
  // classes are bins [0..split] and [split+1..255]
  return static_cast<double>(best_split + 1) / 256.0;
}

// 1 marks the bright (background / pipe) pixels: mask(p) = 1 iff
// luminance(p) >= threshold.
inline Mask background_mask(const Image& patch, const BinarizeConfig& config) {
  config.validate();
  double threshold = config.method == BinarizeMethod::Otsu ? otsu_threshold(patch)
                                                           : config.fixed_threshold;
  Mask out;
  out.width = patch.width;
  out.height = patch.height;
  out.data.resize(patch.pixel_count());
  std::size_t i = 0;
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c)
      out.data[i++] = static_cast<double>(patch.luminance(r, c)) >= threshold ? 1 : 0;
  return out;
}

// Clears label positives that fall on background/pipe pixels:
// out(p) = label(p) * (1 - bg(p)).
inline Mask apply_background_mask(const Mask& label, const Mask& bg) {
  if (!same_dimensions(label, bg))
    throw validation_error("apply_background_mask: dimension mismatch");
  Mask out = label;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(label.data[i] & (1 - bg.data[i]));
  return out;
}

}  // namespace orfseg
