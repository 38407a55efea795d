#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "orfseg/errors.hpp"

namespace orfseg {

// Box sums over odd square windows with replicated borders: the window index
// is clamped to the raster, so border samples repeat and the divisor is
// always kernel*kernel. Separable; each pass sums in a fixed order via row
// prefix sums, so the result is deterministic.
//
// src and dst are row-major width*height doubles; kernel is odd and >= 1.
inline void box_sum_replicate(const double* src, int width, int height,
                              int kernel, double* dst) {
  if (kernel < 1 || kernel % 2 == 0)
    throw validation_error("box_sum_replicate: kernel must be odd and >= 1");
  if (kernel == 1) {
    std::copy(src, src + static_cast<std::size_t>(width) * height, dst);
    return;
  }
  const int half = kernel / 2;
  std::vector<double> row_pass(static_cast<std::size_t>(width) * height);
  std::vector<double> prefix(static_cast<std::size_t>(width) + 1);

  for (int r = 0; r < height; ++r) {
    const double* row = src + static_cast<std::size_t>(r) * width;
    prefix[0] = 0.0;
    for (int c = 0; c < width; ++c) prefix[c + 1] = prefix[c] + row[c];
    double* out = row_pass.data() + static_cast<std::size_t>(r) * width;
    for (int c = 0; c < width; ++c) {
      int lo = c - half;
      int hi = c + half;
      int a = std::max(lo, 0);
      int b = std::min(hi, width - 1);
      double s = prefix[b + 1] - prefix[a];
      if (lo < 0) s += static_cast<double>(-lo) * row[0];
      if (hi > width - 1) s += static_cast<double>(hi - (width - 1)) * row[width - 1];
      out[c] = s;
    }
  }

  std::vector<double> col_prefix(static_cast<std::size_t>(height) + 1);
  for (int c = 0; c < width; ++c) {
    col_prefix[0] = 0.0;
    for (int r = 0; r < height; ++r)
      col_prefix[r + 1] = col_prefix[r] + row_pass[static_cast<std::size_t>(r) * width + c];
    for (int r = 0; r < height; ++r) {
      int lo = r - half;
      int hi = r + half;
      int a = std::max(lo, 0);
      int b = std::min(hi, height - 1);
      double s = col_prefix[b + 1] - col_prefix[a];
      if (lo < 0) s += static_cast<double>(-lo) * row_pass[c];
      if (hi > height - 1)
        s += static_cast<double>(hi - (height - 1)) *
             row_pass[static_cast<std::size_t>(height - 1) * width + c];
      dst[static_cast<std::size_t>(r) * width + c] = s;
    }
  }
}

}  // namespace orfseg
