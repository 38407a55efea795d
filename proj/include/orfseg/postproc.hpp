#pragma once

#include <cstdint>
#include <vector>

#include "orfseg/errors.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

// Fill: enclosed negative regions (holes) become positive.
// Keep: holes survive; only spuriously small ones are removed.
enum class HoleMode { Fill, Keep };

// Labels every 4- or 8-connected region of equal-valued pixels, label >= 1
// in first-encounter (row-major) order.
struct Region {
  int label = 0;
  std::uint8_t value = 0;
  std::int64_t area = 0;
};

struct ComponentLabeling {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  std::vector<Region> regions;
};

inline ComponentLabeling connected_components(const Mask& mask, int connectivity = 4) {
  if (connectivity != 4 && connectivity != 8)
    throw validation_error("connected_components: connectivity must be 4 or 8");
  const int w = mask.width;
  const int h = mask.height;
  ComponentLabeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(static_cast<std::size_t>(w) * h, 0);

  static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[4] = {-1, 0, 0, 1};
  static constexpr int dc4[4] = {0, -1, 1, 0};
  const int* dr = connectivity == 4 ? dr4 : dr8;
  const int* dc = connectivity == 4 ? dc4 : dc8;
  const int neighbors = connectivity;

  std::vector<std::int32_t> queue;
  int next_label = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::size_t start = static_cast<std::size_t>(r) * w + c;
      if (out.labels[start] != 0) continue;
      const std::uint8_t value = mask.data[start];
      ++next_label;
      Region region{next_label, value, 0};
      queue.clear();
      queue.push_back(static_cast<std::int32_t>(start));
      out.labels[start] = next_label;
      while (!queue.empty()) {
        std::int32_t at = queue.back();
        queue.pop_back();
        ++region.area;
        int ar = at / w;
        int ac = at % w;
        for (int k = 0; k < neighbors; ++k) {
          int nr = ar + dr[k];
          int nc = ac + dc[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
          if (out.labels[ni] != 0 || mask.data[ni] != value) continue;
          out.labels[ni] = next_label;
          queue.push_back(static_cast<std::int32_t>(ni));
        }
      }
      out.regions.push_back(region);
    }
  }
  return out;
}

// Flood-fills the 4-connected negative region reachable from the border (the
// true background); every other negative pixel belongs to a hole. Iterative
// with an explicit work queue.
inline Mask flood_fill_holes(const Mask& mask, HoleMode mode, int min_hole_area = 0) {
  mask.validate();
  const int w = mask.width;
  const int h = mask.height;
  if (w == 0 || h == 0) return mask;

  std::vector<std::uint8_t> border_connected(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::int32_t> queue;
  auto seed = [&](int r, int c) {
    std::size_t i = static_cast<std::size_t>(r) * w + c;
    if (mask.data[i] == 0 && !border_connected[i]) {
      border_connected[i] = 1;
      queue.push_back(static_cast<std::int32_t>(i));
    }
  };
  for (int c = 0; c < w; ++c) {
    seed(0, c);
    seed(h - 1, c);
  }
  for (int r = 0; r < h; ++r) {
    seed(r, 0);
    seed(r, w - 1);
  }
  while (!queue.empty()) {
    std::int32_t at = queue.back();
    queue.pop_back();
    int r = at / w;
    int c = at % w;
    if (r > 0) seed(r - 1, c);
    if (r + 1 < h) seed(r + 1, c);
    if (c > 0) seed(r, c - 1);
    if (c + 1 < w) seed(r, c + 1);
  }

  // group the remaining negatives into holes and decide per hole area
  Mask out = mask;
  std::vector<std::int8_t> hole_seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::int32_t> hole_pixels;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::size_t start = static_cast<std::size_t>(r) * w + c;
      if (mask.data[start] != 0 || border_connected[start] || hole_seen[start]) continue;
      hole_pixels.clear();
      hole_seen[start] = 1;
      queue.clear();
      queue.push_back(static_cast<std::int32_t>(start));
      while (!queue.empty()) {
        std::int32_t at = queue.back();
        queue.pop_back();
        hole_pixels.push_back(at);
        int ar = at / w;
        int ac = at % w;
        auto visit = [&](int nr, int nc) {
          std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
          if (mask.data[ni] == 0 && !border_connected[ni] && !hole_seen[ni]) {
            hole_seen[ni] = 1;
            queue.push_back(static_cast<std::int32_t>(ni));
          }
        };
        if (ar > 0) visit(ar - 1, ac);
        if (ar + 1 < h) visit(ar + 1, ac);
        if (ac > 0) visit(ar, ac - 1);
        if (ac + 1 < w) visit(ar, ac + 1);
      }
      std::int64_t area = static_cast<std::int64_t>(hole_pixels.size());
      bool fill = mode == HoleMode::Fill ? (area > min_hole_area) : (area <= min_hole_area);
      if (fill)
        for (std::int32_t p : hole_pixels) out.data[static_cast<std::size_t>(p)] = 1;
    }
  }
  return out;
}

}  // namespace orfseg
