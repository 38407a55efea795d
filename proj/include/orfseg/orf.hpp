#pragma once

#include <string>
#include <vector>

#include "orfseg/boxfilter.hpp"
#include "orfseg/errors.hpp"
#include "orfseg/parallel.hpp"
#include "orfseg/patching.hpp"
#include "orfseg/predictor.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

// Per-patch belief maps for one source image, in grid order, awaiting the
// overlapped-region merge.
struct Gallery {
  std::string source_id;
  TilingConfig config;
  std::vector<std::pair<PatchSpec, BeliefMap>> entries;

  void validate() const {
    config.validate();
    std::vector<PatchSpec> specs = grid(config);
    if (entries.size() != specs.size())
      throw validation_error("gallery: entry count != grid patch count");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!(entries[i].first == specs[i]))
        throw validation_error("gallery: entries out of grid order");
      if (entries[i].second.width != config.patch_size ||
          entries[i].second.height != config.patch_size)
        throw validation_error("gallery: belief map is not patch-sized");
    }
  }
};

// Runs the predictor over every grid patch. Patches may be predicted in
// parallel; each result lands in its own grid slot, so the gallery is
// identical for every thread count.
inline Gallery build_gallery(const Image& image, const TilingConfig& config,
                             const Predictor& predictor, int threads = 1,
                             const std::string& source_id = std::string()) {
  config.validate();
  if (image.width != config.image_size || image.height != config.image_size)
    throw validation_error("build_gallery: image is not tiling-sized");
  std::vector<PatchSpec> specs = grid(config);
  Gallery g;
  g.source_id = source_id;
  g.config = config;
  g.entries.resize(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    BeliefMap b = predictor.predict_at(crop(image, specs[i], config.patch_size), specs[i]);
    if (b.width != config.patch_size || b.height != config.patch_size)
      throw validation_error("build_gallery: predictor output has wrong dimensions");
    g.entries[i] = {specs[i], std::move(b)};
  });
  return g;
}

// Exact number of 1-D patch intervals [k*stride, k*stride + patch) covering
// pixel p. The symmetric closed form min(ceil((p+1)/stride), patch/stride)
// undercounts nothing on the left but ignores the decay at the far border,
// so the interval count is computed directly.
inline int coverage_count_1d(int p, const TilingConfig& config) {
  config.validate();
  if (p < 0 || p >= config.image_size)
    throw validation_error("coverage_count_1d: pixel index out of range");
  int last_origin = config.image_size - config.patch_size;  // multiple of stride
  int lo = p - config.patch_size + 1;
  int min_origin = lo <= 0 ? 0 : ((lo + config.stride - 1) / config.stride) * config.stride;
  int max_origin = std::min((p / config.stride) * config.stride, last_origin);
  if (max_origin < min_origin) return 0;
  return (max_origin - min_origin) / config.stride + 1;
}

// Sum of patch beliefs and exact per-pixel coverage, accumulated in grid
// order with 64-bit floats so the result is bit-identical run to run.
struct Superposition {
  int size = 0;
  std::vector<double> sum;
  std::vector<std::int32_t> count;
};

inline Superposition accumulate(const Gallery& gallery) {
  gallery.validate();
  const int size = gallery.config.image_size;
  const int patch = gallery.config.patch_size;
  Superposition s;
  s.size = size;
  s.sum.assign(static_cast<std::size_t>(size) * size, 0.0);
  s.count.assign(static_cast<std::size_t>(size) * size, 0);
  for (const auto& [spec, belief] : gallery.entries) {
    for (int r = 0; r < patch; ++r) {
      double* sum_row = s.sum.data() + static_cast<std::size_t>(spec.row0 + r) * size + spec.col0;
      std::int32_t* cnt_row =
          s.count.data() + static_cast<std::size_t>(spec.row0 + r) * size + spec.col0;
      const float* src = belief.data.data() + static_cast<std::size_t>(r) * patch;
      for (int c = 0; c < patch; ++c) {
        sum_row[c] += static_cast<double>(src[c]);
        ++cnt_row[c];
      }
    }
  }
  return s;
}

// Overlap-averaged merge: x(p) = sum(p) / count(p). The accumulated counts
// must factor into the outer product of the 1-D coverage counts; that
// identity is checked on every call.
inline BeliefMap stitch(const Gallery& gallery) {
  Superposition s = accumulate(gallery);
  const int size = s.size;

  std::vector<int> cov(size);
  for (int p = 0; p < size; ++p) cov[p] = coverage_count_1d(p, gallery.config);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      std::int32_t n = s.count[static_cast<std::size_t>(r) * size + c];
      if (n < 1) throw validation_error("stitch: uncovered pixel");
      if (n != cov[r] * cov[c])
        throw validation_error("stitch: coverage count is not separable");
    }

  BeliefMap out;
  out.width = size;
  out.height = size;
  out.data.resize(s.sum.size());
  for (std::size_t i = 0; i < s.sum.size(); ++i)
    out.data[i] = static_cast<float>(s.sum[i] / static_cast<double>(s.count[i]));
  return out;
}

// Mean filter with replicated borders; a constant map stays constant and a
// kernel of 1 is the identity.
inline BeliefMap smooth(const BeliefMap& belief, int kernel = 11) {
  if (kernel < 1 || kernel % 2 == 0)
    throw validation_error("smooth: kernel must be odd and >= 1");
  if (kernel == 1) return belief;
  const std::size_t n = belief.pixel_count();
  std::vector<double> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) src[i] = belief.data[i];
  box_sum_replicate(src.data(), belief.width, belief.height, kernel, dst.data());
  const double area = static_cast<double>(kernel) * kernel;
  BeliefMap out;
  out.width = belief.width;
  out.height = belief.height;
  out.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = dst[i] / area;
    out.data[i] = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
  }
  return out;
}

// Threshold cut; ties go positive.
inline Mask binarize(const BeliefMap& belief, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw validation_error("binarize: threshold must be in (0,1)");
  const float cut = static_cast<float>(threshold);
  Mask out;
  out.width = belief.width;
  out.height = belief.height;
  out.data.resize(belief.data.size());
  for (std::size_t i = 0; i < belief.data.size(); ++i)
    out.data[i] = belief.data[i] >= cut ? 1 : 0;
  return out;
}

}  // namespace orfseg
