#pragma once

#include <string>
#include <vector>

#include "orfseg/errors.hpp"
#include "orfseg/manifest.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

// Square tiling geometry. The grid must tile the image exactly and the
// stride must divide the patch size, so per-pixel coverage counts are
// well defined for every stride.
struct TilingConfig {
  int image_size = 256;
  int patch_size = 64;
  int stride = 32;

  void validate() const {
    if (stride <= 0 || patch_size <= 0 || image_size <= 0)
      throw validation_error("tiling: sizes must be positive");
    if (!(stride <= patch_size && patch_size <= image_size))
      throw validation_error("tiling: need stride <= patch <= image size");
    if (patch_size % stride != 0)
      throw validation_error("tiling: stride must divide patch size");
    if ((image_size - patch_size) % stride != 0)
      throw validation_error("tiling: stride must divide (image - patch) extent");
  }

  int steps_per_axis() const { return (image_size - patch_size) / stride + 1; }
  int patch_count() const {
    int s = steps_per_axis();
    return s * s;
  }
};

// Top-left corner of one patch window; offsets are multiples of the stride.
struct PatchSpec {
  int row0 = 0;
  int col0 = 0;
  bool operator==(const PatchSpec&) const = default;
};

// Full grid in row-major order by (row0, col0).
inline std::vector<PatchSpec> grid(const TilingConfig& config) {
  config.validate();
  int steps = config.steps_per_axis();
  std::vector<PatchSpec> specs;
  specs.reserve(static_cast<std::size_t>(steps) * steps);
  for (int r = 0; r < steps; ++r)
    for (int c = 0; c < steps; ++c)
      specs.push_back(PatchSpec{r * config.stride, c * config.stride});
  return specs;
}

// Fraction of a label patch annotated positive.
inline double area_threshold(const Mask& label_patch) {
  if (label_patch.pixel_count() == 0)
    throw validation_error("area_threshold: empty patch");
  return static_cast<double>(label_patch.positive_count()) /
         static_cast<double>(label_patch.pixel_count());
}

namespace detail {
inline void check_crop_bounds(int width, int height, const PatchSpec& spec,
                              int patch_size) {
  if (spec.row0 < 0 || spec.col0 < 0 || spec.row0 + patch_size > height ||
      spec.col0 + patch_size > width)
    throw validation_error("crop: window out of bounds");
}
}  // namespace detail

inline Image crop(const Image& img, const PatchSpec& spec, int patch_size) {
  detail::check_crop_bounds(img.width, img.height, spec, patch_size);
  Image out;
  out.width = patch_size;
  out.height = patch_size;
  out.channels = img.channels;
  out.data.resize(static_cast<std::size_t>(patch_size) * patch_size * img.channels);
  for (int r = 0; r < patch_size; ++r) {
    const float* src =
        img.data.data() +
        (static_cast<std::size_t>(spec.row0 + r) * img.width + spec.col0) * img.channels;
    std::copy(src, src + static_cast<std::size_t>(patch_size) * img.channels,
              out.data.data() + static_cast<std::size_t>(r) * patch_size * img.channels);
  }
  return out;
}

inline Mask crop(const Mask& m, const PatchSpec& spec, int patch_size) {
  detail::check_crop_bounds(m.width, m.height, spec, patch_size);
  Mask out;
  out.width = patch_size;
  out.height = patch_size;
  out.data.resize(static_cast<std::size_t>(patch_size) * patch_size);
  for (int r = 0; r < patch_size; ++r) {
    const std::uint8_t* src =
        m.data.data() + static_cast<std::size_t>(spec.row0 + r) * m.width + spec.col0;
    std::copy(src, src + patch_size, out.data.data() + static_cast<std::size_t>(r) * patch_size);
  }
  return out;
}

// One training sample with provenance.
struct LabeledPatch {
  Image image;
  Mask label;
  std::string source_id;
  PatchSpec spec;
};

enum class DatasetKind { Mix, Sequential };

// Mix keeps the grid patches whose annotated fraction reaches the area
// threshold (ties kept); Sequential keeps the whole grid in row-major order.
struct PatchDataset {
  DatasetKind kind = DatasetKind::Sequential;
  double area_threshold = 0.5;
  std::vector<LabeledPatch> patches;
};

// In-memory source for dataset construction.
struct SourceSample {
  std::string id;
  Image image;
  Mask label;
};

// selection_labels, when given (parallel to samples), is the label set the
// Mix threshold is evaluated on; patch content always comes from
// samples[i].label. Used to select on original annotations while training
// on enhanced ones.
inline PatchDataset build_dataset(const std::vector<SourceSample>& samples,
                                  const TilingConfig& config, DatasetKind kind,
                                  double threshold = 0.5,
                                  const std::vector<Mask>* selection_labels = nullptr) {
  config.validate();
  if (selection_labels && selection_labels->size() != samples.size())
    throw validation_error("build_dataset: selection label count mismatch");
  PatchDataset out;
  out.kind = kind;
  out.area_threshold = threshold;
  std::vector<PatchSpec> specs = grid(config);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SourceSample& s = samples[i];
    if (s.image.width != config.image_size || s.image.height != config.image_size)
      throw validation_error("build_dataset: source '" + s.id + "' is not " +
                             std::to_string(config.image_size) + " square");
    if (s.label.width != s.image.width || s.label.height != s.image.height)
      throw validation_error("build_dataset: source '" + s.id +
                             "' label dimensions differ from image");
    const Mask& selector = selection_labels ? (*selection_labels)[i] : s.label;
    for (const PatchSpec& spec : specs) {
      if (kind == DatasetKind::Mix) {
        double mu = area_threshold(crop(selector, spec, config.patch_size));
        if (mu < threshold) continue;  // equality survives
      }
      LabeledPatch p;
      p.image = crop(s.image, spec, config.patch_size);
      p.label = crop(s.label, spec, config.patch_size);
      p.source_id = s.id;
      p.spec = spec;
      out.patches.push_back(std::move(p));
    }
  }
  return out;
}

inline PatchDataset build_dataset(const std::vector<ManifestEntry>& entries,
                                  const TilingConfig& config, DatasetKind kind,
                                  double threshold = 0.5) {
  std::vector<SourceSample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    LoadedSample ls = load_sample(e);
    samples.push_back(SourceSample{ls.id, std::move(ls.image), std::move(ls.label)});
  }
  return build_dataset(samples, config, kind, threshold);
}

}  // namespace orfseg
