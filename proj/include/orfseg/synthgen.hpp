#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "orfseg/errors.hpp"
#include "orfseg/manifest.hpp"
#include "orfseg/png_io.hpp"
#include "orfseg/raster.hpp"
#include "orfseg/rng.hpp"

namespace orfseg {

// Gland-like synthetic scenes: bright background, dark elliptical glands,
// bright elliptical pipes punched through gland interiors. Ground truth marks
// gland-minus-pipe; the partial label keeps a random subset of whole glands
// plus at most one partially erased one.
struct SynthConfig {
  int image_size = 256;
  int gland_count_min = 0;
  int gland_count_max = 6;
  double gland_radius_min = 16.0;
  double gland_radius_max = 40.0;
  double pipe_probability = 0.5;
  double label_fraction_min = 0.2;
  double label_fraction_max = 0.7;
  double background_intensity = 0.95;
  double gland_intensity = 0.45;
  double pipe_intensity = 0.90;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (image_size <= 0) throw validation_error("synth: image_size must be positive");
    if (gland_count_min < 0 || gland_count_min > gland_count_max)
      throw validation_error("synth: gland count range is empty or negative");
    if (gland_radius_min <= 0.0 || gland_radius_min > gland_radius_max)
      throw validation_error("synth: gland radius range is empty or nonpositive");
    if (gland_radius_max >= image_size / 2.0)
      throw validation_error("synth: gland radius must be below image_size/2");
    if (pipe_probability < 0.0 || pipe_probability > 1.0)
      throw validation_error("synth: pipe_probability must be in [0,1]");
    if (!(label_fraction_min > 0.0 && label_fraction_min <= label_fraction_max &&
          label_fraction_max <= 1.0))
      throw validation_error("synth: label fraction range must be within (0,1]");
    for (double v : {background_intensity, gland_intensity, pipe_intensity})
      if (v < 0.0 || v > 1.0) throw validation_error("synth: intensities must be in [0,1]");
    if (noise_sigma < 0.0) throw validation_error("synth: noise_sigma must be nonnegative");
    // The positive class must stay separable from both negative appearances;
    // background and pipe are deliberately allowed to resemble each other.
    double gap = 2.0 * noise_sigma;
    if (std::fabs(gland_intensity - background_intensity) < gap ||
        std::fabs(gland_intensity - pipe_intensity) < gap)
      throw validation_error("synth: gland intensity must differ from background and "
                             "pipe intensities by at least 2*noise_sigma");
  }
};

struct SynthSample {
  Image image;
  Mask truth;
  Mask partial_label;
};

// JSON form of SynthConfig; missing keys keep their defaults. Ranges are
// two-element arrays, e.g. {"gland_count_range": [0, 6]}.
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2)
      throw validation_error(std::string("synth config: ") + key + " must be [min, max]");
    lo = arr[0].get<double>();
    hi = arr[1].get<double>();
  };
  if (j.contains("image_size")) c.image_size = j.at("image_size").get<int>();
  double cmin = c.gland_count_min, cmax = c.gland_count_max;
  range("gland_count_range", cmin, cmax);
  c.gland_count_min = static_cast<int>(cmin);
  c.gland_count_max = static_cast<int>(cmax);
  range("gland_radius_range", c.gland_radius_min, c.gland_radius_max);
  range("label_fraction_range", c.label_fraction_min, c.label_fraction_max);
  if (j.contains("pipe_probability")) c.pipe_probability = j.at("pipe_probability").get<double>();
  if (j.contains("background_intensity"))
    c.background_intensity = j.at("background_intensity").get<double>();
  if (j.contains("gland_intensity")) c.gland_intensity = j.at("gland_intensity").get<double>();
  if (j.contains("pipe_intensity")) c.pipe_intensity = j.at("pipe_intensity").get<double>();
  if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace detail {

struct Ellipse {
  double cx = 0.0, cy = 0.0;   // pixel-center coordinates
  double ax = 1.0, ay = 1.0;   // semi-axes
  double rot = 0.0;

  // squared coordinate in the ellipse metric; inside iff <= 1
  double metric(double x, double y) const {
    double dx = x - cx;
    double dy = y - cy;
    double u = (dx * std::cos(rot) + dy * std::sin(rot)) / ax;
    double v = (-dx * std::sin(rot) + dy * std::cos(rot)) / ay;
    return u * u + v * v;
  }
};

inline std::vector<std::int32_t> rasterize(const Ellipse& e, int size) {
  std::vector<std::int32_t> pixels;
  double reach = std::max(e.ax, e.ay);
  int r0 = std::max(0, static_cast<int>(std::floor(e.cy - reach - 1.0)));
  int r1 = std::min(size - 1, static_cast<int>(std::ceil(e.cy + reach + 1.0)));
  int c0 = std::max(0, static_cast<int>(std::floor(e.cx - reach - 1.0)));
  int c1 = std::min(size - 1, static_cast<int>(std::ceil(e.cx + reach + 1.0)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (e.metric(c + 0.5, r + 0.5) <= 1.0)
        pixels.push_back(static_cast<std::int32_t>(r) * size + c);
  return pixels;
}

}  // namespace detail

// Deterministic in (config, index): the sample stream is counter-seeded so
// samples can be regenerated independently and out of order.
inline SynthSample generate_sample(const SynthConfig& config, int index) {
  config.validate();
  if (index < 0) throw validation_error("generate_sample: index must be >= 0");
  Rng rng(mix64(config.seed, static_cast<std::uint64_t>(index)));
  const int size = config.image_size;

  int gland_count = rng.uniform_int(config.gland_count_min, config.gland_count_max);
  std::vector<detail::Ellipse> glands;
  std::vector<detail::Ellipse> pipes;  // at most one per gland, concentric
  for (int g = 0; g < gland_count; ++g) {
    detail::Ellipse e;
    e.ax = rng.uniform(config.gland_radius_min, config.gland_radius_max);
    e.ay = rng.uniform(config.gland_radius_min, config.gland_radius_max);
    e.rot = rng.uniform(0.0, 3.14159265358979323846);
    double margin = std::max(e.ax, e.ay) + 1.5;
    if (margin <= size - margin) {
      e.cx = rng.uniform(margin, size - margin);
      e.cy = rng.uniform(margin, size - margin);
    } else {
      e.cx = e.cy = size / 2.0;
      e.ax = std::min(e.ax, size / 2.0 - 2.0);
      e.ay = std::min(e.ay, size / 2.0 - 2.0);
    }
    bool has_pipe = rng.uniform() < config.pipe_probability;
    if (has_pipe) {
      detail::Ellipse p = e;
      p.ax = e.ax * rng.uniform(0.3, 0.5);
      p.ay = e.ay * rng.uniform(0.3, 0.5);
      pipes.push_back(p);
    }
    glands.push_back(e);
  }

  std::vector<std::uint8_t> gland_raster(static_cast<std::size_t>(size) * size, 0);
  std::vector<std::uint8_t> pipe_raster(static_cast<std::size_t>(size) * size, 0);
  std::vector<std::vector<std::int32_t>> gland_pixels(glands.size());
  for (std::size_t g = 0; g < glands.size(); ++g) {
    gland_pixels[g] = detail::rasterize(glands[g], size);
    for (std::int32_t p : gland_pixels[g]) gland_raster[static_cast<std::size_t>(p)] = 1;
  }
  for (const auto& p : pipes)
    for (std::int32_t px : detail::rasterize(p, size))
      pipe_raster[static_cast<std::size_t>(px)] = 1;

  SynthSample out;
  out.truth = Mask::filled(size, size, 0);
  for (std::size_t i = 0; i < out.truth.data.size(); ++i)
    out.truth.data[i] = static_cast<std::uint8_t>(gland_raster[i] & (1 - pipe_raster[i]));

  // per-gland truth pixels, pipe-free
  for (auto& px_list : gland_pixels) {
    std::erase_if(px_list, [&](std::int32_t p) { return pipe_raster[static_cast<std::size_t>(p)]; });
  }

  // partial label: random whole glands, then one gland trimmed from its core
  // outwards to land exactly on the drawn fraction of the truth area
  out.partial_label = Mask::filled(size, size, 0);
  std::int64_t total = static_cast<std::int64_t>(out.truth.positive_count());
  if (total > 0) {
    double t = rng.uniform(config.label_fraction_min, config.label_fraction_max);
    std::int64_t lo = static_cast<std::int64_t>(std::ceil(config.label_fraction_min * total));
    std::int64_t hi = static_cast<std::int64_t>(std::floor(config.label_fraction_max * total));
    std::int64_t target = std::llround(t * static_cast<double>(total));
    if (lo <= hi) target = std::clamp(target, lo, hi);
    target = std::clamp<std::int64_t>(target, 0, total);

    std::vector<std::size_t> order(glands.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    std::int64_t kept = 0;
    for (std::size_t g : order) {
      if (kept >= target) break;
      std::vector<std::int32_t> fresh;
      for (std::int32_t p : gland_pixels[g])
        if (!out.partial_label.data[static_cast<std::size_t>(p)]) fresh.push_back(p);
      if (kept + static_cast<std::int64_t>(fresh.size()) <= target) {
        for (std::int32_t p : fresh) out.partial_label.data[static_cast<std::size_t>(p)] = 1;
        kept += static_cast<std::int64_t>(fresh.size());
      } else {
        std::int64_t need = target - kept;
        const detail::Ellipse& e = glands[g];
        std::stable_sort(fresh.begin(), fresh.end(), [&](std::int32_t a, std::int32_t b) {
          double ma = e.metric(a % size + 0.5, a / size + 0.5);
          double mb = e.metric(b % size + 0.5, b / size + 0.5);
          return ma < mb;
        });
        for (std::int64_t i = 0; i < need; ++i)
          out.partial_label.data[static_cast<std::size_t>(fresh[static_cast<std::size_t>(i)])] = 1;
        kept = target;
        break;
      }
    }
  }

  // image: per-region base intensity plus Gaussian noise, clamped
  out.image = Image::filled(size, size, 0.0f, 1);
  for (std::size_t i = 0; i < out.image.data.size(); ++i) {
    double base = config.background_intensity;
    if (pipe_raster[i])
      base = config.pipe_intensity;
    else if (gland_raster[i])
      base = config.gland_intensity;
    double v = base + (config.noise_sigma > 0.0 ? rng.normal(0.0, config.noise_sigma) : 0.0);
    out.image.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

// Writes count samples as PNG triples plus a JSON-lines manifest (returned
// path). Every complete block of 20 samples contains at least one
// pure-negative image when the configured gland count range includes zero:
// if the first 19 all have glands, the block's last sample is regenerated
// with the gland count pinned to zero.
inline std::string generate_dataset(const SynthConfig& config, int count,
                                    const std::string& out_dir) {
  config.validate();
  if (count < 0) throw validation_error("generate_dataset: count must be >= 0");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  fs::create_directories(fs::path(out_dir) / "labels", ec);
  fs::create_directories(fs::path(out_dir) / "truth", ec);
  if (ec) throw io_error("generate_dataset: cannot create output directories: " + ec.message());

  SynthConfig negative_config = config;
  negative_config.gland_count_min = 0;
  negative_config.gland_count_max = 0;
  const bool can_inject = config.gland_count_min == 0;

  std::vector<ManifestEntry> entries;
  bool block_has_negative = false;
  for (int i = 0; i < count; ++i) {
    if (i % 20 == 0) block_has_negative = false;
    bool force_negative = can_inject && i % 20 == 19 && !block_has_negative;
    SynthSample s = generate_sample(force_negative ? negative_config : config, i);
    if (s.truth.positive_count() == 0) block_has_negative = true;

    char name[32];
    std::snprintf(name, sizeof(name), "sample_%04d", i);
    ManifestEntry e;
    e.id = name;
    e.image_path = (fs::path(out_dir) / "images" / (e.id + ".png")).string();
    e.label_path = (fs::path(out_dir) / "labels" / (e.id + ".png")).string();
    e.truth_path = (fs::path(out_dir) / "truth" / (e.id + ".png")).string();
    save_image(s.image, e.image_path);
    save_mask(s.partial_label, e.label_path);
    save_mask(s.truth, e.truth_path);
    entries.push_back(std::move(e));
  }
  std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  write_manifest(entries, manifest_path);
  return manifest_path;
}

}  // namespace orfseg
