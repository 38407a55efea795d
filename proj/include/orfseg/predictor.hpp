#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orfseg/boxfilter.hpp"
#include "orfseg/errors.hpp"
#include "orfseg/patching.hpp"
#include "orfseg/raster.hpp"
#include "orfseg/rng.hpp"

namespace orfseg {

// Per-pixel feature vector: [center luminance, window mean, window stddev, 1].
// Window statistics use replicated borders, clamped at the patch edge — which
// is exactly why predictions degrade near patch borders and overlapped
// stitching pays off.
struct PixelFeatures {
  int window = 5;

  void validate() const {
    if (window < 1 || window % 2 == 0)
      throw validation_error("features: window must be odd and >= 1");
  }
};

inline constexpr int kPixelFeatureCount = 4;

// Appends width*height*4 doubles to out (row-major pixels, 4 per pixel).
inline void extract_features(const Image& patch, const PixelFeatures& config,
                             std::vector<double>& out) {
  config.validate();
  const std::size_t n = patch.pixel_count();
  std::vector<double> lum(n), lum2(n), mean(n), mean2(n);
  std::size_t i = 0;
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c) {
      double v = patch.luminance(r, c);
      lum[i] = v;
      lum2[i] = v * v;
      ++i;
    }
  box_sum_replicate(lum.data(), patch.width, patch.height, config.window, mean.data());
  box_sum_replicate(lum2.data(), patch.width, patch.height, config.window, mean2.data());
  const double inv_area = 1.0 / (static_cast<double>(config.window) * config.window);
  out.reserve(out.size() + n * kPixelFeatureCount);
  for (i = 0; i < n; ++i) {
    double m = mean[i] * inv_area;
    double m2 = mean2[i] * inv_area;
    double var = m2 - m * m;
    out.push_back(lum[i]);
    out.push_back(m);
    out.push_back(var > 0.0 ? std::sqrt(var) : 0.0);
    out.push_back(1.0);
  }
}

inline std::vector<double> extract_features(const Image& patch,
                                            const PixelFeatures& config) {
  std::vector<double> out;
  extract_features(patch, config, out);
  return out;
}

struct LogisticPixelModel {
  std::vector<double> weights = std::vector<double>(kPixelFeatureCount, 0.0);
  PixelFeatures feature_config;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline BeliefMap predict(const LogisticPixelModel& model, const Image& patch) {
  if (model.weights.size() != kPixelFeatureCount)
    throw validation_error("predict: model has wrong weight count");
  std::vector<double> feats;
  extract_features(patch, model.feature_config, feats);
  BeliefMap out;
  out.width = patch.width;
  out.height = patch.height;
  out.data.resize(patch.pixel_count());
  const double* w = model.weights.data();
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double* f = feats.data() + i * kPixelFeatureCount;
    double z = w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3];
    out.data[i] = static_cast<float>(sigmoid(z));
  }
  return out;
}

// Behavioral predictor contract: a belief map with the patch's dimensions,
// values in [0,1], deterministic in the pixel content. Tiled inference also
// passes the crop origin; content-based predictors ignore it.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual BeliefMap predict(const Image& patch) const = 0;
  virtual BeliefMap predict_at(const Image& patch, const PatchSpec& spec) const {
    (void)spec;
    return predict(patch);
  }
};

class ModelPredictor final : public Predictor {
 public:
  explicit ModelPredictor(LogisticPixelModel model) : model_(std::move(model)) {}
  BeliefMap predict(const Image& patch) const override {
    return orfseg::predict(model_, patch);
  }
  const LogisticPixelModel& model() const { return model_; }

 private:
  LogisticPixelModel model_;
};

// Test oracle: answers every patch with the ground-truth crop at the patch's
// origin, as {0.0, 1.0} beliefs. Needs the crop location, so the plain
// content-only entry point is unavailable.
class OraclePredictor final : public Predictor {
 public:
  explicit OraclePredictor(Mask truth) : truth_(std::move(truth)) {}

  BeliefMap predict(const Image&) const override {
    throw validation_error("oracle predictor requires the patch origin; use predict_at");
  }

  BeliefMap predict_at(const Image& patch, const PatchSpec& spec) const override {
    if (patch.width != patch.height)
      throw validation_error("oracle predictor expects square patches");
    Mask m = crop(truth_, spec, patch.width);
    BeliefMap out;
    out.width = m.width;
    out.height = m.height;
    out.data.resize(m.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i)
      out.data[i] = m.data[i] ? 1.0f : 0.0f;
    return out;
  }

 private:
  Mask truth_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  std::size_t minibatch = 4096;
  std::uint64_t seed = 0;
  double l2 = 1e-4;

  void validate() const {
    if (learning_rate <= 0.0) throw validation_error("train: learning_rate must be positive");
    if (epochs < 0) throw validation_error("train: epochs must be >= 0");
    if (minibatch == 0) throw validation_error("train: minibatch must be positive");
    if (l2 < 0.0) throw validation_error("train: l2 must be nonnegative");
  }
};

namespace detail {

// Mean binary cross-entropy plus l2*||w||^2/2 over a pixel batch; fills
// grad_out (length 4) with the analytic gradient. Shared between the
// trainer and the finite-difference checks so there is one code path.
template <class FeatScalar>
inline double logistic_loss_grad(const double* weights, const FeatScalar* features,
                                 const std::uint8_t* labels, std::size_t count,
                                 double l2, double* grad_out) {
  double loss = 0.0;
  double g0 = 0.0, g1 = 0.0, g2 = 0.0, g3 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const FeatScalar* f = features + i * kPixelFeatureCount;
    double z = weights[0] * static_cast<double>(f[0]) + weights[1] * static_cast<double>(f[1]) +
               weights[2] * static_cast<double>(f[2]) + weights[3] * static_cast<double>(f[3]);
    double y = static_cast<double>(labels[i]);
    // stable BCE: max(z,0) - y*z + log1p(exp(-|z|))
    loss += (z > 0.0 ? z : 0.0) - y * z + std::log1p(std::exp(-std::fabs(z)));
    double delta = sigmoid(z) - y;
    g0 += delta * static_cast<double>(f[0]);
    g1 += delta * static_cast<double>(f[1]);
    g2 += delta * static_cast<double>(f[2]);
    g3 += delta * static_cast<double>(f[3]);
  }
  double inv = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
  double wsq = 0.0;
  for (int k = 0; k < kPixelFeatureCount; ++k) wsq += weights[k] * weights[k];
  grad_out[0] = g0 * inv + l2 * weights[0];
  grad_out[1] = g1 * inv + l2 * weights[1];
  grad_out[2] = g2 * inv + l2 * weights[2];
  grad_out[3] = g3 * inv + l2 * weights[3];
  return loss * inv + 0.5 * l2 * wsq;
}

}  // namespace detail

inline double logistic_loss(const std::vector<double>& weights,
                            const std::vector<double>& features,
                            const std::vector<std::uint8_t>& labels, double l2) {
  double grad[kPixelFeatureCount];
  return detail::logistic_loss_grad(weights.data(), features.data(), labels.data(),
                                    labels.size(), l2, grad);
}

inline std::vector<double> logistic_gradient(const std::vector<double>& weights,
                                             const std::vector<double>& features,
                                             const std::vector<std::uint8_t>& labels,
                                             double l2) {
  std::vector<double> grad(kPixelFeatureCount);
  detail::logistic_loss_grad(weights.data(), features.data(), labels.data(),
                             labels.size(), l2, grad.data());
  return grad;
}

struct TrainResult {
  LogisticPixelModel model;
  // mean loss over the samples as visited in each epoch (before each
  // minibatch update); in full-batch mode this is the exact loss sequence
  std::vector<double> epoch_losses;
};

// Minibatch gradient descent on mean per-pixel BCE + l2*||w||^2/2. The pixel
// order is reshuffled each epoch from config.seed; with an init model the
// weights warm-start from it (fine-tuning), otherwise from zeros.
inline TrainResult train(const PatchDataset& dataset, const TrainConfig& config,
                         const std::optional<LogisticPixelModel>& init = std::nullopt,
                         const PixelFeatures& features = PixelFeatures{}) {
  config.validate();
  if (dataset.patches.empty())
    throw empty_dataset_error("train: dataset has no patches");

  TrainResult result;
  result.model.feature_config = init ? init->feature_config : features;
  result.model.feature_config.validate();
  if (init) {
    if (init->weights.size() != kPixelFeatureCount)
      throw validation_error("train: init model has wrong weight count");
    result.model.weights = init->weights;
  }
  if (config.epochs == 0) return result;

  // materialize features once (float keeps the working set small; the
  // gradient math stays in double)
  std::size_t total = 0;
  for (const auto& p : dataset.patches) {
    if (p.label.width != p.image.width || p.label.height != p.image.height)
      throw validation_error("train: patch label dimensions differ from image");
    total += p.image.pixel_count();
  }
  std::vector<float> feats(total * kPixelFeatureCount);
  std::vector<std::uint8_t> labels(total);
  {
    std::vector<double> scratch;
    std::size_t at = 0;
    for (const auto& p : dataset.patches) {
      scratch.clear();
      extract_features(p.image, result.model.feature_config, scratch);
      for (std::size_t i = 0; i < scratch.size(); ++i)
        feats[at * kPixelFeatureCount + i] = static_cast<float>(scratch[i]);
      std::copy(p.label.data.begin(), p.label.data.end(), labels.begin() + at);
      at += p.image.pixel_count();
    }
  }

  std::vector<std::uint32_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(config.seed);

  std::vector<double>& w = result.model.weights;
  std::vector<float> batch_feats;
  std::vector<std::uint8_t> batch_labels;
  const std::size_t batch_size = std::min(config.minibatch, total);
  batch_feats.reserve(batch_size * kPixelFeatureCount);
  batch_labels.reserve(batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < total; start += batch_size) {
      std::size_t end = std::min(start + batch_size, total);
      batch_feats.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        std::uint32_t idx = order[k];
        const float* f = feats.data() + static_cast<std::size_t>(idx) * kPixelFeatureCount;
        batch_feats.insert(batch_feats.end(), f, f + kPixelFeatureCount);
        batch_labels.push_back(labels[idx]);
      }
      double grad[kPixelFeatureCount];
      double loss = detail::logistic_loss_grad(w.data(), batch_feats.data(),
                                               batch_labels.data(), batch_labels.size(),
                                               config.l2, grad);
      epoch_loss += loss * static_cast<double>(batch_labels.size());
      for (int k = 0; k < kPixelFeatureCount; ++k)
        w[k] -= config.learning_rate * grad[k];
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(total));
  }
  return result;
}

// Three-line text format: magic "LPM1", feature window, then the weights
// with enough digits to round-trip doubles exactly.
inline void save_model(const LogisticPixelModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot open model file '" + path + "' for writing");
  f << "LPM1\n" << model.feature_config.window << "\n";
  char buf[64];
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.weights[i]);
    f << (i ? " " : "") << buf;
  }
  f << "\n";
  if (!f) throw io_error("write failed for model file '" + path + "'");
}

inline LogisticPixelModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open model file '" + path + "'");
  std::string magic;
  if (!(f >> magic) || magic != "LPM1")
    throw io_error("model file '" + path + "' has bad magic (expected LPM1)");
  LogisticPixelModel model;
  if (!(f >> model.feature_config.window))
    throw io_error("model file '" + path + "' is missing the window size");
  model.feature_config.validate();
  model.weights.clear();
  double v;
  while (f >> v) model.weights.push_back(v);
  if (model.weights.size() != kPixelFeatureCount)
    throw io_error("model file '" + path + "' has " +
                   std::to_string(model.weights.size()) + " weights, expected " +
                   std::to_string(kPixelFeatureCount));
  return model;
}

}  // namespace orfseg
