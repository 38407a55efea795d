#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orfseg/errors.hpp"
#include "orfseg/manifest.hpp"
#include "orfseg/metrics.hpp"
#include "orfseg/orf.hpp"
#include "orfseg/parallel.hpp"
#include "orfseg/patching.hpp"
#include "orfseg/postproc.hpp"
#include "orfseg/predictor.hpp"
#include "orfseg/preprocess.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

enum class ThresholdLabelSource { Enhanced, Original };

struct RelearnConfig {
  double confidence = 0.7;
  int reviews = 2;
  double area_threshold = 0.5;
  TilingConfig tiling;       // training and re-annotation tiles
  TilingConfig eval_tiling;  // inference tiles (stride may be finer)
  TrainConfig train;
  PixelFeatures features;
  BinarizeConfig binarize;
  bool preprocess = true;
  HoleMode hole_mode = HoleMode::Fill;
  int min_hole_area = 0;
  int smooth_kernel = 11;
  double mask_threshold = 0.5;
  ThresholdLabelSource threshold_label_source = ThresholdLabelSource::Enhanced;
  int threads = 1;
  bool wall_timing = false;  // wall-clock in history breaks byte-reproducibility

  void validate() const {
    if (!(confidence > 0.5 && confidence < 1.0))
      throw validation_error("relearn: confidence must be in (0.5, 1)");
    if (reviews < 0) throw validation_error("relearn: reviews must be >= 0");
    if (smooth_kernel < 1 || smooth_kernel % 2 == 0)
      throw validation_error("relearn: smooth kernel must be odd and >= 1");
    if (!(mask_threshold > 0.0 && mask_threshold < 1.0))
      throw validation_error("relearn: mask threshold must be in (0,1)");
    if (min_hole_area < 0) throw validation_error("relearn: min hole area must be >= 0");
    tiling.validate();
    eval_tiling.validate();
    train.validate();
    features.validate();
    binarize.validate();
  }
};

// Union of the original annotations with the confident positives; ties at
// the confidence level are added. Labels only ever grow.
inline Mask merge_labels(const Mask& original, const BeliefMap& belief, double confidence) {
  if (!same_dimensions(belief, original))
    throw validation_error("merge_labels: dimension mismatch");
  const float cut = static_cast<float>(confidence);
  Mask out = original;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    if (belief.data[i] >= cut) out.data[i] = 1;
  return out;
}

// Pixelwise arithmetic mean of two member predictions.
inline BeliefMap ensemble_predict(const Predictor& a, const Predictor& b, const Image& patch) {
  BeliefMap ba = a.predict(patch);
  BeliefMap bb = b.predict(patch);
  if (ba.width != bb.width || ba.height != bb.height)
    throw validation_error("ensemble_predict: member output dimensions differ");
  for (std::size_t i = 0; i < ba.data.size(); ++i)
    ba.data[i] = static_cast<float>(
        0.5 * (static_cast<double>(ba.data[i]) + static_cast<double>(bb.data[i])));
  return ba;
}

class EnsemblePredictor final : public Predictor {
 public:
  EnsemblePredictor(const Predictor& a, const Predictor& b) : a_(a), b_(b) {}

  BeliefMap predict(const Image& patch) const override {
    return ensemble_predict(a_, b_, patch);
  }

  BeliefMap predict_at(const Image& patch, const PatchSpec& spec) const override {
    BeliefMap ba = a_.predict_at(patch, spec);
    BeliefMap bb = b_.predict_at(patch, spec);
    if (ba.width != bb.width || ba.height != bb.height)
      throw validation_error("ensemble_predict: member output dimensions differ");
    for (std::size_t i = 0; i < ba.data.size(); ++i)
      ba.data[i] = static_cast<float>(
          0.5 * (static_cast<double>(ba.data[i]) + static_cast<double>(bb.data[i])));
    return ba;
  }

 private:
  const Predictor& a_;
  const Predictor& b_;
};

// Tiled inference: gallery -> overlap-averaged stitch -> smoothing.
inline BeliefMap forecast(const Image& image, const TilingConfig& tiling,
                          const Predictor& predictor, int smooth_kernel, int threads = 1) {
  Gallery g = build_gallery(image, tiling, predictor, threads);
  BeliefMap stitched = stitch(g);
  return smooth_kernel > 1 ? smooth(stitched, smooth_kernel) : stitched;
}

// Full validation chain: forecast -> threshold cut -> hole handling.
inline Mask infer_mask(const Image& image, const TilingConfig& tiling,
                       const Predictor& predictor, int smooth_kernel, double threshold,
                       HoleMode hole_mode, int min_hole_area = 0, int threads = 1) {
  BeliefMap belief = forecast(image, tiling, predictor, smooth_kernel, threads);
  return flood_fill_holes(binarize(belief, threshold), hole_mode, min_hole_area);
}

// Re-annotates every training image with the current predictor and merges
// the confident positives into the current labels. No threshold cut and no
// hole filling here: merging works on raw smoothed beliefs.
inline std::vector<Mask> annotate_training_set(const std::vector<Image>& images,
                                               const std::vector<Mask>& current_labels,
                                               const Predictor& predictor,
                                               const TilingConfig& tiling, int smooth_kernel,
                                               double confidence, int threads = 1) {
  if (images.size() != current_labels.size())
    throw validation_error("annotate_training_set: image/label count mismatch");
  std::vector<Mask> enhanced(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    BeliefMap belief = forecast(images[i], tiling, predictor, smooth_kernel, 1);
    enhanced[i] = merge_labels(current_labels[i], belief, confidence);
  });
  return enhanced;
}

// State after a review: the grown label pool plus the two fine-tuned branch
// models. Before the first review both branches hold the base patch model,
// so the "current predictor" is uniformly the branch ensemble.
struct ReviewState {
  int review_index = 0;
  std::vector<Mask> labels;
  LogisticPixelModel model_mix;
  LogisticPixelModel model_seq;
};

struct HistoryRow {
  int review = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;
  double seconds_per_image = 0.0;
};

struct PipelineResult {
  LogisticPixelModel base_model;
  std::vector<ReviewState> states;  // one per completed review
  std::vector<HistoryRow> history;  // row 0 is the base model
  MetricsReport final_report;
  std::vector<std::string> warnings;
};

namespace detail {

struct TrainingSet {
  std::vector<std::string> ids;
  std::vector<Image> images;
  std::vector<Mask> original_labels;
  std::vector<Mask> background;  // empty when preprocessing is off
};

// Dataset labels are the current pool with background positives suppressed;
// the Mix threshold can be evaluated on the pool itself or on the original
// annotations.
inline PatchDataset make_dataset(const TrainingSet& ts, const std::vector<Mask>& labels,
                                 const RelearnConfig& config, DatasetKind kind) {
  std::vector<SourceSample> sources(ts.images.size());
  for (std::size_t i = 0; i < ts.images.size(); ++i) {
    sources[i].id = ts.ids[i];
    sources[i].image = ts.images[i];
    sources[i].label = config.preprocess && !ts.background.empty()
                           ? apply_background_mask(labels[i], ts.background[i])
                           : labels[i];
  }
  const std::vector<Mask>* selection = nullptr;
  if (kind == DatasetKind::Mix &&
      config.threshold_label_source == ThresholdLabelSource::Original)
    selection = &ts.original_labels;
  return build_dataset(sources, config.tiling, kind, config.area_threshold, selection);
}

}  // namespace detail

// One review: re-annotate with the current branch ensemble, grow the label
// pool, rebuild the two datasets, fine-tune each branch from its own previous
// weights, and hand back the next state.
inline ReviewState run_review(const ReviewState& state, const detail::TrainingSet& ts,
                              const RelearnConfig& config,
                              std::vector<std::string>* warnings = nullptr) {
  ModelPredictor branch_mix(state.model_mix);
  ModelPredictor branch_seq(state.model_seq);
  EnsemblePredictor current(branch_mix, branch_seq);

  ReviewState next;
  next.review_index = state.review_index + 1;
  next.labels = annotate_training_set(ts.images, state.labels, current, config.tiling,
                                      config.smooth_kernel, config.confidence, config.threads);

  // guard against runaway self-labeling
  std::int64_t previously_negative = 0;
  std::int64_t newly_added = 0;
  for (std::size_t i = 0; i < next.labels.size(); ++i)
    for (std::size_t p = 0; p < next.labels[i].data.size(); ++p) {
      if (!state.labels[i].data[p]) {
        ++previously_negative;
        newly_added += next.labels[i].data[p];
      }
    }
  if (previously_negative > 0 && newly_added * 2 > previously_negative && warnings) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "review %d: labels grew by %lld of %lld previously-negative pixels "
                  "(>50%%); the predictor may be degenerating",
                  next.review_index, static_cast<long long>(newly_added),
                  static_cast<long long>(previously_negative));
    warnings->push_back(buf);
  }

  PatchDataset mix = detail::make_dataset(ts, next.labels, config, DatasetKind::Mix);
  if (mix.patches.empty())
    throw empty_dataset_error("review " + std::to_string(next.review_index) +
                              ": no patches reach the area threshold; labels too sparse");
  PatchDataset seq = detail::make_dataset(ts, next.labels, config, DatasetKind::Sequential);

  next.model_mix = train(mix, config.train, state.model_mix).model;
  next.model_seq = train(seq, config.train, state.model_seq).model;
  return next;
}

namespace detail {

struct EvalSet {
  std::vector<std::string> ids;
  std::vector<Image> images;
  std::vector<Mask> truths;
};

inline HistoryRow evaluate_state(const Predictor& predictor, const EvalSet& eval,
                                 const RelearnConfig& config, int review_index,
                                 MetricsReport* report_out) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Mask> predictions(eval.images.size());
  parallel_for(eval.images.size(), config.threads, [&](std::size_t i) {
    predictions[i] = infer_mask(eval.images[i], config.eval_tiling, predictor,
                                config.smooth_kernel, config.mask_threshold,
                                config.hole_mode, config.min_hole_area, 1);
  });
  auto t1 = std::chrono::steady_clock::now();

  std::vector<PredTruth> items(eval.images.size());
  for (std::size_t i = 0; i < eval.images.size(); ++i)
    items[i] = PredTruth{eval.ids[i], &predictions[i], &eval.truths[i]};
  MetricsReport report = evaluate(items);

  HistoryRow row;
  row.review = review_index;
  row.mean_precision = report.mean_precision;
  row.mean_recall = report.mean_recall;
  row.mean_accuracy = report.mean_accuracy;
  row.mean_iou = report.mean_iou;
  if (config.wall_timing && !eval.images.empty())
    row.seconds_per_image = std::chrono::duration<double>(t1 - t0).count() /
                            static_cast<double>(eval.images.size());
  if (report_out) *report_out = std::move(report);
  return row;
}

}  // namespace detail

inline nlohmann::json history_json(const std::vector<HistoryRow>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : history) {
    nlohmann::json j;
    j["review"] = row.review;
    j["mean_precision"] = row.mean_precision;
    j["mean_recall"] = row.mean_recall;
    j["mean_accuracy"] = row.mean_accuracy;
    j["mean_iou"] = row.mean_iou;
    j["seconds_per_image"] = row.seconds_per_image;
    arr.push_back(j);
  }
  return arr;
}

// Full reiterative run: base patch model on the thresholded original labels,
// config.reviews review rounds, evaluation of every stage on the eval set
// through the complete inference chain. With an output directory, writes
// base_model.lpm, review_<k>/model_{mix,seq}.lpm, review_<k>/labels/<id>.png
// and history.json.
inline PipelineResult run_pipeline(const std::vector<LoadedSample>& train_samples,
                                   const std::vector<LoadedSample>& eval_samples,
                                   const RelearnConfig& config,
                                   const std::string& out_dir = std::string(),
                                   std::ostream* log = nullptr) {
  config.validate();
  if (train_samples.empty()) throw empty_dataset_error("relearn: no training samples");

  detail::TrainingSet ts;
  for (const auto& s : train_samples) {
    if (s.image.width != config.tiling.image_size || s.image.height != config.tiling.image_size)
      throw validation_error("relearn: training image '" + s.id + "' is not tiling-sized");
    ts.ids.push_back(s.id);
    ts.images.push_back(s.image);
    ts.original_labels.push_back(s.label);
  }
  if (config.preprocess) {
    ts.background.resize(ts.images.size());
    parallel_for(ts.images.size(), config.threads, [&](std::size_t i) {
      ts.background[i] = background_mask(ts.images[i], config.binarize);
    });
  }

  detail::EvalSet eval;
  for (const auto& s : eval_samples) {
    if (!s.has_truth)
      throw validation_error("relearn: eval entry '" + s.id + "' has no ground truth");
    eval.ids.push_back(s.id);
    eval.images.push_back(s.image);
    eval.truths.push_back(s.truth);
  }

  namespace fs = std::filesystem;
  const bool write_artifacts = !out_dir.empty();
  if (write_artifacts) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("relearn: cannot create output directory: " + ec.message());
  }

  PipelineResult result;

  // base patch model on the original annotations
  PatchDataset base_mix = detail::make_dataset(ts, ts.original_labels, config, DatasetKind::Mix);
  if (base_mix.patches.empty())
    throw empty_dataset_error("relearn: no patches reach the area threshold in the "
                              "original labels");
  result.base_model =
      train(base_mix, config.train, std::nullopt, config.features).model;
  if (write_artifacts) save_model(result.base_model, (fs::path(out_dir) / "base_model.lpm").string());

  ReviewState state;
  state.review_index = 0;
  state.labels = ts.original_labels;
  state.model_mix = result.base_model;
  state.model_seq = result.base_model;

  auto evaluate_current = [&](const ReviewState& st, MetricsReport* report_out) {
    ModelPredictor branch_mix(st.model_mix);
    ModelPredictor branch_seq(st.model_seq);
    EnsemblePredictor ens(branch_mix, branch_seq);
    return detail::evaluate_state(ens, eval, config, st.review_index, report_out);
  };

  if (!eval.images.empty()) {
    HistoryRow row = evaluate_current(state, &result.final_report);
    result.history.push_back(row);
    if (log)
      *log << "review 0 (base model): mean_iou=" << row.mean_iou
           << " mean_accuracy=" << row.mean_accuracy << "\n";
  }

  for (int k = 1; k <= config.reviews; ++k) {
    state = run_review(state, ts, config, &result.warnings);
    if (write_artifacts) {
      fs::path review_dir = fs::path(out_dir) / ("review_" + std::to_string(k));
      std::error_code ec;
      fs::create_directories(review_dir / "labels", ec);
      if (ec) throw io_error("relearn: cannot create review directory: " + ec.message());
      save_model(state.model_mix, (review_dir / "model_mix.lpm").string());
      save_model(state.model_seq, (review_dir / "model_seq.lpm").string());
      for (std::size_t i = 0; i < ts.ids.size(); ++i)
        save_mask(state.labels[i], (review_dir / "labels" / (ts.ids[i] + ".png")).string());
    }
    if (!eval.images.empty()) {
      HistoryRow row = evaluate_current(state, &result.final_report);
      result.history.push_back(row);
      if (log)
        *log << "review " << k << " (ensemble): mean_iou=" << row.mean_iou
             << " mean_accuracy=" << row.mean_accuracy << "\n";
    }
    result.states.push_back(state);
  }

  if (write_artifacts) {
    std::ofstream f(fs::path(out_dir) / "history.json");
    if (!f) throw io_error("relearn: cannot write history.json");
    f << history_json(result.history).dump(2) << "\n";
  }
  return result;
}

}  // namespace orfseg
