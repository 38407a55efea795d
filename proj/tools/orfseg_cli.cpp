// Command-line front end for the segmentation pipeline: synthetic dataset
// generation, patch-model training, tiled prediction, evaluation against
// ground truth, and the full reiterative-learning run.
//
// Exit codes: 0 ok, 1 runtime/I-O failure, 2 validation failure, 3 empty
// result (e.g. no patches survive the area threshold).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orfseg/orfseg.hpp"

namespace fs = std::filesystem;

namespace {

struct TilingFlags {
  int patch = 64;
  int stride = 32;
};

struct TrainFlags {
  int epochs = 20;
  double learning_rate = 0.1;
  std::size_t minibatch = 4096;
  double l2 = 1e-4;
  int window = 5;
  std::uint64_t seed = 0;
};

struct PreprocessFlags {
  bool enabled = true;
  std::string binarize = "otsu";
  double binarize_threshold = 0.9;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--lr", f.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--minibatch", f.minibatch, "Minibatch size in pixels")
      ->capture_default_str();
  cmd->add_option("--l2", f.l2, "L2 regularization strength")->capture_default_str();
  cmd->add_option("--window", f.window, "Feature window side (odd)")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
}

void add_preprocess_flags(CLI::App* cmd, PreprocessFlags& f) {
  cmd->add_flag("--preprocess,!--no-preprocess", f.enabled,
                "Suppress label positives on binarized background/pipe pixels")
      ->capture_default_str();
  cmd->add_option("--binarize", f.binarize, "Binarization method for the background mask")
      ->check(CLI::IsMember({"otsu", "fixed"}))
      ->capture_default_str();
  cmd->add_option("--binarize-threshold", f.binarize_threshold,
                  "Luminance cut when --binarize fixed")
      ->capture_default_str();
}

orfseg::TrainConfig to_train_config(const TrainFlags& f) {
  orfseg::TrainConfig c;
  c.epochs = f.epochs;
  c.learning_rate = f.learning_rate;
  c.minibatch = f.minibatch;
  c.l2 = f.l2;
  c.seed = f.seed;
  c.validate();
  return c;
}

orfseg::BinarizeConfig to_binarize_config(const PreprocessFlags& f) {
  orfseg::BinarizeConfig c;
  c.method = f.binarize == "fixed" ? orfseg::BinarizeMethod::Fixed
                                   : orfseg::BinarizeMethod::Otsu;
  c.fixed_threshold = f.binarize_threshold;
  c.validate();
  return c;
}

orfseg::HoleMode to_hole_mode(const std::string& s) {
  return s == "keep" ? orfseg::HoleMode::Keep : orfseg::HoleMode::Fill;
}

// Loads manifest samples and applies the background mask to their labels.
std::vector<orfseg::LoadedSample> load_samples(const std::string& manifest_path) {
  std::vector<orfseg::LoadedSample> samples;
  for (const auto& entry : orfseg::read_manifest(manifest_path))
    samples.push_back(orfseg::load_sample(entry));
  return samples;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out_dir;
  int count = 0;
  std::string config_path;
  int size = 256;
  std::uint64_t seed = 0;
  double label_min = 0.2, label_max = 0.7;
  int gland_min = 0, gland_max = 6;
  double radius_min = 16.0, radius_max = 40.0;
  double pipe_prob = 0.5;
  double noise_sigma = 0.05;
  double background_intensity = 0.95, gland_intensity = 0.45, pipe_intensity = 0.9;
};

int cmd_synth(const SynthArgs& a, const CLI::App* cmd) {
  orfseg::SynthConfig config;
  if (!a.config_path.empty()) {
    std::ifstream f(a.config_path);
    if (!f) throw orfseg::io_error("cannot open config '" + a.config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw orfseg::validation_error("config '" + a.config_path + "': " + e.what());
    }
    config = orfseg::synth_config_from_json(j);
  }
  auto given = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (given("--size")) config.image_size = a.size;
  if (given("--seed")) config.seed = a.seed;
  if (given("--label-min")) config.label_fraction_min = a.label_min;
  if (given("--label-max")) config.label_fraction_max = a.label_max;
  if (given("--gland-min")) config.gland_count_min = a.gland_min;
  if (given("--gland-max")) config.gland_count_max = a.gland_max;
  if (given("--radius-min")) config.gland_radius_min = a.radius_min;
  if (given("--radius-max")) config.gland_radius_max = a.radius_max;
  if (given("--pipe-prob")) config.pipe_probability = a.pipe_prob;
  if (given("--noise-sigma")) config.noise_sigma = a.noise_sigma;
  if (given("--background-intensity")) config.background_intensity = a.background_intensity;
  if (given("--gland-intensity")) config.gland_intensity = a.gland_intensity;
  if (given("--pipe-intensity")) config.pipe_intensity = a.pipe_intensity;
  config.validate();

  std::string manifest = orfseg::generate_dataset(config, a.count, a.out_dir);
  std::cout << manifest << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string manifest;
  std::string out_path;
  std::string init_path;
  std::string mode = "mix";
  double area_threshold = 0.5;
  TilingFlags tiling;
  TrainFlags train;
  PreprocessFlags preprocess;
  int threads = 1;
};

int cmd_train(const TrainArgs& a) {
  std::vector<orfseg::LoadedSample> samples = load_samples(a.manifest);
  if (samples.empty()) throw orfseg::empty_dataset_error("manifest has no entries");

  orfseg::TilingConfig tiling{samples.front().image.width, a.tiling.patch, a.tiling.stride};
  tiling.validate();

  orfseg::BinarizeConfig binarize = to_binarize_config(a.preprocess);
  std::vector<orfseg::SourceSample> sources(samples.size());
  orfseg::parallel_for(samples.size(), a.threads, [&](std::size_t i) {
    sources[i].id = samples[i].id;
    sources[i].image = samples[i].image;
    sources[i].label = a.preprocess.enabled
                           ? orfseg::apply_background_mask(
                                 samples[i].label, orfseg::background_mask(samples[i].image, binarize))
                           : samples[i].label;
  });

  orfseg::DatasetKind kind = a.mode == "sequential" ? orfseg::DatasetKind::Sequential
                                                    : orfseg::DatasetKind::Mix;
  orfseg::PatchDataset dataset = orfseg::build_dataset(sources, tiling, kind, a.area_threshold);
  if (dataset.patches.empty())
    throw orfseg::empty_dataset_error("no patches reach area threshold " +
                                      std::to_string(a.area_threshold));

  std::optional<orfseg::LogisticPixelModel> init;
  if (!a.init_path.empty()) init = orfseg::load_model(a.init_path);
  orfseg::PixelFeatures features{a.train.window};
  orfseg::TrainResult result = orfseg::train(dataset, to_train_config(a.train), init, features);
  orfseg::save_model(result.model, a.out_path);

  std::cout << "patches: " << dataset.patches.size() << "\n";
  if (result.epoch_losses.empty())
    std::cout << "final loss: n/a (0 epochs)\n";
  else
    std::cout << "final loss: " << result.epoch_losses.back() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model_path;
  std::string image_path;
  std::string out_path;
  std::string belief_path;
  TilingFlags tiling{64, 16};
  int smooth = 11;
  double threshold = 0.5;
  std::string holes = "fill";
  int min_hole_area = 0;
  int threads = 1;
};

int cmd_predict(const PredictArgs& a) {
  orfseg::LogisticPixelModel model = orfseg::load_model(a.model_path);
  orfseg::Image image = orfseg::load_image(a.image_path);
  if (image.width != image.height)
    throw orfseg::validation_error("input image must be square for tiling");
  orfseg::TilingConfig tiling{image.width, a.tiling.patch, a.tiling.stride};
  tiling.validate();

  orfseg::ModelPredictor predictor(model);
  orfseg::BeliefMap belief =
      orfseg::forecast(image, tiling, predictor, a.smooth, a.threads);
  if (!a.belief_path.empty()) {
    orfseg::save_belief_png(belief, a.belief_path);
    orfseg::save_belief_f32(belief, a.belief_path + ".f32");
  }
  orfseg::Mask mask = orfseg::flood_fill_holes(orfseg::binarize(belief, a.threshold),
                                               to_hole_mode(a.holes), a.min_hole_area);
  orfseg::save_mask(mask, a.out_path);
  std::cout << a.out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string manifest;
  std::string pred_dir;
  std::string report_path;
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<orfseg::ManifestEntry> entries = orfseg::read_manifest(a.manifest);
  std::vector<orfseg::Mask> preds; // keep storage alive for the report views
  std::vector<orfseg::Mask> truths;
  preds.reserve(entries.size());
  truths.reserve(entries.size());
  std::vector<orfseg::PredTruth> items;
  for (const auto& e : entries) {
    if (!e.has_truth())
      throw orfseg::validation_error("entry '" + e.id + "' has no ground truth");
    fs::path pred_path = fs::path(a.pred_dir) / (e.id + ".png");
    if (!fs::exists(pred_path))
      throw orfseg::io_error("missing prediction for '" + e.id + "' at " + pred_path.string());
    preds.push_back(orfseg::load_mask(pred_path.string()));
    truths.push_back(orfseg::load_mask(e.truth_path));
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    items.push_back(orfseg::PredTruth{entries[i].id, &preds[i], &truths[i]});

  orfseg::MetricsReport report = orfseg::evaluate(items);
  orfseg::print_table(report, std::cout);
  if (!a.report_path.empty()) {
    std::ofstream f(a.report_path);
    if (!f) throw orfseg::io_error("cannot write report '" + a.report_path + "'");
    f << orfseg::report_json(report).dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// relearn

struct RelearnArgs {
  std::string manifest;
  std::string eval_manifest;
  std::string out_dir;
  int reviews = 2;
  double confidence = 0.7;
  double area_threshold = 0.5;
  TilingFlags tiling;
  int eval_stride = 16;
  int smooth = 11;
  double threshold = 0.5;
  std::string holes = "fill";
  int min_hole_area = 0;
  std::string threshold_label_source = "enhanced";
  TrainFlags train;
  PreprocessFlags preprocess;
  int threads = 1;
  std::string timing = "off";
};

int cmd_relearn(const RelearnArgs& a) {
  std::vector<orfseg::LoadedSample> train_samples = load_samples(a.manifest);
  if (train_samples.empty()) throw orfseg::empty_dataset_error("manifest has no entries");
  std::vector<orfseg::LoadedSample> eval_samples =
      a.eval_manifest.empty() ? train_samples : load_samples(a.eval_manifest);

  orfseg::RelearnConfig config;
  config.confidence = a.confidence;
  config.reviews = a.reviews;
  config.area_threshold = a.area_threshold;
  config.tiling = {train_samples.front().image.width, a.tiling.patch, a.tiling.stride};
  config.eval_tiling = {eval_samples.empty() ? config.tiling.image_size
                                             : eval_samples.front().image.width,
                        a.tiling.patch, a.eval_stride};
  config.train = to_train_config(a.train);
  config.features = orfseg::PixelFeatures{a.train.window};
  config.binarize = to_binarize_config(a.preprocess);
  config.preprocess = a.preprocess.enabled;
  config.hole_mode = to_hole_mode(a.holes);
  config.min_hole_area = a.min_hole_area;
  config.smooth_kernel = a.smooth;
  config.mask_threshold = a.threshold;
  config.threshold_label_source = a.threshold_label_source == "original"
                                      ? orfseg::ThresholdLabelSource::Original
                                      : orfseg::ThresholdLabelSource::Enhanced;
  config.threads = a.threads;
  config.wall_timing = a.timing == "wall";
  config.validate();

  orfseg::PipelineResult result =
      orfseg::run_pipeline(train_samples, eval_samples, config, a.out_dir, &std::cout);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (fs::path(a.out_dir) / "history.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-based segmentation pipeline with overlapped-region stitching "
               "and reiterative learning on partial labels"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--count", synth_args.count, "Number of samples")->required();
  synth->add_option("--config", synth_args.config_path, "SynthConfig JSON file");
  synth->add_option("--size", synth_args.size, "Image side in pixels")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth->add_option("--label-min", synth_args.label_min, "Min fraction of truth annotated")
      ->capture_default_str();
  synth->add_option("--label-max", synth_args.label_max, "Max fraction of truth annotated")
      ->capture_default_str();
  synth->add_option("--gland-min", synth_args.gland_min, "Min gland count")->capture_default_str();
  synth->add_option("--gland-max", synth_args.gland_max, "Max gland count")->capture_default_str();
  synth->add_option("--radius-min", synth_args.radius_min, "Min gland semi-axis (px)")
      ->capture_default_str();
  synth->add_option("--radius-max", synth_args.radius_max, "Max gland semi-axis (px)")
      ->capture_default_str();
  synth->add_option("--pipe-prob", synth_args.pipe_prob, "Probability a gland has a pipe")
      ->capture_default_str();
  synth->add_option("--noise-sigma", synth_args.noise_sigma, "Gaussian noise sigma")
      ->capture_default_str();
  synth->add_option("--background-intensity", synth_args.background_intensity, "Background level")
      ->capture_default_str();
  synth->add_option("--gland-intensity", synth_args.gland_intensity, "Gland level")
      ->capture_default_str();
  synth->add_option("--pipe-intensity", synth_args.pipe_intensity, "Pipe level")
      ->capture_default_str();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a patch model from a manifest");
  train->add_option("--manifest", train_args.manifest, "Dataset manifest")->required();
  train->add_option("--out", train_args.out_path, "Output model file")->required();
  train->add_option("--init", train_args.init_path, "Warm-start from this model");
  train->add_option("--mode", train_args.mode, "Patch selection")
      ->check(CLI::IsMember({"mix", "sequential"}))
      ->capture_default_str();
  train->add_option("--area-threshold", train_args.area_threshold,
                    "Min annotated fraction for mix patches")
      ->capture_default_str();
  train->add_option("--patch", train_args.tiling.patch, "Patch side in pixels")
      ->capture_default_str();
  train->add_option("--stride", train_args.tiling.stride, "Tiling stride")->capture_default_str();
  add_train_flags(train, train_args.train);
  add_preprocess_flags(train, train_args.preprocess);
  train->add_option("--threads", train_args.threads, "Worker threads")
      ->envname("ORF_THREADS")
      ->capture_default_str();

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Tiled inference on one image");
  predict->add_option("--model", predict_args.model_path, "Model file")->required();
  predict->add_option("--image", predict_args.image_path, "Input image PNG")->required();
  predict->add_option("--out", predict_args.out_path, "Output mask PNG")->required();
  predict->add_option("--belief", predict_args.belief_path,
                      "Also write the belief map PNG (plus .f32 sidecar)");
  predict->add_option("--patch", predict_args.tiling.patch, "Patch side in pixels")
      ->capture_default_str();
  predict->add_option("--stride", predict_args.tiling.stride, "Tiling stride")
      ->capture_default_str();
  predict->add_option("--smooth", predict_args.smooth, "Mean filter kernel (odd; 1 disables)")
      ->capture_default_str();
  predict->add_option("--threshold", predict_args.threshold, "Belief cut for the mask")
      ->capture_default_str();
  predict->add_option("--holes", predict_args.holes, "Enclosed-negative handling")
      ->check(CLI::IsMember({"fill", "keep"}))
      ->capture_default_str();
  predict->add_option("--min-hole-area", predict_args.min_hole_area,
                      "Area cutoff for the hole rule")
      ->capture_default_str();
  predict->add_option("--threads", predict_args.threads, "Worker threads")
      ->envname("ORF_THREADS")
      ->capture_default_str();

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--manifest", evaluate_args.manifest, "Dataset manifest")->required();
  evaluate->add_option("--pred-dir", evaluate_args.pred_dir, "Directory of <id>.png predictions")
      ->required();
  evaluate->add_option("--report", evaluate_args.report_path, "Write the report as JSON");

  RelearnArgs relearn_args;
  CLI::App* relearn = app.add_subcommand("relearn", "Full reiterative-learning pipeline");
  relearn->add_option("--manifest", relearn_args.manifest, "Training manifest")->required();
  relearn->add_option("--out", relearn_args.out_dir, "Output directory")->required();
  relearn->add_option("--eval-manifest", relearn_args.eval_manifest,
                      "Evaluation manifest (defaults to the training manifest)");
  relearn->add_option("--reviews", relearn_args.reviews, "Review rounds")->capture_default_str();
  relearn->add_option("--confidence", relearn_args.confidence,
                      "Belief level merged into labels, in (0.5,1)")
      ->capture_default_str();
  relearn->add_option("--area-threshold", relearn_args.area_threshold,
                      "Min annotated fraction for mix patches")
      ->capture_default_str();
  relearn->add_option("--patch", relearn_args.tiling.patch, "Patch side in pixels")
      ->capture_default_str();
  relearn->add_option("--stride", relearn_args.tiling.stride, "Training/annotation stride")
      ->capture_default_str();
  relearn->add_option("--eval-stride", relearn_args.eval_stride, "Inference stride")
      ->capture_default_str();
  relearn->add_option("--smooth", relearn_args.smooth, "Mean filter kernel (odd; 1 disables)")
      ->capture_default_str();
  relearn->add_option("--threshold", relearn_args.threshold, "Belief cut for predictions")
      ->capture_default_str();
  relearn->add_option("--holes", relearn_args.holes, "Enclosed-negative handling")
      ->check(CLI::IsMember({"fill", "keep"}))
      ->capture_default_str();
  relearn->add_option("--min-hole-area", relearn_args.min_hole_area,
                      "Area cutoff for the hole rule")
      ->capture_default_str();
  relearn->add_option("--threshold-label-source", relearn_args.threshold_label_source,
                      "Labels the mix threshold is evaluated on")
      ->check(CLI::IsMember({"enhanced", "original"}))
      ->capture_default_str();
  add_train_flags(relearn, relearn_args.train);
  add_preprocess_flags(relearn, relearn_args.preprocess);
  relearn->add_option("--threads", relearn_args.threads, "Worker threads")
      ->envname("ORF_THREADS")
      ->capture_default_str();
  relearn->add_option("--timing", relearn_args.timing,
                      "seconds_per_image source; 'wall' is not byte-reproducible")
      ->check(CLI::IsMember({"off", "wall"}))
      ->capture_default_str();

  int rc = 0;
  synth->callback([&] { rc = cmd_synth(synth_args, synth); });
  train->callback([&] { rc = cmd_train(train_args); });
  predict->callback([&] { rc = cmd_predict(predict_args); });
  evaluate->callback([&] { rc = cmd_evaluate(evaluate_args); });
  relearn->callback([&] { rc = cmd_relearn(relearn_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const orfseg::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const orfseg::empty_dataset_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const orfseg::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
