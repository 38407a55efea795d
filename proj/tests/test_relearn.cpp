#include <catch2/catch_amalgamated.hpp>

#include "orfseg/relearn.hpp"
#include "orfseg/synthgen.hpp"
#include "test_util.hpp"

using namespace orfseg;

namespace {

class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(float value) : value_(value) {}
  BeliefMap predict(const Image& patch) const override {
    return BeliefMap::filled(patch.width, patch.height, value_);
  }

 private:
  float value_;
};

std::vector<LoadedSample> tiny_benchmark(std::uint64_t seed, int count) {
  SynthConfig c;
  c.image_size = 96;
  c.gland_count_min = 1;
  c.gland_count_max = 3;
  c.gland_radius_min = 14;
  c.gland_radius_max = 24;
  c.label_fraction_min = 0.5;
  c.label_fraction_max = 0.7;
  c.seed = seed;
  std::vector<LoadedSample> out;
  for (int i = 0; i < count; ++i) {
    SynthSample s = generate_sample(c, i);
    out.push_back({"s" + std::to_string(i), s.image, s.partial_label, s.truth, true});
  }
  return out;
}

RelearnConfig tiny_config() {
  RelearnConfig cfg;
  cfg.tiling = TilingConfig{96, 32, 16};
  cfg.eval_tiling = TilingConfig{96, 32, 16};
  cfg.train.epochs = 8;
  cfg.train.learning_rate = 0.5;
  cfg.smooth_kernel = 3;
  cfg.hole_mode = HoleMode::Keep;
  return cfg;
}

}  // namespace

TEST_CASE("merge_labels") {
  Mask original = Mask::filled(4, 4, 0);
  original.at(0, 0) = 1;

  SECTION("zero beliefs leave the labels unchanged") {
    CHECK(merge_labels(original, BeliefMap::filled(4, 4, 0.0f), 0.7) == original);
  }

  SECTION("confident beliefs fill everything") {
    Mask out = merge_labels(Mask::filled(4, 4, 0), BeliefMap::filled(4, 4, 0.9f), 0.7);
    CHECK(out == Mask::filled(4, 4, 1));
  }

  SECTION("a belief exactly at the confidence is added") {
    BeliefMap b = BeliefMap::filled(4, 4, 0.0f);
    b.at(2, 3) = 0.7f;
    Mask out = merge_labels(original, b, 0.7);
    CHECK(out.at(2, 3) == 1);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.positive_count() == 2);
  }

  SECTION("merge only ever grows the label set") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
      Mask labels = testutil::random_mask(8, 8, rng, 0.3);
      BeliefMap b = BeliefMap::filled(8, 8, 0.0f);
      for (auto& v : b.data) v = static_cast<float>(rng.uniform());
      Mask merged = merge_labels(labels, b, 0.7);
      for (std::size_t i = 0; i < merged.data.size(); ++i)
        CHECK(merged.data[i] >= labels.data[i]);
    }
  }
}

TEST_CASE("ensemble_predict") {
  Image patch = Image::filled(4, 4, 0.5f);

  SECTION("identical members pass through") {
    ConstantPredictor a(0.8f), b(0.8f);
    BeliefMap out = ensemble_predict(a, b, patch);
    for (float v : out.data) CHECK(v == 0.8f);
  }

  SECTION("opposite extremes average to the midpoint") {
    ConstantPredictor a(0.0f), b(1.0f);
    BeliefMap out = ensemble_predict(a, b, patch);
    for (float v : out.data) CHECK(v == 0.5f);
  }

  SECTION("0.6 and 0.8 average to 0.7") {
    ConstantPredictor a(0.6f), b(0.8f);
    BeliefMap out = ensemble_predict(a, b, patch);
    for (float v : out.data) CHECK(v == Catch::Approx(0.7).margin(1e-7));
  }

  SECTION("ensemble stays within the member range") {
    auto samples = tiny_benchmark(3, 1);
    LogisticPixelModel m1, m2;
    m1.weights = {-3.0, -2.0, 0.5, 2.0};
    m2.weights = {1.0, -4.0, 1.0, 1.5};
    ModelPredictor p1(m1), p2(m2);
    EnsemblePredictor ens(p1, p2);
    Image patch96 = crop(samples[0].image, PatchSpec{0, 0}, 32);
    BeliefMap a = p1.predict(patch96);
    BeliefMap b = p2.predict(patch96);
    BeliefMap e = ens.predict(patch96);
    for (std::size_t i = 0; i < e.data.size(); ++i) {
      CHECK(e.data[i] >= std::min(a.data[i], b.data[i]) - 1e-6f);
      CHECK(e.data[i] <= std::max(a.data[i], b.data[i]) + 1e-6f);
    }
  }
}

TEST_CASE("annotate_training_set") {
  auto samples = tiny_benchmark(7, 3);
  std::vector<Image> images;
  std::vector<Mask> labels;
  std::vector<Mask> truths;
  for (auto& s : samples) {
    images.push_back(s.image);
    labels.push_back(s.label);
    truths.push_back(s.truth);
  }
  TilingConfig tiling{96, 32, 16};

  SECTION("oracle beliefs drive labels to original ∪ truth") {
    for (std::size_t i = 0; i < images.size(); ++i) {
      OraclePredictor oracle(truths[i]);
      auto enhanced = annotate_training_set({images[i]}, {labels[i]}, oracle, tiling,
                                            /*smooth_kernel=*/1, 0.7);
      Mask expected = labels[i];
      for (std::size_t p = 0; p < expected.data.size(); ++p)
        expected.data[p] = expected.data[p] | truths[i].data[p];
      CHECK(enhanced[0] == expected);
    }
  }

  SECTION("an indifferent predictor changes nothing") {
    ConstantPredictor half(0.5f);
    auto enhanced = annotate_training_set(images, labels, half, tiling, 3, 0.7);
    for (std::size_t i = 0; i < labels.size(); ++i) CHECK(enhanced[i] == labels[i]);
  }

  SECTION("a saturated predictor floods the labels") {
    ConstantPredictor ones(1.0f);
    auto enhanced = annotate_training_set(images, labels, ones, tiling, 3, 0.7);
    for (const auto& m : enhanced) CHECK(m == Mask::filled(96, 96, 1));
  }

  SECTION("annotation is identical across thread counts") {
    auto serial = annotate_training_set(images, labels, ConstantPredictor(0.72f), tiling, 3,
                                        0.7, 1);
    auto threaded = annotate_training_set(images, labels, ConstantPredictor(0.72f), tiling, 3,
                                          0.7, 8);
    CHECK(serial == threaded);
  }
}

TEST_CASE("run_pipeline") {
  auto samples = tiny_benchmark(21, 6);

  SECTION("reviews=0 evaluates just the base model") {
    RelearnConfig cfg = tiny_config();
    cfg.reviews = 0;
    PipelineResult r = run_pipeline(samples, samples, cfg);
    CHECK(r.states.empty());
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].review == 0);
    CHECK(r.history[0].seconds_per_image == 0.0);
    CHECK(r.final_report.per_image.size() == samples.size());
  }

  SECTION("labels grow monotonically across reviews") {
    RelearnConfig cfg = tiny_config();
    cfg.reviews = 2;
    PipelineResult r = run_pipeline(samples, samples, cfg);
    REQUIRE(r.states.size() == 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t p = 0; p < samples[i].label.data.size(); ++p) {
        CHECK(r.states[0].labels[i].data[p] >= samples[i].label.data[p]);
        CHECK(r.states[1].labels[i].data[p] >= r.states[0].labels[i].data[p]);
      }
    }
    CHECK(r.history.size() == 3);
  }

  SECTION("pipeline runs are bit-deterministic") {
    RelearnConfig cfg = tiny_config();
    cfg.reviews = 1;
    PipelineResult a = run_pipeline(samples, samples, cfg);
    PipelineResult b = run_pipeline(samples, samples, cfg);
    CHECK(a.base_model.weights == b.base_model.weights);
    REQUIRE(a.states.size() == b.states.size());
    CHECK(a.states[0].model_mix.weights == b.states[0].model_mix.weights);
    CHECK(a.states[0].model_seq.weights == b.states[0].model_seq.weights);
    CHECK(history_json(a.history).dump() == history_json(b.history).dump());
  }

  SECTION("thread count does not change the results") {
    RelearnConfig cfg = tiny_config();
    cfg.reviews = 1;
    cfg.threads = 1;
    PipelineResult a = run_pipeline(samples, samples, cfg);
    cfg.threads = 8;
    PipelineResult b = run_pipeline(samples, samples, cfg);
    CHECK(a.states[0].model_mix.weights == b.states[0].model_mix.weights);
    CHECK(a.states[0].labels == b.states[0].labels);
    CHECK(history_json(a.history).dump() == history_json(b.history).dump());
  }

  SECTION("artifacts land in the output directory") {
    testutil::TempDir tmp;
    RelearnConfig cfg = tiny_config();
    cfg.reviews = 1;
    run_pipeline(samples, samples, cfg, tmp.file("run"));
    CHECK(std::filesystem::exists(tmp.file("run/base_model.lpm")));
    CHECK(std::filesystem::exists(tmp.file("run/review_1/model_mix.lpm")));
    CHECK(std::filesystem::exists(tmp.file("run/review_1/model_seq.lpm")));
    CHECK(std::filesystem::exists(tmp.file("run/review_1/labels/s0.png")));
    CHECK(std::filesystem::exists(tmp.file("run/history.json")));
  }

  SECTION("eval entries must carry ground truth") {
    auto no_truth = samples;
    no_truth[0].has_truth = false;
    RelearnConfig cfg = tiny_config();
    CHECK_THROWS_AS(run_pipeline(samples, no_truth, cfg), validation_error);
  }

  SECTION("config validation rejects out-of-range confidence") {
    RelearnConfig cfg = tiny_config();
    cfg.confidence = 0.4;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg.confidence = 1.0;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
  }
}

TEST_CASE("degenerate predictors trip the growth warning") {
  auto samples = tiny_benchmark(5, 4);
  detail::TrainingSet ts;
  for (auto& s : samples) {
    ts.ids.push_back(s.id);
    ts.images.push_back(s.image);
    ts.original_labels.push_back(s.label);
  }
  RelearnConfig cfg = tiny_config();
  cfg.preprocess = false;

  ReviewState state;
  state.labels = ts.original_labels;
  // a heavily positive model floods the annotation
  LogisticPixelModel flood;
  flood.weights = {0.0, 0.0, 0.0, 12.0};
  state.model_mix = flood;
  state.model_seq = flood;

  std::vector<std::string> warnings;
  ReviewState next = run_review(state, ts, cfg, &warnings);
  REQUIRE_FALSE(warnings.empty());
  CHECK(warnings[0].find("review 1") != std::string::npos);
  for (std::size_t i = 0; i < next.labels.size(); ++i)
    CHECK(next.labels[i] == Mask::filled(96, 96, 1));
}
