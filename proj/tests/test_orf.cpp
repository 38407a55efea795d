#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "orfseg/orf.hpp"
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

// deterministic pseudo-random beliefs keyed by patch origin
class NoisePredictor final : public Predictor {
 public:
  BeliefMap predict(const Image& patch) const override {
    return BeliefMap::filled(patch.width, patch.height, 0.5f);
  }
  BeliefMap predict_at(const Image& patch, const PatchSpec& spec) const override {
    Rng rng(mix64(static_cast<std::uint64_t>(spec.row0) * 7919 + spec.col0, 17));
    BeliefMap b = BeliefMap::filled(patch.width, patch.height, 0.0f);
    for (auto& v : b.data) v = static_cast<float>(rng.uniform());
    return b;
  }
};

// brute-force 1-D interval count
int bruteforce_coverage(int p, const TilingConfig& c) {
  int n = 0;
  for (int origin = 0; origin + c.patch_size <= c.image_size; origin += c.stride)
    if (origin <= p && p < origin + c.patch_size) ++n;
  return n;
}

}  // namespace

TEST_CASE("coverage_count_1d") {
  SECTION("left corner is covered once") {
    CHECK(coverage_count_1d(0, TilingConfig{16, 8, 4}) == 1);
    CHECK(coverage_count_1d(0, TilingConfig{2048, 512, 128}) == 1);
  }

  SECTION("16/8/4 interior pixel 5 is covered by the patches at 0 and 4") {
    CHECK(coverage_count_1d(5, TilingConfig{16, 8, 4}) == 2);
  }

  SECTION("far border decays: pixel 15 of 16/8/4 is covered once") {
    // the symmetric closed form min(ceil((p+1)/stride), patch/stride) would
    // claim 2 here; the exact interval count is authoritative
    TilingConfig c{16, 8, 4};
    CHECK(coverage_count_1d(15, c) == 1);
    CHECK(bruteforce_coverage(15, c) == 1);
    int closed_form = std::min((15 + 1 + c.stride - 1) / c.stride, c.patch_size / c.stride);
    CHECK(closed_form == 2);
  }

  SECTION("matches brute force everywhere on assorted configs") {
    for (TilingConfig c : {TilingConfig{16, 8, 4}, TilingConfig{24, 8, 2},
                           TilingConfig{64, 16, 16}, TilingConfig{60, 12, 6}}) {
      for (int p = 0; p < c.image_size; ++p)
        CHECK(coverage_count_1d(p, c) == bruteforce_coverage(p, c));
    }
  }

  SECTION("interior pixels sit at the cap patch/stride") {
    TilingConfig c{64, 16, 4};
    for (int p = c.patch_size - 1; p <= c.image_size - c.patch_size; ++p)
      CHECK(coverage_count_1d(p, c) == c.patch_size / c.stride);
  }

  SECTION("out-of-range pixels are rejected") {
    CHECK_THROWS_AS(coverage_count_1d(-1, TilingConfig{16, 8, 4}), validation_error);
    CHECK_THROWS_AS(coverage_count_1d(16, TilingConfig{16, 8, 4}), validation_error);
  }
}

TEST_CASE("build_gallery") {
  ConstantPredictor half(0.5f);

  SECTION("single-patch geometry") {
    Gallery g = build_gallery(Image::filled(32, 32, 0.1f), TilingConfig{32, 32, 32}, half);
    CHECK(g.entries.size() == 1);
  }

  SECTION("2x2 mosaic") {
    Gallery g = build_gallery(Image::filled(64, 64, 0.1f), TilingConfig{64, 32, 32}, half);
    CHECK(g.entries.size() == 4);
  }

  SECTION("paper-scale geometry yields 169 entries") {
    Gallery g = build_gallery(Image::filled(2048, 2048, 0.0f), TilingConfig{2048, 512, 128}, half);
    CHECK(g.entries.size() == 169);
  }

  SECTION("gallery is identical across thread counts") {
    NoisePredictor noisy;
    Image img = Image::filled(64, 64, 0.3f);
    Gallery serial = build_gallery(img, TilingConfig{64, 16, 8}, noisy, 1);
    Gallery parallel = build_gallery(img, TilingConfig{64, 16, 8}, noisy, 8);
    REQUIRE(serial.entries.size() == parallel.entries.size());
    for (std::size_t i = 0; i < serial.entries.size(); ++i)
      CHECK(serial.entries[i].second == parallel.entries[i].second);
  }
}

TEST_CASE("stitch") {
  SECTION("constant beliefs stitch to the same constant at any stride") {
    for (int stride : {32, 16, 8, 4}) {
      ConstantPredictor c(0.37f);
      Gallery g = build_gallery(Image::filled(64, 64, 0.5f), TilingConfig{64, 32, stride}, c);
      BeliefMap out = stitch(g);
      for (float v : out.data) CHECK(v == 0.37f);
    }
  }

  SECTION("oracle stitching reproduces the truth exactly") {
    Rng rng(55);
    for (int stride : {32, 16, 8}) {
      Mask truth = testutil::random_blob_mask(64, 64, rng);
      OraclePredictor oracle(truth);
      Gallery g = build_gallery(Image::filled(64, 64, 0.5f), TilingConfig{64, 32, stride}, oracle);
      BeliefMap out = stitch(g);
      for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == (truth.data[i] ? 1.0f : 0.0f));
    }
  }

  SECTION("stride = patch is the plain mosaic") {
    NoisePredictor noisy;
    Image img = Image::filled(32, 32, 0.5f);
    TilingConfig c{32, 16, 16};
    Gallery g = build_gallery(img, c, noisy);
    BeliefMap out = stitch(g);
    for (const auto& [spec, belief] : g.entries)
      for (int r = 0; r < 16; ++r)
        for (int col = 0; col < 16; ++col)
          CHECK(out.at(spec.row0 + r, spec.col0 + col) == belief.at(r, col));
  }

  SECTION("per-pixel values stay within the contributing range") {
    NoisePredictor noisy;
    Image img = Image::filled(48, 48, 0.5f);
    TilingConfig c{48, 16, 8};
    Gallery g = build_gallery(img, c, noisy);
    BeliefMap out = stitch(g);
    BeliefMap lo = BeliefMap::filled(48, 48, 2.0f);
    BeliefMap hi = BeliefMap::filled(48, 48, -1.0f);
    for (const auto& [spec, belief] : g.entries)
      for (int r = 0; r < 16; ++r)
        for (int col = 0; col < 16; ++col) {
          float v = belief.at(r, col);
          float& l = lo.at(spec.row0 + r, spec.col0 + col);
          float& h = hi.at(spec.row0 + r, spec.col0 + col);
          l = std::min(l, v);
          h = std::max(h, v);
        }
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      CHECK(out.data[i] >= lo.data[i] - 1e-6f);
      CHECK(out.data[i] <= hi.data[i] + 1e-6f);
    }
  }

  SECTION("accumulated counts factor into 1-D coverage products") {
    for (TilingConfig c : {TilingConfig{24, 8, 4}, TilingConfig{40, 16, 8},
                           TilingConfig{64, 32, 8}}) {
      ConstantPredictor one(1.0f);
      Superposition s = accumulate(build_gallery(Image::filled(c.image_size, c.image_size, 0.5f), c, one));
      for (int r = 0; r < c.image_size; ++r)
        for (int col = 0; col < c.image_size; ++col)
          CHECK(s.count[static_cast<std::size_t>(r) * c.image_size + col] ==
                coverage_count_1d(r, c) * coverage_count_1d(col, c));
    }
  }
}

TEST_CASE("smooth") {
  SECTION("constant maps are unchanged") {
    BeliefMap b = BeliefMap::filled(20, 20, 0.42f);
    CHECK(smooth(b, 11) == b);
  }

  SECTION("kernel 1 is the identity") {
    Rng rng(2);
    BeliefMap b = BeliefMap::filled(9, 9, 0.0f);
    for (auto& v : b.data) v = static_cast<float>(rng.uniform());
    CHECK(smooth(b, 1) == b);
  }

  SECTION("interior impulse spreads to 1/121 over its 11x11 neighborhood") {
    BeliefMap b = BeliefMap::filled(32, 32, 0.0f);
    b.at(15, 16) = 1.0f;
    BeliefMap out = smooth(b, 11);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        bool inside = std::abs(r - 15) <= 5 && std::abs(c - 16) <= 5;
        if (inside)
          CHECK(out.at(r, c) == Catch::Approx(1.0 / 121.0).margin(1e-9));
        else
          CHECK(out.at(r, c) == 0.0f);
      }
  }

  SECTION("even kernels are rejected") {
    CHECK_THROWS_AS(smooth(BeliefMap::filled(4, 4, 0.0f), 2), validation_error);
  }
}

TEST_CASE("binarize") {
  BeliefMap b = BeliefMap::filled(2, 2, 0.7f);

  SECTION("all above threshold") {
    CHECK(binarize(b, 0.5) == Mask::filled(2, 2, 1));
  }

  SECTION("ties go positive") {
    BeliefMap t = BeliefMap::filled(3, 1, 0.5f);
    CHECK(binarize(t, 0.5) == Mask::filled(3, 1, 1));
  }

  SECTION("mixed map becomes the indicator of the high region") {
    BeliefMap m = BeliefMap::filled(2, 2, 0.2f);
    m.at(0, 1) = 0.8f;
    m.at(1, 0) = 0.8f;
    Mask out = binarize(m, 0.5);
    CHECK(out.at(0, 0) == 0);
    CHECK(out.at(0, 1) == 1);
    CHECK(out.at(1, 0) == 1);
    CHECK(out.at(1, 1) == 0);
  }

  SECTION("threshold bounds are validated") {
    CHECK_THROWS_AS(binarize(b, 0.0), validation_error);
    CHECK_THROWS_AS(binarize(b, 1.0), validation_error);
  }
}
