#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "orfseg/manifest.hpp"
#include "test_util.hpp"

using namespace orfseg;

namespace {
void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream f(path);
  for (const auto& l : lines) f << l << "\n";
}
}  // namespace

TEST_CASE("read_manifest basics") {
  testutil::TempDir tmp;

  SECTION("empty file gives empty list") {
    write_lines(tmp.file("m.jsonl"), {});
    CHECK(read_manifest(tmp.file("m.jsonl")).empty());
  }

  SECTION("entries come back in file order with resolved paths") {
    write_lines(tmp.file("m.jsonl"),
                {R"({"id":"a","image_path":"img/a.png","label_path":"lab/a.png"})",
                 R"({"id":"b","image_path":"img/b.png","label_path":"lab/b.png","truth_path":"tr/b.png"})",
                 R"({"id":"c","image_path":"img/c.png","label_path":"lab/c.png"})"});
    auto entries = read_manifest(tmp.file("m.jsonl"));
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].id == "a");
    CHECK(entries[1].id == "b");
    CHECK(entries[2].id == "c");
    CHECK(entries[0].image_path == (tmp.path / "img/a.png").string());
    CHECK_FALSE(entries[0].has_truth());
    CHECK(entries[1].has_truth());
    CHECK(entries[1].truth_path == (tmp.path / "tr/b.png").string());
  }

  SECTION("duplicate id is rejected") {
    write_lines(tmp.file("m.jsonl"),
                {R"({"id":"img1","image_path":"a.png","label_path":"b.png"})",
                 R"({"id":"img1","image_path":"c.png","label_path":"d.png"})"});
    CHECK_THROWS_WITH(read_manifest(tmp.file("m.jsonl")),
                      Catch::Matchers::ContainsSubstring("img1"));
  }

  SECTION("malformed line reports its number") {
    write_lines(tmp.file("m.jsonl"),
                {R"({"id":"a","image_path":"a.png","label_path":"b.png"})", "{oops"});
    CHECK_THROWS_WITH(read_manifest(tmp.file("m.jsonl")),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }

  SECTION("missing required field reports its number") {
    write_lines(tmp.file("m.jsonl"), {R"({"id":"a","image_path":"a.png"})"});
    CHECK_THROWS_WITH(read_manifest(tmp.file("m.jsonl")),
                      Catch::Matchers::ContainsSubstring("line 1"));
  }
}

TEST_CASE("write_manifest round-trips with relative paths") {
  testutil::TempDir tmp;
  std::filesystem::create_directories(tmp.path / "sub");
  std::vector<ManifestEntry> entries;
  entries.push_back({"x", (tmp.path / "sub/img/x.png").string(),
                     (tmp.path / "sub/lab/x.png").string(), ""});
  entries.push_back({"y", (tmp.path / "sub/img/y.png").string(),
                     (tmp.path / "sub/lab/y.png").string(), (tmp.path / "sub/tr/y.png").string()});
  write_manifest(entries, tmp.file("sub/m.jsonl"));

  std::string raw = testutil::read_file(tmp.file("sub/m.jsonl"));
  CHECK(raw.find("img/x.png") != std::string::npos);
  CHECK(raw.find(tmp.path.string()) == std::string::npos);  // no absolute leakage

  auto back = read_manifest(tmp.file("sub/m.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_path == entries[0].image_path);
  CHECK(back[1].truth_path == entries[1].truth_path);
}

TEST_CASE("load_sample checks dimension agreement") {
  testutil::TempDir tmp;
  save_image(Image::filled(4, 4, 0.5f), tmp.file("img.png"));
  save_mask(Mask::filled(4, 4, 0), tmp.file("lab.png"));
  save_mask(Mask::filled(3, 4, 0), tmp.file("bad.png"));

  ManifestEntry good{"g", tmp.file("img.png"), tmp.file("lab.png"), ""};
  CHECK_NOTHROW(load_sample(good));

  ManifestEntry bad{"b", tmp.file("img.png"), tmp.file("bad.png"), ""};
  CHECK_THROWS_AS(load_sample(bad), validation_error);

  ManifestEntry bad_truth{"t", tmp.file("img.png"), tmp.file("lab.png"), tmp.file("bad.png")};
  CHECK_THROWS_AS(load_sample(bad_truth), validation_error);
}
