#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "orfseg/errors.hpp"
#include "orfseg/png_io.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

// One dataset record. Paths are stored resolved (relative paths in the file
// are taken relative to the manifest's directory). truth_path is empty when
// no ground truth exists for the entry.
struct ManifestEntry {
  std::string id;
  std::string image_path;
  std::string label_path;
  std::string truth_path;

  bool has_truth() const { return !truth_path.empty(); }
};

// Line-delimited JSON, one object per line with fields id, image_path,
// label_path and optional truth_path.
inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open manifest '" + path + "'");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return fp.lexically_normal().string();
    return (base / fp).lexically_normal().string();
  };

  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw io_error("manifest '" + path + "' line " + std::to_string(line_no) +
                     ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("image_path") ||
        !j.contains("label_path")) {
      throw io_error("manifest '" + path + "' line " + std::to_string(line_no) +
                     ": need fields id, image_path, label_path");
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.image_path = resolve(j.at("image_path").get<std::string>());
    e.label_path = resolve(j.at("label_path").get<std::string>());
    if (j.contains("truth_path") && !j.at("truth_path").is_null())
      e.truth_path = resolve(j.at("truth_path").get<std::string>());
    if (!seen.insert(e.id).second)
      throw io_error("manifest '" + path + "' line " + std::to_string(line_no) +
                     ": duplicate id '" + e.id + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

// Writes entries with paths relative to the manifest's directory.
inline void write_manifest(const std::vector<ManifestEntry>& entries,
                           const std::string& path) {
  std::filesystem::path base =
      std::filesystem::absolute(std::filesystem::path(path)).parent_path().lexically_normal();
  auto relativize = [&](const std::string& p) {
    std::filesystem::path fp = std::filesystem::absolute(std::filesystem::path(p)).lexically_normal();
    std::filesystem::path rel = fp.lexically_relative(base);
    return rel.empty() ? fp.string() : rel.string();
  };
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot open manifest '" + path + "' for writing");
  for (const auto& e : entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["image_path"] = relativize(e.image_path);
    j["label_path"] = relativize(e.label_path);
    if (e.has_truth()) j["truth_path"] = relativize(e.truth_path);
    f << j.dump() << "\n";
  }
  if (!f) throw io_error("write failed for manifest '" + path + "'");
}

// An entry's rasters loaded into memory, dimension-checked.
struct LoadedSample {
  std::string id;
  Image image;
  Mask label;
  Mask truth;
  bool has_truth = false;
};

inline LoadedSample load_sample(const ManifestEntry& e) {
  LoadedSample s;
  s.id = e.id;
  s.image = load_image(e.image_path);
  s.label = load_mask(e.label_path);
  if (s.label.width != s.image.width || s.label.height != s.image.height)
    throw validation_error("entry '" + e.id + "': label dimensions differ from image");
  if (e.has_truth()) {
    s.truth = load_mask(e.truth_path);
    if (s.truth.width != s.image.width || s.truth.height != s.image.height)
      throw validation_error("entry '" + e.id + "': truth dimensions differ from image");
    s.has_truth = true;
  }
  return s;
}

}  // namespace orfseg
