#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "orfseg/raster.hpp"
#include "orfseg/rng.hpp"

namespace testutil {

// Self-deleting temp directory for file-based tests.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    auto base = std::filesystem::temp_directory_path() / "orfseg_test_XXXXXX";
    std::string tmpl = base.string();
    char* made = mkdtemp(tmpl.data());
    if (!made) throw std::runtime_error("mkdtemp failed");
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline orfseg::Mask random_mask(int width, int height, orfseg::Rng& rng,
                                double positive_prob = 0.5) {
  orfseg::Mask m = orfseg::Mask::filled(width, height, 0);
  for (auto& v : m.data) v = rng.uniform() < positive_prob ? 1 : 0;
  return m;
}

// Blobby random mask: a few filled rectangles, more hole-prone than noise.
inline orfseg::Mask random_blob_mask(int width, int height, orfseg::Rng& rng) {
  orfseg::Mask m = orfseg::Mask::filled(width, height, 0);
  int blobs = rng.uniform_int(1, 5);
  for (int b = 0; b < blobs; ++b) {
    int r0 = rng.uniform_int(0, height - 2);
    int c0 = rng.uniform_int(0, width - 2);
    int r1 = rng.uniform_int(r0, std::min(height - 1, r0 + height / 2));
    int c1 = rng.uniform_int(c0, std::min(width - 1, c0 + width / 2));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) m.at(r, c) = 1;
  }
  // punch a few holes
  int holes = rng.uniform_int(0, 3);
  for (int h = 0; h < holes; ++h) {
    int r = rng.uniform_int(1, height - 2);
    int c = rng.uniform_int(1, width - 2);
    m.at(r, c) = 0;
  }
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

// Runs the CLI binary with the given argument string.
inline CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(ORFSEG_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  CliResult result;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace testutil
