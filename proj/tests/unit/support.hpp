#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "reachpred/levelset.hpp"

namespace testing {

// Solved once per test binary.
inline const reachpred::ValueFunction& default_brs() {
  static const reachpred::ValueFunction vf = reachpred::solve_brs(reachpred::grid_preset("default"), {}).vf;
  return vf;
}

inline const reachpred::ValueFunction& coarse_brs() {
  static const reachpred::ValueFunction vf = reachpred::solve_brs(reachpred::grid_preset("coarse"), {}).vf;
  return vf;
}

// Fresh scratch directory, removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("reachpred_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
