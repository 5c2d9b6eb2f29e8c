#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "gridbench/types.hpp"

namespace testutil {

inline gridbench::Matrix random_matrix(gridbench::Index rows, gridbench::Index cols, std::uint64_t seed,
                                       double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  gridbench::Matrix m(rows, cols);
  for (gridbench::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("gridbench_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
