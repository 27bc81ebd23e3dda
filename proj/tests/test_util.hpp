#pragma once

#include <filesystem>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(PACKIHT_TEST_DATA) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(PACKIHT_TEST_SCRATCH) / name;
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

#include <random>

#include <Eigen/Dense>

#include "packiht/geno_matrix.hpp"

/// i.i.d. Gaussian design, each column centred and scaled to unit sample variance.
inline packiht::DenseDesign gaussian_design(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  packiht::DenseDesign d;
  d.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.values.rows(); ++i) d.values(i, j) = z(rng);
    d.values.col(j).array() -= d.values.col(j).mean();
    d.values.col(j) /= std::sqrt(d.values.col(j).squaredNorm() / static_cast<double>(n - 1));
  }
  return d;
}

/// k distinct indices from [0, p), ascending.
inline std::vector<std::size_t> random_support(std::size_t p, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(p);
  for (std::size_t j = 0; j < p; ++j) idx[j] = j;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}
