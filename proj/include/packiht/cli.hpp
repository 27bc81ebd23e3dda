#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "packiht/geno_matrix.hpp"
#include "packiht/iht_core.hpp"

namespace packiht::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string command;

  // inputs
  std::filesystem::path bed, bim, fam, pheno, covar, keep;
  std::size_t synthetic_n = 0;  // simulate/bench without files
  std::size_t synthetic_p = 0;
  double missing_rate = 0.0;

  std::string out = "packiht";
  int threads = 1;
  Precision precision = Precision::kDouble;
  std::uint64_t seed = 1;
  bool record_time = true;

  // modelling
  std::size_t k = 10;
  std::string path_spec;
  std::size_t q = 5;
  std::string transform = "none";
  bool intercept = true;
  bool global_standardization = false;
  bool warm_start = false;
  std::size_t max_iter = 200;
  double tol = 1e-4;

  // simulate
  std::vector<std::size_t> k_true_grid{5};
  std::vector<double> snr_grid{1.0};
  std::size_t replicates = 1;
  std::string path_rule = "straddle:2:5";
  double test_fraction = 289.0 / 5289.0;
  double effect_variance = 0.01;
  double noise_variance = 0.01;

  // bench
  std::size_t repetitions = 10;
  std::vector<std::string> modes{"packed", "packed+mt", "dense"};
  double dense_cap_mb = 4096.0;
};

/// "a:b:step" (inclusive) or a comma-separated list.
std::vector<std::size_t> parse_path_spec(const std::string& spec);

/// Stable hash of every setting that affects results (thread count and
/// output prefix excluded).
std::string config_hash(const RunConfig& config);

/// First line of every output file.
std::string metadata_line(const RunConfig& config);

/// Shortest round-trip decimal form.
std::string format_real(double x);

IhtConfig solver_config(const RunConfig& config);

void run_fit(const RunConfig& config);
void run_cv(const RunConfig& config);
void run_simulate(const RunConfig& config);
void run_bench(const RunConfig& config);

/// Dispatches on config.command.
void run(const RunConfig& config);

}  // namespace packiht::cli
