#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "packiht/geno_matrix.hpp"
#include "packiht/iht_core.hpp"
#include "packiht/model_select.hpp"

namespace packiht {

struct SimulationSpec {
  std::size_t k_true = 1;
  double effect_variance = 0.01;
  double snr_divisor = 1.0;  // causal effects ~ N(0, effect_variance / snr_divisor)
  double noise_variance = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedPhenotype {
  Eigen::VectorXd y;
  SparseModel beta_true;
};

/// y = X_st beta_true + eps with causal indices drawn uniformly without
/// replacement from the genetic block.
SimulatedPhenotype simulate_phenotype(const StandardizedView& view, const SimulationSpec& spec);

/// Var(X_st beta) / Var(y) with n - 1 denominators. Not clamped to [0, 1].
double heritability(const StandardizedView& view, const SparseModel& beta,
                    const Eigen::Ref<const Eigen::VectorXd>& y);

double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& x);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// precision = |sel & truth| / |sel| (0 for an empty selection),
/// recall = |sel & truth| / |truth| (0 for an empty truth). Both inputs are
/// genetic indices.
PrecisionRecall precision_recall(std::span<const std::size_t> selected,
                                 std::span<const std::size_t> truth);

/// Random genotypes under Hardy-Weinberg equilibrium with per-variant allele
/// frequencies drawn uniformly from [maf_low, maf_high].
PackedGenotypeMatrix random_genotypes(std::size_t n, std::size_t p, std::uint64_t seed,
                                      double missing_rate = 0.0, double maf_low = 0.05,
                                      double maf_high = 0.5, int threads = 1);

/// How each replicate's regularization path is laid out around k_true.
struct PathRule {
  enum class Kind { kExplicit, kStraddle, kDense };
  Kind kind = Kind::kStraddle;
  std::vector<std::size_t> explicit_path;
  std::size_t stride = 2;       // straddle spacing
  std::size_t half_width = 5;   // straddle points on each side of k_true
  std::size_t dense_extra = 100;  // dense path is 1..k_true + dense_extra

  std::vector<std::size_t> build(std::size_t k_true) const;
};

struct ExperimentGrid {
  std::vector<std::size_t> k_true;
  std::vector<double> snr_divisors;
  std::size_t replicates = 1;
  double effect_variance = 0.01;
  double noise_variance = 0.01;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::size_t q = 5;
  double test_fraction = 289.0 / 5289.0;
  PathRule path;
  IhtConfig iht;
  CvOptions cv{Standardization::kGlobal, false, 1};
  int replicate_threads = 1;
  bool record_time = true;
};

struct SimulationReport {
  std::size_t k_true = 0;
  double snr_divisor = 1.0;
  std::size_t replicate = 0;
  std::size_t k_selected = 0;
  double precision = 0.0;
  double recall = 0.0;
  double mse_test = 0.0;
  double h2_true = 0.0;
  double h2_est = 0.0;
  double seconds = 0.0;
};

struct CellSummary {
  std::size_t k_true = 0;
  double snr_divisor = 1.0;
  std::size_t replicates = 0;
  double precision = 0.0;
  double recall = 0.0;
  double mse_test = 0.0;
  double seconds = 0.0;
  double h2_true = 0.0;
  double h2_est = 0.0;
  double k_selected = 0.0;
};

/// Independent RNG stream for (seed, cell, replicate).
std::mt19937_64 replicate_rng(std::uint64_t seed, std::size_t cell, std::size_t replicate);

/// Runs every (k_true, s) cell for every replicate: simulate, hold out a test
/// slice, cross-validate on the rest, and score the refit model. Reports are
/// ordered by cell, then replicate.
std::vector<SimulationReport> run_experiment(const StandardizedView& view,
                                             const ExperimentGrid& grid,
                                             const ExperimentConfig& config);

std::vector<CellSummary> summarize(std::span<const SimulationReport> reports);

}  // namespace packiht
