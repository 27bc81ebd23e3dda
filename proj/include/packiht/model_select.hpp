#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "packiht/geno_matrix.hpp"
#include "packiht/iht_core.hpp"

namespace packiht {

/// Where held-out rows get their standardization statistics.
enum class Standardization {
  kTrainingFold,  // u, v recomputed on the training rows of each fold
  kGlobal,        // u, v of the full matrix, as given
};

struct CvPlan {
  std::size_t q = 5;
  std::vector<std::size_t> path;   // strictly increasing, all >= 1
  std::vector<std::size_t> folds;  // fold label per sample, in [0, q)
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
};

/// Balanced random partition of n samples into q folds (sizes differ by at
/// most one). Deterministic for a fixed seed.
std::vector<std::size_t> make_folds(std::size_t n, std::size_t q, std::uint64_t seed);

CvPlan make_plan(std::size_t n, std::size_t q, std::vector<std::size_t> path, std::uint64_t seed);

struct CvOptions {
  Standardization standardization = Standardization::kTrainingFold;
  bool warm_start = false;
  int fold_threads = 1;
  // Mean MSEs within tie_tolerance * Var(y) of the minimum count as equal.
  double tie_tolerance = 1e-8;
};

struct CvReport {
  std::vector<std::size_t> path;
  Eigen::MatrixXd mse;       // path.size() x q
  Eigen::VectorXd mean_mse;  // per path point
  std::size_t best_index = 0;
  std::size_t k_best = 0;
  SparseModel final_model;
  bool refit_rank_deficient = false;
};

/// First index whose mean MSE is within `tolerance` of the minimum, i.e. the
/// smallest k among (near-)ties.
std::size_t select_best(const Eigen::Ref<const Eigen::VectorXd>& mean_mse, double tolerance = 0.0);

CvReport cv_iht(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
                const CvPlan& plan, const IhtConfig& config, const CvOptions& options = {});

/// X_st,test beta + C_test beta_cov.
Eigen::VectorXd predict(const StandardizedView& test_view, const SparseModel& model);

double mean_squared_error(const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& yhat);

}  // namespace packiht
