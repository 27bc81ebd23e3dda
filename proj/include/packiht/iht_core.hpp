#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "packiht/geno_matrix.hpp"
#include "packiht/sparse_model.hpp"

namespace packiht {

struct IhtConfig {
  std::size_t k = 1;
  std::size_t max_iter = 200;
  double tol = 1e-4;           // on the max-norm of the coefficient change
  double c_omega = 0.01;       // the c in omega = (1 - c) |d|^2 / |X d|^2
  std::size_t max_backtracks = 50;

  void validate() const;
};

enum class Termination { kConverged, kMaxIterations, kStepSizeCollapse };

std::string to_string(Termination reason);

/// Per-iteration solver state. `active_support` names the columns held in
/// `active_cache`; the cache is rebuilt only when the model support changes.
struct IhtState {
  SparseModel model;
  double mu = 0.0;
  Eigen::VectorXd residuals;
  double loss = 0.0;
  Eigen::VectorXd gradient;  // full P-vector, grad f = -[X_st C]^T r
  Eigen::MatrixXd active_cache;
  std::vector<std::size_t> active_support;
  std::size_t iteration = 0;
  std::size_t backtracks = 0;
  std::size_t cache_rebuilds = 0;
};

struct FitResult {
  SparseModel model;
  std::vector<double> loss_trace;  // initial loss, then one entry per iteration
  std::size_t iterations = 0;
  bool converged = false;
  Termination reason = Termination::kMaxIterations;
  std::size_t total_backtracks = 0;
};

/// Hard thresholding of a full P-vector: keeps the k largest-magnitude
/// genetic entries (ties to the lower index); covariates pass through.
SparseModel project_sparse(const Eigen::Ref<const Eigen::VectorXd>& beta, std::size_t p,
                           std::size_t k);

/// Starting state: zero genetic block, covariates fit by least squares.
/// A warm start replaces the zero genetic block (trimmed to the budget).
IhtState initialize(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const IhtConfig& config, const SparseModel* warm_start = nullptr);

/// Normalized step |g_S|^2 / |X_S g_S|^2, with S the current support (or the
/// k largest gradient entries when the support is empty) plus covariates.
/// Returns 0 when g_S vanishes. Throws NumericError if |X_S g_S| is 0 while
/// g_S is not.
double normalized_step(const IhtState& state, const StandardizedView& view,
                       const IhtConfig& config);

struct StepOutcome {
  bool accepted = false;
  bool collapsed = false;
  double max_change = 0.0;  // |beta+ - beta|_inf
  double previous_loss = 0.0;
};

/// One projected gradient step with omega backtracking.
StepOutcome iht_step(IhtState& state, const StandardizedView& view,
                     const Eigen::Ref<const Eigen::VectorXd>& y, const IhtConfig& config);

FitResult fit(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
              const IhtConfig& config, const SparseModel* warm_start = nullptr);

struct RefitResult {
  SparseModel model;
  bool rank_deficient = false;
  std::vector<std::size_t> dropped;  // predictor indices removed as dependent
};

/// Exact least squares on `support` plus all covariates, via a
/// rank-revealing QR. Dependent columns are dropped, keeping lower indices.
RefitResult refit_least_squares(const StandardizedView& view,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                std::span<const std::size_t> support);

/// 0.5 * |r|^2
inline double half_squared_norm(const Eigen::Ref<const Eigen::VectorXd>& r) {
  return 0.5 * r.squaredNorm();
}

}  // namespace packiht
