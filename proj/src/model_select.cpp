#include "packiht/model_select.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "packiht/error.hpp"
#include "packiht/parallel.hpp"

namespace packiht {

void CvPlan::validate(std::size_t n) const {
  if (q < 2 || q > n) {
    throw DimensionError("fold count q = " + std::to_string(q) + " must satisfy 2 <= q <= n = " +
                         std::to_string(n));
  }
  if (folds.size() != n) throw DimensionError("fold assignment must label every sample");
  std::vector<std::size_t> sizes(q, 0);
  for (std::size_t f : folds) {
    if (f >= q) throw DimensionError("fold label " + std::to_string(f) + " out of range");
    ++sizes[f];
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw DimensionError("every fold must hold at least one sample");
  }
  if (path.empty()) throw DimensionError("sparsity path is empty");
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] < 1) throw DimensionError("sparsity levels must be >= 1");
    if (i > 0 && path[i] <= path[i - 1]) throw DimensionError("sparsity path must be strictly increasing");
  }
}

std::vector<std::size_t> make_folds(std::size_t n, std::size_t q, std::uint64_t seed) {
  if (q < 2 || q > n) {
    throw DimensionError("fold count q = " + std::to_string(q) + " must satisfy 2 <= q <= n = " +
                         std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[order[i]] = i % q;
  return folds;
}

CvPlan make_plan(std::size_t n, std::size_t q, std::vector<std::size_t> path, std::uint64_t seed) {
  CvPlan plan;
  plan.q = q;
  plan.path = std::move(path);
  plan.folds = make_folds(n, q, seed);
  plan.seed = seed;
  plan.validate(n);
  return plan;
}

std::size_t select_best(const Eigen::Ref<const Eigen::VectorXd>& mean_mse, double tolerance) {
  if (mean_mse.size() == 0) throw DimensionError("no MSE values to select from");
  const double threshold = mean_mse.minCoeff() + std::max(tolerance, 0.0);
  for (Eigen::Index i = 0; i < mean_mse.size(); ++i) {
    if (mean_mse[i] <= threshold) return static_cast<std::size_t>(i);
  }
  return 0;
}

Eigen::VectorXd predict(const StandardizedView& test_view, const SparseModel& model) {
  return ax(test_view, model);
}

double mean_squared_error(const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& yhat) {
  if (y.size() != yhat.size()) throw DimensionError("prediction length differs from response");
  if (y.size() == 0) return 0.0;
  return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

CvReport cv_iht(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
                const CvPlan& plan, const IhtConfig& config, const CvOptions& options) {
  const std::size_t n = view.n();
  if (static_cast<std::size_t>(y.size()) != n) {
    throw DimensionError("response length differs from the sample count");
  }
  plan.validate(n);
  std::vector<std::size_t> fold_sizes(plan.q, 0);
  for (std::size_t f : plan.folds) ++fold_sizes[f];
  const std::size_t min_train = n - *std::max_element(fold_sizes.begin(), fold_sizes.end());
  if (plan.path.back() + view.c() >= min_train) {
    throw DimensionError("largest sparsity level plus covariates (" +
                         std::to_string(plan.path.back() + view.c()) +
                         ") must be below the smallest training fold (" +
                         std::to_string(min_train) + ")");
  }

  const bool global = options.standardization == Standardization::kGlobal;
  const std::size_t r = plan.path.size();
  CvReport report;
  report.path = plan.path;
  report.mse.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(plan.q));

  auto run_fold = [&](std::size_t fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i) (plan.folds[i] == fold ? test_rows : train_rows).push_back(i);

    const DesignSubset train =
        DesignSubset::select(view, train_rows, global ? view.packed() : nullptr);
    const DesignSubset test =
        DesignSubset::select(view, test_rows, global ? view.packed() : train.packed());
    const StandardizedView train_view = train.view();
    const StandardizedView test_view = test.view();

    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train_rows.size()));
    Eigen::VectorXd y_test(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(train_rows[i])];
    for (std::size_t i = 0; i < test_rows.size(); ++i) y_test[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(test_rows[i])];

    SparseModel previous;
    bool have_previous = false;
    for (std::size_t idx = 0; idx < r; ++idx) {
      IhtConfig cfg = config;
      cfg.k = plan.path[idx];
      FitResult fitted;
      try {
        fitted = fit(train_view, y_train, cfg,
                     options.warm_start && have_previous ? &previous : nullptr);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " (fold " + std::to_string(fold) + ", k " +
                    std::to_string(cfg.k) + ")");
      }
      report.mse(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(fold)) =
          mean_squared_error(y_test, predict(test_view, fitted.model));
      previous = std::move(fitted.model);
      have_previous = true;
    }
  };

  parallel_for_chunks(plan.q, options.fold_threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) run_fold(f);
  });

  report.mean_mse = report.mse.rowwise().mean();
  const double y_mean = y.mean();
  const double y_var = n > 1 ? (y.array() - y_mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  report.best_index = select_best(report.mean_mse, options.tie_tolerance * y_var);
  report.k_best = plan.path[report.best_index];

  IhtConfig final_cfg = config;
  final_cfg.k = report.k_best;
  const FitResult full = fit(view, y, final_cfg);
  RefitResult refit = refit_least_squares(view, y, full.model.support);
  report.final_model = std::move(refit.model);
  report.final_model.k = report.k_best;
  report.refit_rank_deficient = refit.rank_deficient;
  return report;
}

}  // namespace packiht
