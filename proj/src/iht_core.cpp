#include "packiht/iht_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "packiht/error.hpp"

namespace packiht {

namespace {

// Genetic indices of the k largest |values| (ties to the lower index), ascending.
std::vector<std::size_t> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& values,
                                       std::size_t p, std::size_t k) {
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k < p) {
    auto before = [&](std::size_t a, std::size_t b) {
      const double ma = std::abs(values[static_cast<Eigen::Index>(a)]);
      const double mb = std::abs(values[static_cast<Eigen::Index>(b)]);
      return ma > mb || (ma == mb && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

Eigen::VectorXd fitted_from_cache(const IhtState& state, const StandardizedView& view) {
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(view.n()));
  if (!state.model.values.empty()) {
    const Eigen::Map<const Eigen::VectorXd> coef(state.model.values.data(),
                                                 static_cast<Eigen::Index>(state.model.values.size()));
    fitted.noalias() += state.active_cache * coef;
  }
  if (view.covariates() && state.model.c() > 0) {
    fitted.noalias() += view.covariates()->values() * state.model.covariates;
  }
  return fitted;
}

// Rebuilds the active cache on support change, then residuals, loss, gradient.
void refresh(IhtState& state, const StandardizedView& view,
             const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (state.active_support != state.model.support) {
    state.active_support = state.model.support;
    state.active_cache = decompress_active(view, state.active_support);
    ++state.cache_rebuilds;
  }
  state.residuals = y - fitted_from_cache(state, view);
  state.loss = half_squared_norm(state.residuals);
  state.gradient = -aty(view, state.residuals);
}

struct StepDirection {
  std::vector<std::size_t> support;  // genetic part of the step support
  double mu = 0.0;
};

StepDirection step_direction(const IhtState& state, const StandardizedView& view,
                             const IhtConfig& config) {
  const std::size_t p = view.p();
  const auto& g = state.gradient;
  const auto cov_grad = g.tail(static_cast<Eigen::Index>(view.c()));

  auto numerator = [&](const std::vector<std::size_t>& support) {
    double sum = cov_grad.squaredNorm();
    for (std::size_t j : support) sum += g[static_cast<Eigen::Index>(j)] * g[static_cast<Eigen::Index>(j)];
    return sum;
  };

  StepDirection dir;
  dir.support = state.model.support;
  double num = numerator(dir.support);
  if (dir.support.empty() || num == 0.0) {
    dir.support = config.k > 0 ? top_k_indices(g.head(static_cast<Eigen::Index>(p)), p, config.k)
                               : std::vector<std::size_t>{};
    num = numerator(dir.support);
  }
  if (num == 0.0) return dir;

  Eigen::VectorXd x_g;
  if (dir.support == state.active_support) {
    Eigen::VectorXd g_s(static_cast<Eigen::Index>(dir.support.size()));
    for (std::size_t s = 0; s < dir.support.size(); ++s) {
      g_s[static_cast<Eigen::Index>(s)] = g[static_cast<Eigen::Index>(dir.support[s])];
    }
    x_g = state.active_cache * g_s;
    if (view.covariates()) x_g.noalias() += view.covariates()->values() * cov_grad;
  } else {
    SparseModel direction = SparseModel::zeros(p, view.c(), config.k);
    direction.support = dir.support;
    for (std::size_t j : dir.support) direction.values.push_back(g[static_cast<Eigen::Index>(j)]);
    direction.covariates = cov_grad;
    x_g = ax(view, direction);
  }
  const double den = x_g.squaredNorm();
  if (!(den > 0.0)) {
    throw NumericError("degenerate support: active standardized columns annihilate the gradient");
  }
  dir.mu = num / den;
  return dir;
}

}  // namespace

void IhtConfig::validate() const {
  if (!(tol > 0.0)) throw DimensionError("tol must be positive");
  if (!(c_omega > 0.0 && c_omega < 1.0)) throw DimensionError("c_omega must lie in (0, 1)");
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max-iterations";
    case Termination::kStepSizeCollapse: return "step-size collapse";
  }
  return "unknown";
}

SparseModel project_sparse(const Eigen::Ref<const Eigen::VectorXd>& beta, std::size_t p,
                           std::size_t k) {
  if (static_cast<std::size_t>(beta.size()) < p) {
    throw DimensionError("coefficient vector shorter than the genetic block");
  }
  SparseModel out;
  out.p = p;
  out.k = k;
  for (std::size_t j : top_k_indices(beta.head(static_cast<Eigen::Index>(p)), p, k)) {
    const double b = beta[static_cast<Eigen::Index>(j)];
    if (b != 0.0) {
      out.support.push_back(j);
      out.values.push_back(b);
    }
  }
  out.covariates = beta.tail(beta.size() - static_cast<Eigen::Index>(p));
  return out;
}

IhtState initialize(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const IhtConfig& config, const SparseModel* warm_start) {
  if (static_cast<std::size_t>(y.size()) != view.n()) {
    throw DimensionError("response length differs from the sample count");
  }
  IhtState state;
  state.model = SparseModel::zeros(view.p(), view.c(), config.k);
  if (warm_start && warm_start->p == view.p()) {
    state.model = project_sparse(warm_start->dense().head(static_cast<Eigen::Index>(view.p())),
                                 view.p(), config.k);
    state.model.covariates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(view.c()));
  }
  if (const CovariateBlock* cov = view.covariates()) {
    Eigen::VectorXd target = y;
    if (!state.model.support.empty()) {
      SparseModel genetic_only = state.model;
      genetic_only.covariates.resize(0);
      target -= ax(view, genetic_only);
    }
    state.model.covariates = cov->values().colPivHouseholderQr().solve(target);
  }
  state.active_cache = decompress_active(view, state.model.support);
  state.active_support = state.model.support;
  refresh(state, view, y);
  return state;
}

double normalized_step(const IhtState& state, const StandardizedView& view,
                       const IhtConfig& config) {
  return step_direction(state, view, config).mu;
}

StepOutcome iht_step(IhtState& state, const StandardizedView& view,
                     const Eigen::Ref<const Eigen::VectorXd>& y, const IhtConfig& config) {
  StepOutcome outcome;
  outcome.previous_loss = state.loss;
  state.backtracks = 0;

  const StepDirection dir = step_direction(state, view, config);
  double mu = dir.mu;
  if (mu == 0.0) {
    outcome.accepted = true;
    return outcome;
  }

  const std::size_t p = view.p();
  const Eigen::VectorXd current = state.model.dense();
  const bool current_within_step =
      std::includes(dir.support.begin(), dir.support.end(), state.model.support.begin(),
                    state.model.support.end());

  for (;;) {
    const Eigen::VectorXd target = current - mu * state.gradient;
    SparseModel candidate = project_sparse(target, p, config.k);
    const Eigen::VectorXd delta = candidate.dense() - current;
    const double max_change = delta.lpNorm<Eigen::Infinity>();

    // On an unchanged support the normalized step is the exact line search
    // along -g_S, so descent holds without the omega test.
    bool accept = max_change == 0.0 || (candidate.support == dir.support && current_within_step);
    if (!accept) {
      const Eigen::VectorXd x_delta = ax(view, SparseModel::from_dense(delta, p, config.k));
      const double den = x_delta.squaredNorm();
      const double omega = den > 0.0 ? (1.0 - config.c_omega) * delta.squaredNorm() / den
                                     : std::numeric_limits<double>::infinity();
      accept = mu < omega;
    }
    if (accept) {
      state.model = std::move(candidate);
      state.model.k = config.k;
      state.mu = mu;
      refresh(state, view, y);
      ++state.iteration;
      outcome.accepted = true;
      outcome.max_change = max_change;
      return outcome;
    }
    if (state.backtracks >= config.max_backtracks) {
      outcome.collapsed = true;
      return outcome;
    }
    mu *= 0.5;
    ++state.backtracks;
  }
}

FitResult fit(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& y,
              const IhtConfig& config, const SparseModel* warm_start) {
  config.validate();
  if (view.n() < 2) throw DimensionError("fitting needs at least two samples");
  if (!y.allFinite()) throw NumericError("response contains non-finite values");

  IhtState state = initialize(view, y, config, warm_start);
  FitResult result;
  result.loss_trace.push_back(state.loss);
  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    const StepOutcome step = iht_step(state, view, y, config);
    result.total_backtracks += state.backtracks;
    if (step.collapsed) {
      result.reason = Termination::kStepSizeCollapse;
      break;
    }
    result.iterations = it;
    result.loss_trace.push_back(state.loss);
    if (!std::isfinite(state.loss)) throw NumericError("loss became non-finite");
    if (step.max_change < config.tol) {
      result.converged = true;
      result.reason = Termination::kConverged;
      break;
    }
  }
  result.model = std::move(state.model);
  return result;
}

RefitResult refit_least_squares(const StandardizedView& view,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                std::span<const std::size_t> support) {
  if (static_cast<std::size_t>(y.size()) != view.n()) {
    throw DimensionError("response length differs from the sample count");
  }
  std::vector<std::size_t> columns(support.begin(), support.end());
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  if (!columns.empty() && columns.back() >= view.p()) {
    throw DimensionError("refit support must name genetic predictors only");
  }
  const std::size_t genetic = columns.size();
  for (std::size_t c = 0; c < view.c(); ++c) columns.push_back(view.p() + c);
  if (columns.size() > view.n()) {
    throw DimensionError("refit needs at most n active columns");
  }

  const Eigen::MatrixXd design = decompress_active(view, columns);
  RefitResult result;
  result.model = SparseModel::zeros(view.p(), view.c(), genetic);

  std::vector<Eigen::Index> kept;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (static_cast<std::size_t>(qr.rank()) == columns.size()) {
    kept.resize(columns.size());
    std::iota(kept.begin(), kept.end(), Eigen::Index{0});
  } else {
    result.rank_deficient = true;
    for (std::size_t s = 0; s < columns.size(); ++s) {
      Eigen::MatrixXd trial(design.rows(), static_cast<Eigen::Index>(kept.size() + 1));
      for (std::size_t t = 0; t < kept.size(); ++t) trial.col(static_cast<Eigen::Index>(t)) = design.col(kept[t]);
      trial.col(trial.cols() - 1) = design.col(static_cast<Eigen::Index>(s));
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> trial_qr(trial);
      if (trial_qr.rank() == trial.cols()) {
        kept.push_back(static_cast<Eigen::Index>(s));
      } else {
        result.dropped.push_back(columns[s]);
      }
    }
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(0);
  if (!kept.empty()) {
    Eigen::MatrixXd active(design.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t t = 0; t < kept.size(); ++t) active.col(static_cast<Eigen::Index>(t)) = design.col(kept[t]);
    coef = active.colPivHouseholderQr().solve(y);
  }
  for (std::size_t t = 0; t < kept.size(); ++t) {
    const std::size_t column = columns[static_cast<std::size_t>(kept[t])];
    const double b = coef[static_cast<Eigen::Index>(t)];
    if (column < view.p()) {
      if (b != 0.0) {
        result.model.support.push_back(column);
        result.model.values.push_back(b);
      }
    } else {
      result.model.covariates[static_cast<Eigen::Index>(column - view.p())] = b;
    }
  }
  return result;
}

}  // namespace packiht
