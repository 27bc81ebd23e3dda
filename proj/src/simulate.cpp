#include "packiht/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "packiht/error.hpp"
#include "packiht/parallel.hpp"

namespace packiht {

void SimulationSpec::validate() const {
  if (k_true < 1) throw DimensionError("k_true must be at least 1");
  if (!(effect_variance > 0.0) || !(noise_variance > 0.0) || !(snr_divisor > 0.0)) {
    throw DimensionError("simulation variances and divisor must be positive");
  }
}

SimulatedPhenotype simulate_phenotype(const StandardizedView& view, const SimulationSpec& spec) {
  spec.validate();
  const std::size_t p = view.p();
  if (spec.k_true > p) {
    throw DimensionError("k_true = " + std::to_string(spec.k_true) + " exceeds p = " +
                         std::to_string(p));
  }
  std::mt19937_64 rng(spec.seed);

  // Partial Fisher-Yates: the first k_true slots are a uniform draw without replacement.
  std::vector<std::size_t> pool(p);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.k_true; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<std::size_t> causal(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.k_true));
  std::sort(causal.begin(), causal.end());

  SimulatedPhenotype out;
  out.beta_true = SparseModel::zeros(p, view.c(), spec.k_true);
  std::normal_distribution<double> effect(0.0, std::sqrt(spec.effect_variance / spec.snr_divisor));
  for (std::size_t j : causal) {
    const double b = effect(rng);
    if (b == 0.0) continue;
    out.beta_true.support.push_back(j);
    out.beta_true.values.push_back(b);
  }

  out.y = ax(view, out.beta_true);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] += noise(rng);
  return out;
}

double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  const double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

double heritability(const StandardizedView& view, const SparseModel& beta,
                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  const double var_y = sample_variance(y);
  if (!(var_y > 0.0)) throw NumericError("heritability undefined for a constant response");
  // Genetic block only: covariate effects are not heritable signal.
  SparseModel genetic = beta;
  genetic.covariates.resize(0);
  return sample_variance(ax(view, genetic)) / var_y;
}

PrecisionRecall precision_recall(std::span<const std::size_t> selected,
                                 std::span<const std::size_t> truth) {
  std::vector<std::size_t> sel(selected.begin(), selected.end());
  std::vector<std::size_t> tru(truth.begin(), truth.end());
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
  std::sort(tru.begin(), tru.end());
  tru.erase(std::unique(tru.begin(), tru.end()), tru.end());

  std::vector<std::size_t> common;
  std::set_intersection(sel.begin(), sel.end(), tru.begin(), tru.end(), std::back_inserter(common));
  PrecisionRecall pr;
  pr.precision = sel.empty() ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(sel.size());
  pr.recall = tru.empty() ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(tru.size());
  return pr;
}

PackedGenotypeMatrix random_genotypes(std::size_t n, std::size_t p, std::uint64_t seed,
                                      double missing_rate, double maf_low, double maf_high,
                                      int threads) {
  if (!(maf_low >= 0.0 && maf_low <= maf_high && maf_high <= 1.0)) {
    throw DimensionError("allele frequency range must satisfy 0 <= low <= high <= 1");
  }
  const std::size_t bpc = packed_bytes(n);
  std::vector<std::uint8_t> data(bpc * p, 0);
  constexpr std::uint8_t kCodeForDosage[3] = {0b00, 0b10, 0b11};
  parallel_for_chunks(p, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)};
      std::mt19937_64 rng(seq);
      const double maf = std::uniform_real_distribution<double>(maf_low, maf_high)(rng);
      std::bernoulli_distribution allele(maf);
      std::bernoulli_distribution missing(missing_rate);
      std::uint8_t* col = data.data() + j * bpc;
      for (std::size_t i = 0; i < n; ++i) {
        const int dosage = static_cast<int>(allele(rng)) + static_cast<int>(allele(rng));
        const std::uint8_t code = missing_rate > 0.0 && missing(rng) ? std::uint8_t{0b01}
                                                                     : kCodeForDosage[dosage];
        col[i / 4] |= static_cast<std::uint8_t>(code << (2 * (i % 4)));
      }
    }
  });
  return PackedGenotypeMatrix::from_packed(n, p, std::move(data), threads);
}

std::vector<std::size_t> PathRule::build(std::size_t k_true) const {
  std::vector<std::size_t> path;
  switch (kind) {
    case Kind::kExplicit:
      path = explicit_path;
      break;
    case Kind::kStraddle: {
      const std::size_t step = std::max<std::size_t>(stride, 1);
      for (std::size_t i = half_width; i > 0; --i) {
        if (k_true > i * step) path.push_back(k_true - i * step);
      }
      for (std::size_t i = 0; i <= half_width; ++i) path.push_back(k_true + i * step);
      break;
    }
    case Kind::kDense:
      for (std::size_t k = 1; k <= k_true + dense_extra; ++k) path.push_back(k);
      break;
  }
  return path;
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::size_t cell, std::size_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(replicate)};
  return std::mt19937_64(seq);
}

std::vector<SimulationReport> run_experiment(const StandardizedView& view,
                                             const ExperimentGrid& grid,
                                             const ExperimentConfig& config) {
  if (grid.replicates < 1) throw DimensionError("replicate count must be at least 1");
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw DimensionError("test fraction must lie in (0, 1)");
  }
  struct Cell {
    std::size_t k_true;
    double divisor;
  };
  std::vector<Cell> cells;
  for (std::size_t k : grid.k_true) {
    for (double s : grid.snr_divisors) cells.push_back({k, s});
  }
  const std::size_t n = view.n();
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n))), 1,
      n - 1);
  const bool global = config.cv.standardization == Standardization::kGlobal;

  std::vector<SimulationReport> reports(cells.size() * grid.replicates);
  auto run_one = [&](std::size_t item) {
    const std::size_t cell = item / grid.replicates;
    const std::size_t rep = item % grid.replicates;
    std::mt19937_64 rng = replicate_rng(grid.seed, cell, rep);

    SimulationSpec spec;
    spec.k_true = cells[cell].k_true;
    spec.snr_divisor = cells[cell].divisor;
    spec.effect_variance = grid.effect_variance;
    spec.noise_variance = grid.noise_variance;
    spec.seed = rng();
    const SimulatedPhenotype sim = simulate_phenotype(view, spec);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());

    const DesignSubset train =
        DesignSubset::select(view, train_rows, global ? view.packed() : nullptr);
    const DesignSubset test =
        DesignSubset::select(view, test_rows, global ? view.packed() : train.packed());
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train_rows.size()));
    Eigen::VectorXd y_test(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[static_cast<Eigen::Index>(i)] = sim.y[static_cast<Eigen::Index>(train_rows[i])];
    for (std::size_t i = 0; i < test_rows.size(); ++i) y_test[static_cast<Eigen::Index>(i)] = sim.y[static_cast<Eigen::Index>(test_rows[i])];

    const CvPlan plan = make_plan(train_rows.size(), config.q, config.path.build(spec.k_true), rng());
    const auto start = std::chrono::steady_clock::now();
    const CvReport cv = cv_iht(train.view(), y_train, plan, config.iht, config.cv);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    SimulationReport& rep_out = reports[item];
    rep_out.k_true = spec.k_true;
    rep_out.snr_divisor = spec.snr_divisor;
    rep_out.replicate = rep;
    rep_out.k_selected = cv.k_best;
    const PrecisionRecall pr = precision_recall(cv.final_model.support, sim.beta_true.support);
    rep_out.precision = pr.precision;
    rep_out.recall = pr.recall;
    rep_out.mse_test = mean_squared_error(y_test, predict(test.view(), cv.final_model));
    rep_out.h2_true = heritability(view, sim.beta_true, sim.y);
    rep_out.h2_est = heritability(view, cv.final_model, sim.y);
    rep_out.seconds = config.record_time ? seconds : 0.0;
  };

  parallel_for_chunks(reports.size(), config.replicate_threads,
                      [&](std::size_t begin, std::size_t end) {
                        for (std::size_t i = begin; i < end; ++i) run_one(i);
                      });
  return reports;
}

std::vector<CellSummary> summarize(std::span<const SimulationReport> reports) {
  std::vector<CellSummary> out;
  for (const SimulationReport& r : reports) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& c) {
      return c.k_true == r.k_true && c.snr_divisor == r.snr_divisor;
    });
    if (it == out.end()) {
      out.push_back(CellSummary{r.k_true, r.snr_divisor});
      it = out.end() - 1;
    }
    ++it->replicates;
    it->precision += r.precision;
    it->recall += r.recall;
    it->mse_test += r.mse_test;
    it->seconds += r.seconds;
    it->h2_true += r.h2_true;
    it->h2_est += r.h2_est;
    it->k_selected += static_cast<double>(r.k_selected);
  }
  for (CellSummary& c : out) {
    const double m = static_cast<double>(c.replicates);
    c.precision /= m;
    c.recall /= m;
    c.mse_test /= m;
    c.seconds /= m;
    c.h2_true /= m;
    c.h2_est /= m;
    c.k_selected /= m;
  }
  return out;
}

}  // namespace packiht
