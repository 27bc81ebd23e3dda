// Command-line front end: fit, cv, simulate, bench.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "packiht/cli.hpp"

namespace {

using packiht::cli::RunConfig;

void add_data_flags(CLI::App& app, RunConfig& cfg) {
  app.add_option("--bed", cfg.bed, "PLINK .bed file");
  app.add_option("--bim", cfg.bim, "PLINK .bim file");
  app.add_option("--fam", cfg.fam, "PLINK .fam file");
  app.add_option("--keep", cfg.keep, "FID IID list of subjects to keep");
  app.add_option("--out", cfg.out, "output prefix")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--precision", cfg.precision, "gradient accumulation precision")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, packiht::Precision>{{"double", packiht::Precision::kDouble},
                                                    {"single", packiht::Precision::kSingle}},
          CLI::ignore_case));
  app.add_flag("--timing,!--no-timing", cfg.record_time, "record wall-clock seconds; --no-timing writes 0");
  app.add_option("--max-iter", cfg.max_iter, "IHT iteration cap")->capture_default_str();
  app.add_option("--tol", cfg.tol, "convergence tolerance on max |delta beta|")->capture_default_str();
}

void add_model_flags(CLI::App& app, RunConfig& cfg) {
  app.add_option("--pheno", cfg.pheno, "phenotype file (one column, or FID IID value)");
  app.add_option("--covar", cfg.covar, "covariate table, one row per FAM sample");
  app.add_option("--transform", cfg.transform, "phenotype transform")
      ->check(CLI::IsMember({"none", "log"}))->capture_default_str();
  app.add_flag("--intercept,!--no-intercept", cfg.intercept, "add an intercept column; --no-intercept leaves it out");
}

void add_synthetic_flags(CLI::App& app, RunConfig& cfg) {
  app.add_option("--synthetic-n", cfg.synthetic_n, "samples in a synthetic genotype matrix");
  app.add_option("--synthetic-p", cfg.synthetic_p, "variants in a synthetic genotype matrix");
  app.add_option("--missing-rate", cfg.missing_rate, "missing genotype rate for synthetic data")
      ->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative hard thresholding on PLINK-compressed genotypes"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* fit = app.add_subcommand("fit", "fit one sparsity level");
  add_data_flags(*fit, cfg);
  add_model_flags(*fit, cfg);
  fit->add_option("--k", cfg.k, "sparsity budget")->capture_default_str();

  auto* cv = app.add_subcommand("cv", "q-fold cross-validation over a sparsity path");
  add_data_flags(*cv, cfg);
  add_model_flags(*cv, cfg);
  cv->add_option("--path", cfg.path_spec, "a:b:step or comma list (default 1:10:1)");
  cv->add_option("--q", cfg.q, "fold count")->capture_default_str();
  cv->add_flag("--global", cfg.global_standardization,
               "standardize held-out folds with full-data statistics");
  cv->add_flag("--warm-start", cfg.warm_start, "initialize each k from the previous fit");

  auto* sim = app.add_subcommand("simulate", "simulation study over k_true and effect divisors");
  add_data_flags(*sim, cfg);
  add_synthetic_flags(*sim, cfg);
  sim->add_option("--k-true", cfg.k_true_grid, "causal marker counts")->delimiter(',');
  sim->add_option("--snr", cfg.snr_grid, "effect variance divisors s")->delimiter(',');
  sim->add_option("--replicates", cfg.replicates, "replicates per cell")->capture_default_str();
  sim->add_option("--path-rule", cfg.path_rule,
                  "straddle:STRIDE:HALF_WIDTH, dense:EXTRA, or an explicit path")
      ->capture_default_str();
  sim->add_option("--q", cfg.q, "fold count")->capture_default_str();
  sim->add_option("--test-fraction", cfg.test_fraction, "held-out share of samples");
  sim->add_option("--effect-variance", cfg.effect_variance)->capture_default_str();
  sim->add_option("--noise-variance", cfg.noise_variance)->capture_default_str();
  sim->add_flag("--warm-start", cfg.warm_start, "initialize each k from the previous fit");

  auto* bench = app.add_subcommand("bench", "time a regularization path per storage mode");
  add_data_flags(*bench, cfg);
  add_synthetic_flags(*bench, cfg);
  bench->add_option("--path", cfg.path_spec, "sparsity path (default 5:100:5)");
  bench->add_option("--repetitions", cfg.repetitions, "timed repetitions")->capture_default_str();
  bench->add_option("--modes", cfg.modes, "packed, packed+mt, dense")->delimiter(',');
  bench->add_option("--dense-cap-mb", cfg.dense_cap_mb, "refuse dense mode above this size")
      ->capture_default_str();
  bench->add_option("--k-true", cfg.k_true_grid, "causal markers for the simulated response")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    packiht::cli::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
