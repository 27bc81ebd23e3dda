// Acceptance suite: one PASS/FAIL line per criterion. Criteria can be picked
// on the command line (e.g. `acceptance 1 4 10`); default is all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracle.hpp"
#include "packiht/cli.hpp"
#include "packiht/iht_core.hpp"
#include "packiht/model_select.hpp"
#include "packiht/plink_io.hpp"
#include "packiht/simulate.hpp"
#include "test_util.hpp"

using namespace packiht;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  bool gate = true;  // informational criteria never fail the run
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

int hardware_threads() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
  std::vector<std::size_t> out;
  for (std::size_t k = a; k <= b; ++k) out.push_back(k);
  return out;
}

// 1. packed kernels against the dense oracle
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<std::size_t> pick_n(2, 100), pick_p(1, 300);
  std::uniform_real_distribution<double> pick_missing(0.0, 0.2);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = pick_n(rng), p = pick_p(rng);
    const auto codes = oracle::random_codes(n, p, pick_missing(rng), rng);
    const auto packed = PackedGenotypeMatrix::from_codes(n, p, codes);
    const Eigen::MatrixXd dense = oracle::standardize(oracle::decode(n, p, oracle::pack(n, p, codes)));
    StandardizedView view(packed, nullptr, {1 + trial % 4, Precision::kDouble});

    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(p, 25))(rng);
    SparseModel beta = SparseModel::zeros(p, 0, k);
    beta.support = random_support(p, k, rng);
    for (std::size_t s = 0; s < k; ++s) beta.values.push_back(z(rng));
    worst = std::max(worst, oracle::rel_err(ax(view, beta), Eigen::VectorXd(dense * beta.dense())));

    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = z(rng);
    worst = std::max(worst, oracle::rel_err(aty(view, r), Eigen::VectorXd(dense.transpose() * r)));

    const auto support = random_support(p, std::min<std::size_t>(p, 10), rng);
    Eigen::MatrixXd slice(dense.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) slice.col(static_cast<Eigen::Index>(s)) = dense.col(static_cast<Eigen::Index>(support[s]));
    worst = std::max(worst, oracle::rel_err(decompress_active(view, support), slice));
  }
  const double secs = since(t0);
  return {worst <= 1e-10 && secs < 30.0, true,
          fmt("200 matrices, worst relative error %.2e (limit 1e-10), %.2f s (limit 30 s)", worst, secs)};
}

// 2. hard thresholding against exhaustive search
Outcome projection_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 1 + trial % 10;
    const int k = 1 + (trial / 10) % 3;
    Eigen::VectorXd b(p);
    for (int j = 0; j < p; ++j) b[j] = z(rng);
    const Eigen::VectorXd best = oracle::best_k_sparse(b, k);
    const Eigen::VectorXd got = project_sparse(b, static_cast<std::size_t>(p), static_cast<std::size_t>(k)).dense();
    if (!(got.array() == best.array()).all()) ++mismatches;
  }
  const double secs = since(t0);
  return {mismatches == 0 && secs < 5.0, true,
          fmt("1000 trials, %.0f mismatches, %.2f s (limit 5 s)", mismatches, secs)};
}

// 3. every accepted iteration lowers the loss
Outcome monotone_descent() {
  const auto g = random_genotypes(200, 500, 303);
  StandardizedView view(g);
  const double divisors[] = {1.0, 10.0, 100.0, 1000.0};
  std::size_t iterations = 0, violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimulationSpec spec;
    spec.k_true = 5 + seed % 3 * 5;
    spec.effect_variance = 1.0;
    spec.snr_divisor = divisors[seed % 4];
    spec.noise_variance = 0.1;
    spec.seed = seed;
    const auto sim = simulate_phenotype(view, spec);
    IhtConfig cfg;
    cfg.k = spec.k_true;
    const auto res = fit(view, sim.y, cfg);
    for (std::size_t i = 1; i < res.loss_trace.size(); ++i) {
      const double rise = res.loss_trace[i] - res.loss_trace[i - 1];
      worst = std::max(worst, rise);
      ++iterations;
      if (rise > 1e-12) ++violations;
    }
  }
  return {violations == 0, true,
          fmt("100 fits, %.0f accepted iterations, %.0f rises above 1e-12, largest change %.3e", static_cast<double>(iterations),
              static_cast<double>(violations), worst)};
}

// 4. exact and noisy recovery on Gaussian designs
Outcome exact_recovery() {
  const auto t0 = Clock::now();
  std::size_t exact = 0, runs = 0;
  double precision = 0.0, recall = 0.0;
  std::size_t noisy_runs = 0;
  for (std::size_t k_true : {5u, 10u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(1000 * k_true + seed);
      const DenseDesign d = gaussian_design(500, 2000, rng);
      StandardizedView view(d);
      IhtConfig cfg;
      cfg.k = k_true;

      SparseModel truth = SparseModel::zeros(2000, 0, k_true);
      truth.support = random_support(2000, k_true, rng);
      std::uniform_real_distribution<double> magnitude(0.5, 1.5);
      std::bernoulli_distribution sign;
      for (std::size_t s = 0; s < k_true; ++s) truth.values.push_back((sign(rng) ? 1.0 : -1.0) * magnitude(rng));
      const Eigen::VectorXd y = ax(view, truth);
      exact += fit(view, y, cfg).model.support == truth.support;
      ++runs;

      SimulationSpec spec;
      spec.k_true = k_true;
      spec.effect_variance = 1.0;
      spec.noise_variance = 0.01;
      spec.seed = rng();
      const auto sim = simulate_phenotype(view, spec);
      const auto pr = precision_recall(fit(view, sim.y, cfg).model.support, sim.beta_true.support);
      precision += pr.precision;
      recall += pr.recall;
      ++noisy_runs;
    }
  }
  precision /= static_cast<double>(noisy_runs);
  recall /= static_cast<double>(noisy_runs);
  const double secs = since(t0);
  const double rate = static_cast<double>(exact) / static_cast<double>(runs);
  return {rate == 1.0 && precision >= 0.95 && recall >= 0.95 && secs < 120.0, true,
          fmt("noiseless recovery %.0f%%, noisy precision %.3f recall %.3f (limits 0.95), %.1f s", 100.0 * rate,
              precision, recall, secs)};
}

// 5. scaled simulation study
Outcome scaled_simulation() {
  const auto t0 = Clock::now();
  const auto g = random_genotypes(2000, 10000, 505, 0.0, 0.05, 0.5, hardware_threads());
  StandardizedView view(g);
  ExperimentGrid grid;
  grid.k_true = {20, 40};
  grid.snr_divisors = {1.0, 10.0};
  grid.replicates = 5;
  grid.seed = 5;
  ExperimentConfig cfg;
  cfg.q = 5;
  cfg.path.kind = PathRule::Kind::kStraddle;
  cfg.path.stride = 2;
  cfg.path.half_width = 5;
  cfg.replicate_threads = hardware_threads();
  cfg.record_time = false;
  const auto reports = run_experiment(view, grid, cfg);
  const auto cells = summarize(reports);

  bool ok = true;
  std::ostringstream detail;
  detail << "\n";
  for (const auto& c : cells) {
    const double baseline = static_cast<double>(c.k_true) / 10000.0;  // random k-subset precision
    const double h2_gap = std::abs(c.h2_est - c.h2_true);
    bool cell_ok = true;
    if (c.snr_divisor == 1.0) cell_ok = c.precision >= 0.9 && h2_gap <= 0.05;
    else cell_ok = c.precision >= baseline;
    ok = ok && cell_ok;
    detail << fmt("    k_true=%.0f s=%.0f precision=%.3f recall=%.3f", static_cast<double>(c.k_true), c.snr_divisor, c.precision,
                  c.recall)
           << fmt(" h2_true=%.3f h2_est=%.3f k_sel=%.1f baseline=%.4f", c.h2_true, c.h2_est, c.k_selected, baseline)
           << (cell_ok ? "" : "  <-- below target") << "\n";
  }
  const double secs = since(t0);
  ok = ok && secs < 1800.0;
  detail << fmt("    %.0f s on %.0f threads (limit 1800 s)", secs, hardware_threads());
  return {ok, true, detail.str()};
}

// 6. cross-validated k on planted models, plus path-edge saturation
Outcome cv_selection() {
  const auto g = random_genotypes(500, 1000, 606);
  const auto cov = CovariateBlock::intercept(500);
  StandardizedView view(g, &cov);
  int hits = 0;
  std::ostringstream picks;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimulationSpec spec;
    spec.k_true = 5;
    spec.effect_variance = 1.0;
    spec.noise_variance = 1e-30;
    spec.seed = seed;
    const auto sim = simulate_phenotype(view, spec);
    const auto rep = cv_iht(view, sim.y, make_plan(500, 5, range(1, 15), 100 + seed), IhtConfig{});
    hits += rep.k_best == 5;
    picks << rep.k_best << (seed + 1 < 20 ? "," : "");
  }

  // k_true beyond either end of the path
  StandardizedView plain(g);
  ExperimentGrid grid;
  grid.snr_divisors = {1.0};
  grid.effect_variance = 1.0;
  grid.replicates = 5;
  grid.seed = 6;
  ExperimentConfig cfg;
  cfg.path.kind = PathRule::Kind::kExplicit;
  cfg.record_time = false;

  grid.k_true = {12};
  grid.noise_variance = 0.01;
  cfg.path.explicit_path = {2, 4, 6, 8};
  int at_max = 0;
  for (const auto& r : run_experiment(plain, grid, cfg)) at_max += r.k_selected == 8;

  grid.k_true = {2};
  grid.noise_variance = 1e-30;
  cfg.path.explicit_path = {6, 8, 10, 12};
  int at_min = 0;
  for (const auto& r : run_experiment(plain, grid, cfg)) at_min += r.k_selected == 6;

  const bool ok = hits >= 18 && at_max == 5 && at_min == 5;
  return {ok, true,
          "k_best = 5 in " + std::to_string(hits) + "/20 seeds (need 18) [" + picks.str() +
              "]; path max below k_true picks its max in " + std::to_string(at_max) +
              "/5, path min above k_true picks its min in " + std::to_string(at_min) + "/5"};
}

// 7. refit against the normal equations
Outcome refit_correctness() {
  const std::size_t n = 300, p = 500;
  const auto g = random_genotypes(n, p, 707, 0.02);
  const auto cov = CovariateBlock::intercept(n);
  StandardizedView view(g, &cov);
  const Eigen::MatrixXd z = oracle::standardize(oracle::decode(n, p, g.data()));
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + static_cast<std::size_t>(trial) % 25;
    const auto support = random_support(p, k, rng);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = noise(rng);
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k + 1));
    for (std::size_t s = 0; s < k; ++s) xs.col(static_cast<Eigen::Index>(s)) = z.col(static_cast<Eigen::Index>(support[s]));
    xs.col(static_cast<Eigen::Index>(k)).setOnes();
    const Eigen::VectorXd expected = oracle::normal_equations(xs, y);
    const auto r = refit_least_squares(view, y, support);
    Eigen::VectorXd got(static_cast<Eigen::Index>(k + 1));
    for (std::size_t s = 0; s < k; ++s) got[static_cast<Eigen::Index>(s)] = r.model.genetic(support[s]);
    got[static_cast<Eigen::Index>(k)] = r.model.covariates[0];
    worst = std::max(worst, (got - expected).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-8, true, fmt("100 active sets, largest coefficient difference %.2e (limit 1e-8)", worst)};
}

// 8. byte-identical tables across repeats and thread counts
Outcome determinism() {
  const auto dir = scratch_dir("determinism");
  std::vector<std::string> reference;
  int runs = 0, differing = 0;
  for (int repeat = 0; repeat < 2; ++repeat) {
    for (int threads : {1, 2, 8}) {
      const std::string tag = std::to_string(repeat) + "_" + std::to_string(threads);
      std::vector<std::string> tables;

      cli::RunConfig base;
      base.bed = data_path("cvfix.bed");
      base.bim = data_path("cvfix.bim");
      base.fam = data_path("cvfix.fam");
      base.threads = threads;
      base.record_time = false;
      base.seed = 11;

      cli::RunConfig f = base;
      f.command = "fit";
      f.k = 3;
      f.out = (dir / ("fit" + tag)).string();
      cli::run(f);
      tables.push_back(slurp(f.out + ".model.tsv"));
      tables.push_back(slurp(f.out + ".log"));

      cli::RunConfig c = base;
      c.command = "cv";
      c.path_spec = "1:10:1";
      c.out = (dir / ("cv" + tag)).string();
      cli::run(c);
      for (const char* ext : {".cv.tsv", ".summary.tsv", ".model.tsv"}) tables.push_back(slurp(c.out + ext));

      cli::RunConfig s;
      s.command = "simulate";
      s.synthetic_n = 600;
      s.synthetic_p = 2000;
      s.missing_rate = 0.01;
      s.k_true_grid = {5, 10};
      s.snr_grid = {1.0, 10.0};
      s.replicates = 2;
      s.threads = threads;
      s.record_time = false;
      s.seed = 12;
      s.out = (dir / ("sim" + tag)).string();
      cli::run(s);
      tables.push_back(slurp(s.out + ".sim.tsv"));
      tables.push_back(slurp(s.out + ".cells.tsv"));

      if (reference.empty()) {
        reference = tables;
      } else {
        for (std::size_t t = 0; t < tables.size(); ++t) differing += tables[t] != reference[t];
      }
      ++runs;
    }
  }
  return {differing == 0, true,
          std::to_string(runs) + " runs (threads 1, 2, 8, twice each) of fit, cv, simulate: " +
              std::to_string(differing) + " tables differ from the first run"};
}

// 9. packed vs dense timing, informational
Outcome benchmark() {
  const auto dir = scratch_dir("bench");
  cli::RunConfig b;
  b.command = "bench";
  b.synthetic_n = 2000;
  b.synthetic_p = 8000;
  b.repetitions = 3;
  b.threads = std::max(2, hardware_threads());
  b.path_spec = "5:50:5";
  b.out = (dir / "bench").string();
  cli::run(b);
  std::ifstream in(b.out + ".bench.tsv");
  std::string line, summary;
  bool supports_match = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("mode", 0) == 0) continue;
    std::istringstream ss(line);
    std::string mode, threads, reps, mean, sd, ratio, match;
    ss >> mode >> threads >> reps >> mean >> sd >> ratio >> match;
    supports_match = supports_match && match == "1";
    summary += "\n    " + mode + " (" + threads + " threads): " +
               fmt("mean %.3f s, sd %.3f s, %.2fx dense", std::stod(mean), std::stod(sd), std::stod(ratio));
  }
  return {supports_match, false,
          "2000 x 8000, path 5..50; reference slowdown of compressed data is about 17x" + summary +
              (supports_match ? "\n    all modes select identical supports" : "\n    supports differ between modes")};
}

// 10. BED codec fuzzing
Outcome bed_codec() {
  const auto dir = scratch_dir("bed_fuzz");
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<std::size_t> pick_p(0, 40);
  std::uniform_int_distribution<int> byte(0, 255);
  int failures = 0;
  std::set<std::size_t> remainders;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 97;
    const std::size_t p = pick_p(rng);
    remainders.insert(n % 4);
    const auto bed = dir / "m.bed";
    const auto copy = dir / "c.bed";
    std::vector<std::uint8_t> codes;
    if (trial % 2 == 0) {
      codes = oracle::random_codes(n, p, 0.1, rng);
      write_bed(PackedGenotypeMatrix::from_codes(n, p, codes), bed);
    } else {
      // arbitrary bytes, padding bits included
      std::string raw = {char(0x6C), char(0x1B), char(0x01)};
      for (std::size_t b = 0; b < p * ((n + 3) / 4); ++b) raw.push_back(static_cast<char>(byte(rng)));
      spit(bed, raw);
    }
    const auto m = read_bed(bed, n, p);
    write_bed(m, copy);
    bool ok = slurp(bed) == slurp(copy);
    if (!codes.empty()) {
      for (std::size_t j = 0; j < p && ok; ++j) {
        for (std::size_t i = 0; i < n; ++i) ok = ok && m.code(i, j) == codes[j * n + i];
      }
    }
    const auto dosage = oracle::decode(n, p, m.data());
    for (std::size_t j = 0; j < p && ok; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const int d = dosage(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        ok = ok && (d == oracle::kMissing ? m.code(i, j) == 1 : code_dosage(m.code(i, j)) == d);
      }
    }
    failures += !ok;
  }
  return {failures == 0 && remainders.size() == 4, true,
          fmt("500 matrices over n mod 4 in {0,1,2,3}, %.0f round-trip failures", failures)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"projection optimality", projection_optimality},
      {"monotone descent", monotone_descent},
      {"exact recovery", exact_recovery},
      {"scaled simulation", scaled_simulation},
      {"cv selection", cv_selection},
      {"refit correctness", refit_correctness},
      {"determinism", determinism},
      {"benchmark sanity", benchmark},
      {"bed codec", bed_codec},
  };
  std::set<std::size_t> chosen;
  for (int a = 1; a < argc; ++a) chosen.insert(static_cast<std::size_t>(std::stoul(argv[a])));

  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (!chosen.empty() && !chosen.count(c + 1)) continue;
    Outcome out;
    try {
      out = criteria[c].second();
    } catch (const std::exception& e) {
      out = {false, true, std::string("exception: ") + e.what()};
    }
    const char* verdict = out.pass ? "PASS" : (out.gate ? "FAIL" : "INFO");
    std::cout << "criterion " << c + 1 << " " << verdict << "  " << criteria[c].first << ": " << out.detail
              << std::endl;
    if (!out.pass && out.gate) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
