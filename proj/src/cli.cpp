#include "packiht/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "packiht/error.hpp"
#include "packiht/model_select.hpp"
#include "packiht/plink_io.hpp"
#include "packiht/simulate.hpp"

namespace packiht::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, sep)) out.push_back(token);
  return out;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("bad " + what + " '" + text + "'");
  }
  return value;
}

std::optional<double> parse_real(const std::string& text) {
  if (text == "NA" || text == "na" || text == "-9") return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("bad numeric value '" + text + "'");
  }
  return value;
}

std::ofstream open_output(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << metadata_line(config) << '\n';
  return out;
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Everything a subcommand needs after reading, filtering, and standardizing.
struct Dataset {
  PackedGenotypeMatrix genotypes;
  std::vector<VariantRecord> variants;
  std::vector<SampleRecord> samples;
  std::optional<CovariateBlock> covariates;
  Eigen::VectorXd y;
  bool has_phenotype = false;

  StandardizedView view(const RunConfig& config) const {
    return StandardizedView(genotypes, covariates ? &*covariates : nullptr,
                            KernelOptions{config.threads, config.precision});
  }
};

std::set<std::pair<std::string, std::string>> read_keep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::set<std::pair<std::string, std::string>> keep;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split_whitespace(line);
    if (f.empty()) continue;
    if (f.size() < 2) throw FormatError(path.string() + ": keep lines need FID and IID");
    keep.emplace(f[0], f[1]);
  }
  return keep;
}

// One value per line in FAM order, or FID IID value lines matched by id.
std::vector<std::optional<double>> read_phenotype_file(const std::filesystem::path& path,
                                                       const std::vector<SampleRecord>& samples) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto f = split_whitespace(line);
    if (!f.empty()) rows.push_back(std::move(f));
  }
  std::vector<std::optional<double>> values(samples.size());
  if (!rows.empty() && rows.front().size() >= 3) {
    std::map<std::pair<std::string, std::string>, std::optional<double>> by_id;
    for (const auto& r : rows) {
      try {
        by_id[{r[0], r[1]}] = parse_real(r[2]);
      } catch (const FormatError&) {
        // header line such as "FID IID trait"
      }
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto it = by_id.find({samples[i].family_id, samples[i].individual_id});
      if (it != by_id.end()) values[i] = it->second;
    }
    return values;
  }
  if (rows.size() != samples.size()) {
    throw FormatError(path.string() + ": " + std::to_string(rows.size()) +
                      " phenotype rows for " + std::to_string(samples.size()) + " samples");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) values[i] = parse_real(rows[i][0]);
  return values;
}

// Whitespace table with one row per FAM sample; an optional non-numeric
// first row names the columns.
std::pair<Eigen::MatrixXd, std::vector<std::string>> read_covariate_file(
    const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto f = split_whitespace(line);
    if (!f.empty()) rows.push_back(std::move(f));
  }
  std::vector<std::string> names;
  if (!rows.empty()) {
    double probe = 0.0;
    const std::string& first = rows.front().front();
    auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), probe);
    if (ec != std::errc() || ptr != first.data() + first.size()) {
      names = rows.front();
      rows.erase(rows.begin());
    }
  }
  if (rows.size() != n) {
    throw FormatError(path.string() + ": " + std::to_string(rows.size()) + " covariate rows for " +
                      std::to_string(n) + " samples");
  }
  const std::size_t c = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != c) {
      throw FormatError(path.string() + ": ragged covariate row " + std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < c; ++j) {
      const auto v = parse_real(rows[i][j]);
      if (!v) throw FormatError(path.string() + ": missing covariate value in row " + std::to_string(i + 1));
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  if (!names.empty() && names.size() != c) names.clear();
  return {std::move(values), std::move(names)};
}

Dataset load_dataset(const RunConfig& config, bool require_phenotype) {
  if (config.bed.empty() || config.bim.empty() || config.fam.empty()) {
    throw Error("--bed, --bim and --fam are all required");
  }
  PlinkDataset raw = read_plink(config.bed, config.bim, config.fam, config.threads);
  std::vector<std::optional<double>> pheno(raw.samples.size());
  if (!config.pheno.empty()) {
    pheno = read_phenotype_file(config.pheno, raw.samples);
  } else {
    for (std::size_t i = 0; i < raw.samples.size(); ++i) pheno[i] = raw.samples[i].phenotype;
  }
  std::optional<std::set<std::pair<std::string, std::string>>> keep;
  if (!config.keep.empty()) keep = read_keep(config.keep);

  const bool have_any = std::any_of(pheno.begin(), pheno.end(), [](const auto& v) { return v.has_value(); });
  if (require_phenotype && !have_any) throw Error("no phenotype values available");

  // Subjects with a missing trait are excluded, as are those outside --keep.
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    if (have_any && !pheno[i]) continue;
    if (keep && !keep->count({raw.samples[i].family_id, raw.samples[i].individual_id})) continue;
    rows.push_back(i);
  }
  if (rows.size() < 2) throw Error("fewer than two samples remain after filtering");

  Dataset ds;
  ds.variants = std::move(raw.variants);
  ds.genotypes = rows.size() == raw.samples.size() ? std::move(raw.genotypes)
                                                   : raw.genotypes.select_rows(rows, config.threads);
  for (std::size_t i : rows) ds.samples.push_back(raw.samples[i]);

  ds.has_phenotype = have_any;
  ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  if (have_any) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double value = *pheno[rows[r]];
      if (config.transform == "log") {
        if (!(value > 0.0)) throw Error("log transform needs positive phenotypes");
        value = std::log(value);
      } else if (config.transform != "none") {
        throw Error("unknown transform '" + config.transform + "'");
      }
      ds.y[static_cast<Eigen::Index>(r)] = value;
    }
    ds.y.array() -= ds.y.mean();
  }

  if (!config.covar.empty()) {
    auto [all_values, names] = read_covariate_file(config.covar, raw.samples.size());
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), all_values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) values.row(static_cast<Eigen::Index>(r)) = all_values.row(static_cast<Eigen::Index>(rows[r]));
    if (config.intercept) {
      ds.covariates = CovariateBlock::with_intercept(values, names);
    } else {
      ds.covariates = CovariateBlock(values, std::vector<bool>(static_cast<std::size_t>(values.cols()), true), names);
    }
  } else if (config.intercept) {
    ds.covariates = CovariateBlock::intercept(rows.size());
  }
  return ds;
}

void write_model(const std::string& path, const RunConfig& config, const Dataset& ds,
                 const SparseModel& model) {
  auto out = open_output(path, config);
  out << "predictor_id\tchromosome\tposition\tbeta\n";
  for (std::size_t s = 0; s < model.support.size(); ++s) {
    const VariantRecord& v = ds.variants.at(model.support[s]);
    out << v.identifier << '\t' << v.chromosome << '\t' << v.position << '\t'
        << format_real(model.values[s]) << '\n';
  }
  if (ds.covariates) {
    for (std::size_t c = 0; c < model.c(); ++c) {
      out << ds.covariates->names()[c] << "\tNA\tNA\t"
          << format_real(model.covariates[static_cast<Eigen::Index>(c)]) << '\n';
    }
  }
}

void require_phenotype(const Dataset& ds) {
  if (!ds.has_phenotype) throw Error("a phenotype is required (FAM column 6 or --pheno)");
}

PathRule parse_path_rule(const std::string& text) {
  PathRule rule;
  const auto parts = split(text, ':');
  if (parts.empty()) throw Error("empty path rule");
  if (parts[0] == "straddle") {
    rule.kind = PathRule::Kind::kStraddle;
    if (parts.size() > 1) rule.stride = parse_count(parts[1], "straddle stride");
    if (parts.size() > 2) rule.half_width = parse_count(parts[2], "straddle width");
  } else if (parts[0] == "dense") {
    rule.kind = PathRule::Kind::kDense;
    if (parts.size() > 1) rule.dense_extra = parse_count(parts[1], "dense path extra");
  } else {
    rule.kind = PathRule::Kind::kExplicit;
    rule.explicit_path = parse_path_spec(text);
  }
  return rule;
}

// simulate/bench accept either a PLINK triple or a synthetic matrix.
Dataset load_genotypes_only(const RunConfig& config) {
  if (config.synthetic_n > 0) {
    Dataset ds;
    ds.genotypes = random_genotypes(config.synthetic_n, config.synthetic_p, config.seed,
                                    config.missing_rate, 0.05, 0.5, config.threads);
    for (std::size_t j = 0; j < config.synthetic_p; ++j) {
      ds.variants.push_back({"0", "snp" + std::to_string(j + 1), 0.0, static_cast<std::int64_t>(j + 1), "A", "G"});
    }
    ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.synthetic_n));
    return ds;
  }
  RunConfig relaxed = config;
  relaxed.intercept = false;
  relaxed.covar.clear();
  return load_dataset(relaxed, false);
}

}  // namespace

std::vector<std::size_t> parse_path_spec(const std::string& spec) {
  if (spec.empty()) throw Error("empty path specification");
  std::vector<std::size_t> path;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw Error("path must look like a:b:step, got '" + spec + "'");
    const std::size_t a = parse_count(parts[0], "path start");
    const std::size_t b = parse_count(parts[1], "path end");
    const std::size_t step = parse_count(parts[2], "path step");
    if (step == 0 || a > b) throw Error("path '" + spec + "' is empty or has zero step");
    for (std::size_t k = a; k <= b; k += step) path.push_back(k);
  } else {
    for (const auto& token : split(spec, ',')) path.push_back(parse_count(token, "path entry"));
  }
  return path;
}

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string config_hash(const RunConfig& c) {
  std::ostringstream s;
  s << "command=" << c.command << ";bed=" << c.bed.string() << ";bim=" << c.bim.string()
    << ";fam=" << c.fam.string() << ";pheno=" << c.pheno.string() << ";covar=" << c.covar.string()
    << ";keep=" << c.keep.string() << ";synthetic=" << c.synthetic_n << 'x' << c.synthetic_p
    << ";missing=" << format_real(c.missing_rate) << ";precision="
    << (c.precision == Precision::kSingle ? "single" : "double") << ";seed=" << c.seed
    << ";timing=" << c.record_time << ";k=" << c.k << ";path=" << c.path_spec << ";q=" << c.q
    << ";transform=" << c.transform << ";intercept=" << c.intercept
    << ";global=" << c.global_standardization << ";warm=" << c.warm_start
    << ";max_iter=" << c.max_iter << ";tol=" << format_real(c.tol) << ";k_true=";
  for (auto k : c.k_true_grid) s << k << ',';
  s << ";snr=";
  for (auto v : c.snr_grid) s << format_real(v) << ',';
  s << ";reps=" << c.replicates << ";rule=" << c.path_rule << ";test=" << format_real(c.test_fraction)
    << ";effect=" << format_real(c.effect_variance) << ";noise=" << format_real(c.noise_variance)
    << ";repetitions=" << c.repetitions << ";modes=";
  for (const auto& m : c.modes) s << m << ',';
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
  return hex;
}

std::string metadata_line(const RunConfig& config) {
  return std::string("# packiht ") + kVersion + " command=" + config.command +
         " config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed);
}

IhtConfig solver_config(const RunConfig& config) {
  IhtConfig cfg;
  cfg.k = config.k;
  cfg.max_iter = config.max_iter;
  cfg.tol = config.tol;
  return cfg;
}

void run_fit(const RunConfig& config) {
  const Dataset ds = load_dataset(config, true);
  require_phenotype(ds);
  const StandardizedView view = ds.view(config);
  const auto start = Clock::now();
  const FitResult result = fit(view, ds.y, solver_config(config));
  const double elapsed = seconds_since(start);

  write_model(config.out + ".model.tsv", config, ds, result.model);
  auto log = open_output(config.out + ".log", config);
  log << "samples\t" << view.n() << "\nvariants\t" << view.p() << "\ncovariates\t" << view.c()
      << "\nk\t" << config.k << "\niterations\t" << result.iterations << "\nconverged\t"
      << (result.converged ? "true" : "false") << "\ntermination\t" << to_string(result.reason)
      << "\nbacktracks\t" << result.total_backtracks << "\nseconds\t"
      << format_real(config.record_time ? elapsed : 0.0) << "\niteration\tloss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    log << i << '\t' << format_real(result.loss_trace[i]) << '\n';
  }
}

void run_cv(const RunConfig& config) {
  const Dataset ds = load_dataset(config, true);
  require_phenotype(ds);
  const StandardizedView view = ds.view(config);
  const std::vector<std::size_t> path =
      parse_path_spec(config.path_spec.empty() ? std::string("1:10:1") : config.path_spec);
  const CvPlan plan = make_plan(view.n(), config.q, path, config.seed);
  CvOptions options;
  options.standardization =
      config.global_standardization ? Standardization::kGlobal : Standardization::kTrainingFold;
  options.warm_start = config.warm_start;
  const CvReport report = cv_iht(view, ds.y, plan, solver_config(config), options);

  auto cv_out = open_output(config.out + ".cv.tsv", config);
  cv_out << "k\tfold\tmse\n";
  for (std::size_t i = 0; i < report.path.size(); ++i) {
    for (std::size_t f = 0; f < plan.q; ++f) {
      cv_out << report.path[i] << '\t' << f << '\t'
             << format_real(report.mse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f))) << '\n';
    }
  }
  auto summary = open_output(config.out + ".summary.tsv", config);
  summary << "k\tmean_mse\tis_best\n";
  for (std::size_t i = 0; i < report.path.size(); ++i) {
    summary << report.path[i] << '\t' << format_real(report.mean_mse[static_cast<Eigen::Index>(i)]) << '\t'
            << (i == report.best_index ? 1 : 0) << '\n';
  }
  write_model(config.out + ".model.tsv", config, ds, report.final_model);
}

void run_simulate(const RunConfig& config) {
  const Dataset ds = load_genotypes_only(config);
  const StandardizedView view(ds.genotypes, nullptr, KernelOptions{config.threads, config.precision});

  ExperimentGrid grid;
  grid.k_true = config.k_true_grid;
  grid.snr_divisors = config.snr_grid;
  grid.replicates = config.replicates;
  grid.effect_variance = config.effect_variance;
  grid.noise_variance = config.noise_variance;
  grid.seed = config.seed;

  ExperimentConfig exp;
  exp.q = config.q;
  exp.test_fraction = config.test_fraction;
  exp.path = parse_path_rule(config.path_rule);
  exp.iht = solver_config(config);
  // Simulated phenotypes are built on the globally standardized matrix, so
  // every split shares those statistics.
  exp.cv.standardization = Standardization::kGlobal;
  exp.cv.warm_start = config.warm_start;
  exp.record_time = config.record_time;

  const auto reports = run_experiment(view, grid, exp);
  auto out = open_output(config.out + ".sim.tsv", config);
  out << "k_true\tsnr_divisor\treplicate\tk_selected\tprecision\trecall\tmse\th2_true\th2_est\tseconds\n";
  for (const auto& r : reports) {
    out << r.k_true << '\t' << format_real(r.snr_divisor) << '\t' << r.replicate << '\t'
        << r.k_selected << '\t' << format_real(r.precision) << '\t' << format_real(r.recall) << '\t'
        << format_real(r.mse_test) << '\t' << format_real(r.h2_true) << '\t'
        << format_real(r.h2_est) << '\t' << format_real(r.seconds) << '\n';
  }
  auto cells = open_output(config.out + ".cells.tsv", config);
  cells << "k_true\tsnr_divisor\treplicates\tprecision\trecall\tmse\tseconds\th2_true\th2_est\tk_selected\n";
  for (const auto& c : summarize(reports)) {
    cells << c.k_true << '\t' << format_real(c.snr_divisor) << '\t' << c.replicates << '\t'
          << format_real(c.precision) << '\t' << format_real(c.recall) << '\t'
          << format_real(c.mse_test) << '\t' << format_real(c.seconds) << '\t'
          << format_real(c.h2_true) << '\t' << format_real(c.h2_est) << '\t'
          << format_real(c.k_selected) << '\n';
  }
}

void run_bench(const RunConfig& config) {
  Dataset ds = load_genotypes_only(config);
  const std::size_t n = ds.genotypes.n();
  const std::size_t p = ds.genotypes.p();

  std::vector<std::size_t> path =
      parse_path_spec(config.path_spec.empty() ? std::string("5:100:5") : config.path_spec);
  path.erase(std::remove_if(path.begin(), path.end(), [&](std::size_t k) { return k == 0 || k >= n || k > p; }),
             path.end());
  if (path.empty()) throw Error("no usable sparsity levels for this matrix size");

  Eigen::VectorXd y = ds.y;
  if (!ds.has_phenotype) {
    const StandardizedView view(ds.genotypes);
    SimulationSpec spec;
    spec.k_true = std::min<std::size_t>(config.k_true_grid.empty() ? 10 : config.k_true_grid.front(), p);
    spec.seed = config.seed;
    y = simulate_phenotype(view, spec).y;
  }
  y.array() -= y.mean();

  std::optional<DenseDesign> dense;
  struct ModeResult {
    std::string mode;
    int threads = 1;
    std::vector<double> times;
    std::vector<std::vector<std::size_t>> supports;
  };
  std::vector<ModeResult> results;

  for (const std::string& mode : config.modes) {
    ModeResult res;
    res.mode = mode;
    std::optional<StandardizedView> view;
    if (mode == "packed") {
      view.emplace(ds.genotypes, nullptr, KernelOptions{1, config.precision});
    } else if (mode == "packed+mt") {
      res.threads = config.threads;
      view.emplace(ds.genotypes, nullptr, KernelOptions{config.threads, config.precision});
    } else if (mode == "dense") {
      const double mb = static_cast<double>(n) * static_cast<double>(p) * 8.0 / (1024.0 * 1024.0);
      if (mb > config.dense_cap_mb) {
        throw Error("dense mode needs " + format_real(mb) + " MiB, above the cap of " +
                    format_real(config.dense_cap_mb) + " MiB");
      }
      if (!dense) dense = DenseDesign::from_packed(ds.genotypes);
      view.emplace(*dense, nullptr, KernelOptions{1, Precision::kDouble});
    } else {
      throw Error("unknown bench mode '" + mode + "'");
    }
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      std::vector<std::vector<std::size_t>> supports;
      const auto start = Clock::now();
      for (std::size_t k : path) {
        IhtConfig cfg = solver_config(config);
        cfg.k = k;
        supports.push_back(fit(*view, y, cfg).model.support);
      }
      res.times.push_back(seconds_since(start));
      if (rep == 0) res.supports = std::move(supports);
    }
    results.push_back(std::move(res));
  }

  auto dense_it = std::find_if(results.begin(), results.end(), [](const ModeResult& r) { return r.mode == "dense"; });
  auto out = open_output(config.out + ".bench.tsv", config);
  out << "mode\tthreads\trepetitions\tmean_seconds\tsd_seconds\tratio_vs_dense\tsupports_match_first\n";
  std::cout << "mode\tthreads\tmean_s\tsd_s\tratio_vs_dense\n";
  for (const ModeResult& r : results) {
    const double m = static_cast<double>(r.times.size());
    double mean = 0.0;
    for (double t : r.times) mean += t;
    mean /= m;
    double var = 0.0;
    for (double t : r.times) var += (t - mean) * (t - mean);
    const double sd = r.times.size() > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
    std::string ratio = "NA";
    if (dense_it != results.end()) {
      double dense_mean = 0.0;
      for (double t : dense_it->times) dense_mean += t;
      dense_mean /= static_cast<double>(dense_it->times.size());
      if (dense_mean > 0.0) ratio = format_real(mean / dense_mean);
    }
    const bool match = r.supports == results.front().supports;
    out << r.mode << '\t' << r.threads << '\t' << r.times.size() << '\t' << format_real(mean) << '\t'
        << format_real(sd) << '\t' << ratio << '\t' << (match ? 1 : 0) << '\n';
    std::cout << r.mode << '\t' << r.threads << '\t' << mean << '\t' << sd << '\t' << ratio << '\n';
  }
}

void run(const RunConfig& config) {
  if (config.threads < 1) throw Error("thread count must be at least 1");
  if (config.command == "fit") return run_fit(config);
  if (config.command == "cv") return run_cv(config);
  if (config.command == "simulate") return run_simulate(config);
  if (config.command == "bench") return run_bench(config);
  throw Error("unknown command '" + config.command + "'");
}

}  // namespace packiht::cli
