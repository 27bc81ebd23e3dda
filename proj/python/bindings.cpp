#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "packiht/error.hpp"
#include "packiht/geno_matrix.hpp"
#include "packiht/iht_core.hpp"
#include "packiht/model_select.hpp"
#include "packiht/plink_io.hpp"
#include "packiht/simulate.hpp"

namespace py = pybind11;
using namespace packiht;

namespace {

// Owns the genotypes and covariates a StandardizedView points at, so Python
// callers never see dangling references.
class Design {
 public:
  Design(PackedGenotypeMatrix genotypes, std::optional<Eigen::MatrixXd> covariates, bool intercept,
         int threads, bool single_precision)
      : genotypes_(std::move(genotypes)),
        options_{threads, single_precision ? Precision::kSingle : Precision::kDouble} {
    const auto n = genotypes_.n();
    if (covariates && covariates->cols() > 0) {
      covariates_ = intercept ? CovariateBlock::with_intercept(*covariates, {})
                              : CovariateBlock(*covariates,
                                               std::vector<bool>(static_cast<std::size_t>(covariates->cols()), true),
                                               {});
    } else if (intercept) {
      covariates_ = CovariateBlock::intercept(n);
    }
  }

  StandardizedView view() const {
    return StandardizedView(genotypes_, covariates_ ? &*covariates_ : nullptr, options_);
  }

  SparseModel model(const std::vector<std::size_t>& support, const std::vector<double>& values,
                    std::optional<Eigen::VectorXd> covariates) const {
    SparseModel m = SparseModel::zeros(genotypes_.p(), covariates_ ? covariates_->c() : 0, support.size());
    m.support = support;
    m.values = values;
    if (covariates) m.covariates = *covariates;
    return m;
  }

  const PackedGenotypeMatrix& genotypes() const { return genotypes_; }

 private:
  PackedGenotypeMatrix genotypes_;
  std::optional<CovariateBlock> covariates_;
  KernelOptions options_;
};

py::dict model_dict(const SparseModel& m) {
  py::dict d;
  d["support"] = m.support;
  d["values"] = m.values;
  d["covariates"] = m.covariates;
  d["k"] = m.k;
  return d;
}

py::array_t<std::uint8_t> codes_of(const PackedGenotypeMatrix& g) {
  py::array_t<std::uint8_t> out({g.n(), g.p()});
  auto buf = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < g.p(); ++j) buf(i, j) = g.code(i, j);
  }
  return out;
}

PackedGenotypeMatrix from_code_array(py::array_t<std::uint8_t, py::array::forcecast> codes) {
  if (codes.ndim() != 2) throw DimensionError("codes must be a 2-D array (samples x variants)");
  const auto n = static_cast<std::size_t>(codes.shape(0));
  const auto p = static_cast<std::size_t>(codes.shape(1));
  auto buf = codes.unchecked<2>();
  std::vector<std::uint8_t> flat(n * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) flat[j * n + i] = buf(i, j);
  }
  return PackedGenotypeMatrix::from_codes(n, p, flat);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Iterative hard thresholding on PLINK-compressed genotypes";

  py::register_exception<Error>(m, "PackihtError", PyExc_RuntimeError);

  py::class_<PackedGenotypeMatrix>(m, "PackedGenotypeMatrix")
      .def_static("from_codes", &from_code_array, py::arg("codes"),
                  "Build from an (n, p) array of PLINK codes 0..3 (1 = missing).")
      .def_property_readonly("n", &PackedGenotypeMatrix::n)
      .def_property_readonly("p", &PackedGenotypeMatrix::p)
      .def_property_readonly("means", &PackedGenotypeMatrix::means)
      .def_property_readonly("precisions", &PackedGenotypeMatrix::precisions)
      .def_property_readonly("storage_bytes", &PackedGenotypeMatrix::storage_bytes)
      .def("codes", &codes_of)
      .def("standardized", [](const PackedGenotypeMatrix& g) { return DenseDesign::from_packed(g).values; },
           "Dense standardized copy (missing entries are 0).");

  m.def("read_bed", &read_bed, py::arg("path"), py::arg("n_samples"), py::arg("n_variants"),
        py::arg("threads") = 1);
  m.def("write_bed", &write_bed, py::arg("matrix"), py::arg("path"));
  m.def("random_genotypes", &random_genotypes, py::arg("n"), py::arg("p"), py::arg("seed"),
        py::arg("missing_rate") = 0.0, py::arg("maf_low") = 0.05, py::arg("maf_high") = 0.5,
        py::arg("threads") = 1);

  m.def("project_sparse",
        [](const Eigen::VectorXd& beta, std::size_t p, std::size_t k) {
          return model_dict(project_sparse(beta, p, k));
        },
        py::arg("beta"), py::arg("p"), py::arg("k"));
  m.def("make_folds", &make_folds, py::arg("n"), py::arg("q"), py::arg("seed"));
  m.def("precision_recall",
        [](const std::vector<std::size_t>& selected, const std::vector<std::size_t>& truth) {
          const PrecisionRecall pr = precision_recall(selected, truth);
          return py::make_tuple(pr.precision, pr.recall);
        },
        py::arg("selected"), py::arg("truth"));

  py::class_<Design>(m, "Design")
      .def(py::init<PackedGenotypeMatrix, std::optional<Eigen::MatrixXd>, bool, int, bool>(),
           py::arg("genotypes"), py::arg("covariates") = py::none(), py::arg("intercept") = false,
           py::arg("threads") = 1, py::arg("single_precision") = false)
      .def_property_readonly("n", [](const Design& d) { return d.view().n(); })
      .def_property_readonly("p", [](const Design& d) { return d.view().p(); })
      .def_property_readonly("c", [](const Design& d) { return d.view().c(); })
      .def("ax",
           [](const Design& d, const std::vector<std::size_t>& support,
              const std::vector<double>& values, std::optional<Eigen::VectorXd> covariates) {
             return ax(d.view(), d.model(support, values, std::move(covariates)));
           },
           py::arg("support"), py::arg("values"), py::arg("covariates") = py::none())
      .def("aty", [](const Design& d, const Eigen::VectorXd& r) { return aty(d.view(), r); },
           py::arg("r"))
      .def("decompress_active",
           [](const Design& d, const std::vector<std::size_t>& support) {
             return decompress_active(d.view(), support);
           },
           py::arg("support"))
      .def("fit",
           [](const Design& d, const Eigen::VectorXd& y, std::size_t k, std::size_t max_iter,
              double tol) {
             IhtConfig cfg;
             cfg.k = k;
             cfg.max_iter = max_iter;
             cfg.tol = tol;
             FitResult r;
             {
               py::gil_scoped_release release;
               r = fit(d.view(), y, cfg);
             }
             py::dict out = model_dict(r.model);
             out["loss_trace"] = r.loss_trace;
             out["iterations"] = r.iterations;
             out["converged"] = r.converged;
             out["termination"] = to_string(r.reason);
             return out;
           },
           py::arg("y"), py::arg("k"), py::arg("max_iter") = 200, py::arg("tol") = 1e-4)
      .def("refit",
           [](const Design& d, const Eigen::VectorXd& y, const std::vector<std::size_t>& support) {
             const RefitResult r = refit_least_squares(d.view(), y, support);
             py::dict out = model_dict(r.model);
             out["rank_deficient"] = r.rank_deficient;
             out["dropped"] = r.dropped;
             return out;
           },
           py::arg("y"), py::arg("support"))
      .def("cv",
           [](const Design& d, const Eigen::VectorXd& y, std::vector<std::size_t> path,
              std::size_t q, std::uint64_t seed, bool global_stats) {
             const CvPlan plan = make_plan(d.view().n(), q, std::move(path), seed);
             CvOptions options;
             options.standardization =
                 global_stats ? Standardization::kGlobal : Standardization::kTrainingFold;
             CvReport r;
             {
               py::gil_scoped_release release;
               r = cv_iht(d.view(), y, plan, IhtConfig{}, options);
             }
             py::dict out;
             out["path"] = r.path;
             out["mse"] = r.mse;
             out["mean_mse"] = r.mean_mse;
             out["k_best"] = r.k_best;
             out["model"] = model_dict(r.final_model);
             return out;
           },
           py::arg("y"), py::arg("path"), py::arg("q") = 5, py::arg("seed") = 0,
           py::arg("global_stats") = false)
      .def("simulate",
           [](const Design& d, std::size_t k_true, double snr_divisor, double effect_variance,
              double noise_variance, std::uint64_t seed) {
             SimulationSpec spec{k_true, effect_variance, snr_divisor, noise_variance, seed};
             const SimulatedPhenotype sim = simulate_phenotype(d.view(), spec);
             return py::make_tuple(sim.y, model_dict(sim.beta_true));
           },
           py::arg("k_true"), py::arg("snr_divisor") = 1.0, py::arg("effect_variance") = 0.01,
           py::arg("noise_variance") = 0.01, py::arg("seed") = 0)
      .def("heritability",
           [](const Design& d, const std::vector<std::size_t>& support,
              const std::vector<double>& values, const Eigen::VectorXd& y) {
             return heritability(d.view(), d.model(support, values, std::nullopt), y);
           },
           py::arg("support"), py::arg("values"), py::arg("y"));
}
