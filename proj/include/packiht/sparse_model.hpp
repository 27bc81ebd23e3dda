#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace packiht {

/// Coefficients split into a sparse genetic block and a dense, unpenalized
/// covariate block. Genetic indices run over [0, p); covariate j is addressed
/// as predictor p + j by the uniform indexing of StandardizedView.
struct SparseModel {
  std::size_t p = 0;                 // genetic predictor count
  std::size_t k = 0;                 // sparsity budget for the genetic block
  std::vector<std::size_t> support;  // ascending, every entry has a nonzero value
  std::vector<double> values;        // aligned with support
  Eigen::VectorXd covariates;        // length c, never projected

  static SparseModel zeros(std::size_t p, std::size_t c, std::size_t k) {
    SparseModel m;
    m.p = p;
    m.k = k;
    m.covariates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c));
    return m;
  }

  std::size_t c() const { return static_cast<std::size_t>(covariates.size()); }
  std::size_t nnz() const { return support.size(); }

  double genetic(std::size_t j) const;

  /// Full P-vector (genetic block followed by covariates).
  Eigen::VectorXd dense() const;

  /// Builds a model from a full P-vector, keeping every nonzero genetic entry.
  static SparseModel from_dense(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                std::size_t p, std::size_t k);

  /// Throws DimensionError when the support/value layout is inconsistent.
  void validate() const;
};

}  // namespace packiht
