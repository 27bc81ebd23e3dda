#include "packiht/sparse_model.hpp"

#include <algorithm>
#include <string>

#include "packiht/error.hpp"

namespace packiht {

double SparseModel::genetic(std::size_t j) const {
  auto it = std::lower_bound(support.begin(), support.end(), j);
  if (it == support.end() || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - support.begin())];
}

Eigen::VectorXd SparseModel::dense() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + c()));
  for (std::size_t s = 0; s < support.size(); ++s) out[static_cast<Eigen::Index>(support[s])] = values[s];
  out.tail(covariates.size()) = covariates;
  return out;
}

SparseModel SparseModel::from_dense(const Eigen::Ref<const Eigen::VectorXd>& beta, std::size_t p,
                                    std::size_t k) {
  if (static_cast<std::size_t>(beta.size()) < p) {
    throw DimensionError("coefficient vector shorter than the genetic block");
  }
  SparseModel m;
  m.p = p;
  m.k = k;
  for (std::size_t j = 0; j < p; ++j) {
    const double b = beta[static_cast<Eigen::Index>(j)];
    if (b != 0.0) {
      m.support.push_back(j);
      m.values.push_back(b);
    }
  }
  m.covariates = beta.tail(beta.size() - static_cast<Eigen::Index>(p));
  return m;
}

void SparseModel::validate() const {
  if (support.size() != values.size()) {
    throw DimensionError("support and values differ in length");
  }
  for (std::size_t s = 0; s < support.size(); ++s) {
    if (support[s] >= p) {
      throw DimensionError("support index " + std::to_string(support[s]) + " out of range");
    }
    if (s > 0 && support[s] <= support[s - 1]) {
      throw DimensionError("support is not strictly ascending");
    }
  }
}

}  // namespace packiht
