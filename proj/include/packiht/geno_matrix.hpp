#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "packiht/sparse_model.hpp"

namespace packiht {

/// PLINK 2-bit genotype codes. The numeric dosage is the A2 allele count.
enum class GenotypeCode : std::uint8_t {
  kHomA1 = 0b00,
  kMissing = 0b01,
  kHet = 0b10,
  kHomA2 = 0b11,
};

inline constexpr std::size_t packed_bytes(std::size_t entries) { return (entries + 3) / 4; }

/// Dosage for a non-missing code; the missing code maps to 0 here and must be
/// masked by the caller.
inline constexpr double code_dosage(std::uint8_t code) {
  constexpr double table[4] = {0.0, 0.0, 1.0, 2.0};
  return table[code & 3u];
}

/// Genotypes packed four per byte, stored both variant-major (columns of X)
/// and sample-major (columns of X^T), with cached column means and precisions.
/// Immutable after construction.
class PackedGenotypeMatrix {
 public:
  PackedGenotypeMatrix() = default;

  /// Takes ownership of a variant-major buffer laid out exactly like a BED
  /// body: p blocks of ceil(n/4) bytes. Padding bits are kept verbatim.
  static PackedGenotypeMatrix from_packed(std::size_t n, std::size_t p,
                                          std::vector<std::uint8_t> data, int threads = 1);

  /// Builds from unpacked codes (column-major, n*p entries, each in 0..3).
  static PackedGenotypeMatrix from_codes(std::size_t n, std::size_t p,
                                         std::span<const std::uint8_t> codes, int threads = 1);

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  std::size_t bytes_per_column() const { return packed_bytes(n_); }
  std::size_t bytes_per_row() const { return packed_bytes(p_); }

  std::uint8_t code(std::size_t i, std::size_t j) const {
    return (data_[j * bytes_per_column() + i / 4] >> (2 * (i % 4))) & 3u;
  }
  std::uint8_t code_t(std::size_t i, std::size_t j) const {
    return (data_t_[i * bytes_per_row() + j / 4] >> (2 * (j % 4))) & 3u;
  }

  std::span<const std::uint8_t> column_bytes(std::size_t j) const {
    return {data_.data() + j * bytes_per_column(), bytes_per_column()};
  }
  std::span<const std::uint8_t> row_bytes(std::size_t i) const {
    return {data_t_.data() + i * bytes_per_row(), bytes_per_row()};
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  const std::vector<std::uint8_t>& data_t() const { return data_t_; }
  const Eigen::VectorXd& means() const { return u_; }
  const Eigen::VectorXd& precisions() const { return v_; }

  /// Standardized value of entry (i, j): (x - u_j) * v_j, or 0 when missing.
  double standardized(std::size_t i, std::size_t j) const;

  /// Row subset in the given order; statistics are recomputed on the subset.
  PackedGenotypeMatrix select_rows(std::span<const std::size_t> rows, int threads = 1) const;

  /// Copy that standardizes with externally supplied statistics (e.g. a
  /// training fold's), instead of its own.
  PackedGenotypeMatrix with_stats(Eigen::VectorXd means, Eigen::VectorXd precisions) const;

  /// Bytes held by one packed orientation (excluding the transpose and stats).
  std::size_t storage_bytes() const { return data_.size(); }

 private:
  void build_transpose();

  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<std::uint8_t> data_;
  std::vector<std::uint8_t> data_t_;
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
};

/// Per-column mean and inverse sample standard deviation (n - 1 denominator)
/// over non-missing entries. Columns with fewer than two observations or zero
/// spread get v = 0; all-missing columns get u = 0.
std::pair<Eigen::VectorXd, Eigen::VectorXd> column_stats(const PackedGenotypeMatrix& matrix,
                                                         int threads = 1);

/// Uncompressed, pre-standardized genotype design. This is the floating point
/// comparison path and the correctness reference for the packed kernels.
struct DenseDesign {
  Eigen::MatrixXd values;  // n x p, column-major
  std::vector<std::string> labels;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(values.cols()); }

  static DenseDesign from_packed(const PackedGenotypeMatrix& matrix);
  DenseDesign select_rows(std::span<const std::size_t> rows) const;
};

/// Nongenetic covariates. Flagged columns are standardized once at
/// construction; an all-ones intercept column is never standardized.
class CovariateBlock {
 public:
  CovariateBlock() = default;
  CovariateBlock(Eigen::MatrixXd raw, std::vector<bool> standardize,
                 std::vector<std::string> names);

  static CovariateBlock intercept(std::size_t n);

  /// Prepends an intercept column to `raw` and standardizes every other column.
  static CovariateBlock with_intercept(const Eigen::MatrixXd& raw, std::vector<std::string> names);

  std::size_t n() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t c() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }

  CovariateBlock select_rows(std::span<const std::size_t> rows) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

enum class Precision { kDouble, kSingle };

struct KernelOptions {
  int threads = 1;
  Precision precision = Precision::kDouble;
};

/// Uniform indexing over genetic predictors [0, p) followed by covariates
/// [p, p + c). Non-owning: the referenced data must outlive the view.
class StandardizedView {
 public:
  explicit StandardizedView(const PackedGenotypeMatrix& genotypes,
                            const CovariateBlock* covariates = nullptr, KernelOptions options = {});
  explicit StandardizedView(const DenseDesign& genotypes, const CovariateBlock* covariates = nullptr,
                            KernelOptions options = {});

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  std::size_t c() const { return covariates_ ? covariates_->c() : 0; }
  std::size_t total() const { return p_ + c(); }

  const PackedGenotypeMatrix* packed() const { return packed_; }
  const DenseDesign* dense() const { return dense_; }
  const CovariateBlock* covariates() const { return covariates_; }
  const KernelOptions& options() const { return options_; }

  StandardizedView with_options(KernelOptions options) const {
    StandardizedView copy = *this;
    copy.options_ = options;
    return copy;
  }

 private:
  const PackedGenotypeMatrix* packed_ = nullptr;
  const DenseDesign* dense_ = nullptr;
  const CovariateBlock* covariates_ = nullptr;
  KernelOptions options_;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
};

/// X_st * beta_genetic + C * beta_cov. Only the active genetic columns are
/// touched. Rows are split across workers, so the result does not depend on
/// the thread count.
Eigen::VectorXd ax(const StandardizedView& view, const SparseModel& beta);

/// [X_st^T r ; C^T r], standardized on the fly. Columns are split across
/// workers, each writing a disjoint slice of the output.
Eigen::VectorXd aty(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& r);

/// Dense standardized columns for predictor indices in `support` (genetic or
/// covariate), in ascending index order.
Eigen::MatrixXd decompress_active(const StandardizedView& view,
                                  std::span<const std::size_t> support);

/// Owns a row subset of a design and hands out views over it.
class DesignSubset {
 public:
  DesignSubset() = default;

  /// Rows of `view` in the given order. With `stats_from` set, the packed
  /// subset is standardized with those statistics; otherwise they are
  /// recomputed from the selected rows. Dense designs are already
  /// standardized and ignore `stats_from`.
  static DesignSubset select(const StandardizedView& view, std::span<const std::size_t> rows,
                             const PackedGenotypeMatrix* stats_from);

  StandardizedView view() const;
  const PackedGenotypeMatrix* packed() const { return packed_ ? &*packed_ : nullptr; }

 private:
  std::optional<PackedGenotypeMatrix> packed_;
  std::optional<DenseDesign> dense_;
  std::optional<CovariateBlock> covariates_;
  KernelOptions options_;
};

}  // namespace packiht
