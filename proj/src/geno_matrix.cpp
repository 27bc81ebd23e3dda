#include "packiht/geno_matrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "packiht/error.hpp"
#include "packiht/parallel.hpp"

namespace packiht {

namespace {

// Per-byte expansion of four packed genotypes into dosages and a
// non-missing mask, sample order from the least-significant bit pair up.
template <typename T>
struct ByteTables {
  std::array<std::array<T, 4>, 256> dosage{};
  std::array<std::array<T, 4>, 256> observed{};
};

template <typename T>
constexpr ByteTables<T> make_byte_tables() {
  ByteTables<T> t{};
  for (int b = 0; b < 256; ++b) {
    for (int lane = 0; lane < 4; ++lane) {
      const int code = (b >> (2 * lane)) & 3;
      const bool missing = code == static_cast<int>(GenotypeCode::kMissing);
      t.dosage[b][lane] = missing ? T(0) : static_cast<T>(code == 0 ? 0 : code - 1);
      t.observed[b][lane] = missing ? T(0) : T(1);
    }
  }
  return t;
}

constexpr ByteTables<double> kTablesF64 = make_byte_tables<double>();
constexpr ByteTables<float> kTablesF32 = make_byte_tables<float>();

struct CodeCounts {
  std::uint8_t het = 0;
  std::uint8_t hom_a2 = 0;
  std::uint8_t missing = 0;
};

constexpr std::array<CodeCounts, 256> make_count_table() {
  std::array<CodeCounts, 256> t{};
  for (int b = 0; b < 256; ++b) {
    for (int lane = 0; lane < 4; ++lane) {
      switch ((b >> (2 * lane)) & 3) {
        case 1: ++t[b].missing; break;
        case 2: ++t[b].het; break;
        case 3: ++t[b].hom_a2; break;
        default: break;
      }
    }
  }
  return t;
}

constexpr std::array<CodeCounts, 256> kCountTable = make_count_table();

// Standardized value per code for one column, optionally scaled.
std::array<double, 4> standardized_codes(double mean, double precision, double scale = 1.0) {
  return {((0.0 - mean) * precision) * scale, 0.0, ((1.0 - mean) * precision) * scale,
          ((2.0 - mean) * precision) * scale};
}

void compute_stats(std::size_t n, std::size_t p, const std::vector<std::uint8_t>& data,
                   Eigen::VectorXd& u, Eigen::VectorXd& v, int threads) {
  u.resize(static_cast<Eigen::Index>(p));
  v.resize(static_cast<Eigen::Index>(p));
  const std::size_t bpc = packed_bytes(n);
  const std::size_t full_bytes = n / 4;
  parallel_for_chunks(p, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::uint8_t* col = data.data() + j * bpc;
      std::int64_t het = 0, hom = 0, miss = 0;
      for (std::size_t b = 0; b < full_bytes; ++b) {
        const CodeCounts& c = kCountTable[col[b]];
        het += c.het;
        hom += c.hom_a2;
        miss += c.missing;
      }
      for (std::size_t i = full_bytes * 4; i < n; ++i) {
        switch ((col[i / 4] >> (2 * (i % 4))) & 3u) {
          case 1: ++miss; break;
          case 2: ++het; break;
          case 3: ++hom; break;
          default: break;
        }
      }
      const std::int64_t m = static_cast<std::int64_t>(n) - miss;
      const std::int64_t s1 = het + 2 * hom;
      const std::int64_t s2 = het + 4 * hom;
      const auto idx = static_cast<Eigen::Index>(j);
      if (m == 0) {
        u[idx] = 0.0;
        v[idx] = 0.0;
        continue;
      }
      u[idx] = static_cast<double>(s1) / static_cast<double>(m);
      // m * sum((x - mean)^2) in exact integer arithmetic
      const std::int64_t scaled_ss = m * s2 - s1 * s1;
      if (m < 2 || scaled_ss == 0) {
        v[idx] = 0.0;
        continue;
      }
      const double variance =
          static_cast<double>(scaled_ss) / static_cast<double>(m) / static_cast<double>(m - 1);
      v[idx] = 1.0 / std::sqrt(variance);
    }
  });
}

void check_rows(std::span<const std::size_t> rows, std::size_t n) {
  for (std::size_t r : rows) {
    if (r >= n) throw DimensionError("row index " + std::to_string(r) + " out of range");
  }
}

template <typename T>
void aty_packed(const PackedGenotypeMatrix& g, const Eigen::Ref<const Eigen::VectorXd>& r,
                Eigen::VectorXd& out, int threads, const ByteTables<T>& tables) {
  const std::size_t n = g.n();
  const std::size_t bpc = g.bytes_per_column();
  // Residuals padded to a multiple of four so padding lanes multiply zeros.
  std::vector<T> padded(bpc * 4, T(0));
  for (std::size_t i = 0; i < n; ++i) padded[i] = static_cast<T>(r[static_cast<Eigen::Index>(i)]);
  const Eigen::VectorXd& u = g.means();
  const Eigen::VectorXd& v = g.precisions();

  parallel_for_chunks(g.p(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      if (v[idx] == 0.0) {
        out[idx] = 0.0;
        continue;
      }
      const std::uint8_t* col = g.data().data() + j * bpc;
      T dot[4] = {0, 0, 0, 0};
      T obs[4] = {0, 0, 0, 0};
      const T* rr = padded.data();
      for (std::size_t b = 0; b < bpc; ++b, rr += 4) {
        const auto& d = tables.dosage[col[b]];
        const auto& m = tables.observed[col[b]];
        for (int lane = 0; lane < 4; ++lane) {
          dot[lane] += d[lane] * rr[lane];
          obs[lane] += m[lane] * rr[lane];
        }
      }
      const double xr = static_cast<double>((dot[0] + dot[1]) + (dot[2] + dot[3]));
      const double rsum = static_cast<double>((obs[0] + obs[1]) + (obs[2] + obs[3]));
      out[idx] = v[idx] * (xr - u[idx] * rsum);
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// PackedGenotypeMatrix

PackedGenotypeMatrix PackedGenotypeMatrix::from_packed(std::size_t n, std::size_t p,
                                                       std::vector<std::uint8_t> data,
                                                       int threads) {
  if (data.size() != packed_bytes(n) * p) {
    throw DimensionError("packed buffer holds " + std::to_string(data.size()) + " bytes, expected " +
                         std::to_string(packed_bytes(n) * p));
  }
  PackedGenotypeMatrix m;
  m.n_ = n;
  m.p_ = p;
  m.data_ = std::move(data);
  compute_stats(n, p, m.data_, m.u_, m.v_, threads);
  m.build_transpose();
  return m;
}

PackedGenotypeMatrix PackedGenotypeMatrix::from_codes(std::size_t n, std::size_t p,
                                                      std::span<const std::uint8_t> codes,
                                                      int threads) {
  if (codes.size() != n * p) throw DimensionError("code buffer must hold n*p entries");
  const std::size_t bpc = packed_bytes(n);
  std::vector<std::uint8_t> data(bpc * p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t c = codes[j * n + i];
      if (c > 3) throw DimensionError("genotype code out of range");
      data[j * bpc + i / 4] |= static_cast<std::uint8_t>(c << (2 * (i % 4)));
    }
  }
  return from_packed(n, p, std::move(data), threads);
}

void PackedGenotypeMatrix::build_transpose() {
  const std::size_t bpr = bytes_per_row();
  data_t_.assign(bpr * n_, 0);
  for (std::size_t j = 0; j < p_; ++j) {
    const std::size_t byte = j / 4;
    const int shift = static_cast<int>(2 * (j % 4));
    for (std::size_t i = 0; i < n_; ++i) {
      data_t_[i * bpr + byte] |= static_cast<std::uint8_t>(code(i, j) << shift);
    }
  }
}

double PackedGenotypeMatrix::standardized(std::size_t i, std::size_t j) const {
  const auto idx = static_cast<Eigen::Index>(j);
  return standardized_codes(u_[idx], v_[idx])[code(i, j)];
}

PackedGenotypeMatrix PackedGenotypeMatrix::select_rows(std::span<const std::size_t> rows,
                                                       int threads) const {
  check_rows(rows, n_);
  const std::size_t m = rows.size();
  const std::size_t bpc = packed_bytes(m);
  std::vector<std::uint8_t> data(bpc * p_, 0);
  parallel_for_chunks(p_, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      std::uint8_t* dst = data.data() + j * bpc;
      for (std::size_t i = 0; i < m; ++i) {
        dst[i / 4] |= static_cast<std::uint8_t>(code(rows[i], j) << (2 * (i % 4)));
      }
    }
  });
  return from_packed(m, p_, std::move(data), threads);
}

PackedGenotypeMatrix PackedGenotypeMatrix::with_stats(Eigen::VectorXd means,
                                                      Eigen::VectorXd precisions) const {
  if (static_cast<std::size_t>(means.size()) != p_ ||
      static_cast<std::size_t>(precisions.size()) != p_) {
    throw DimensionError("statistics length differs from the variant count");
  }
  PackedGenotypeMatrix m = *this;
  m.u_ = std::move(means);
  m.v_ = std::move(precisions);
  return m;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> column_stats(const PackedGenotypeMatrix& matrix,
                                                         int threads) {
  if (matrix.n() < 2) throw DimensionError("column statistics need at least two samples");
  Eigen::VectorXd u, v;
  compute_stats(matrix.n(), matrix.p(), matrix.data(), u, v, threads);
  return {std::move(u), std::move(v)};
}

// ---------------------------------------------------------------------------
// DenseDesign

DenseDesign DenseDesign::from_packed(const PackedGenotypeMatrix& matrix) {
  DenseDesign d;
  d.values.resize(static_cast<Eigen::Index>(matrix.n()), static_cast<Eigen::Index>(matrix.p()));
  for (std::size_t j = 0; j < matrix.p(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    const auto table = standardized_codes(matrix.means()[idx], matrix.precisions()[idx]);
    for (std::size_t i = 0; i < matrix.n(); ++i) {
      d.values(static_cast<Eigen::Index>(i), idx) = table[matrix.code(i, j)];
    }
  }
  return d;
}

DenseDesign DenseDesign::select_rows(std::span<const std::size_t> rows) const {
  check_rows(rows, n());
  DenseDesign d;
  d.labels = labels;
  d.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// CovariateBlock

CovariateBlock::CovariateBlock(Eigen::MatrixXd raw, std::vector<bool> standardize,
                               std::vector<std::string> names)
    : values_(std::move(raw)), names_(std::move(names)) {
  const auto c = static_cast<std::size_t>(values_.cols());
  if (standardize.size() != c) throw DimensionError("one standardize flag per covariate required");
  if (names_.empty()) {
    for (std::size_t j = 0; j < c; ++j) names_.push_back("cov" + std::to_string(j + 1));
  }
  if (names_.size() != c) throw DimensionError("one name per covariate required");
  const Eigen::Index n = values_.rows();
  for (std::size_t j = 0; j < c; ++j) {
    if (!standardize[j]) continue;
    auto col = values_.col(static_cast<Eigen::Index>(j));
    if (n < 2) throw DimensionError("standardizing a covariate needs at least two samples");
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    if (!(var > 0.0)) {
      throw NumericError("covariate '" + names_[j] + "' is constant and cannot be standardized");
    }
    col = (col.array() - mean) / std::sqrt(var);
  }
}

CovariateBlock CovariateBlock::intercept(std::size_t n) {
  return CovariateBlock(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1), {false},
                        {"intercept"});
}

CovariateBlock CovariateBlock::with_intercept(const Eigen::MatrixXd& raw,
                                              std::vector<std::string> names) {
  Eigen::MatrixXd all(raw.rows(), raw.cols() + 1);
  all.col(0).setOnes();
  all.rightCols(raw.cols()) = raw;
  std::vector<bool> flags(static_cast<std::size_t>(all.cols()), true);
  flags[0] = false;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) names.push_back("cov" + std::to_string(j + 1));
  }
  names.insert(names.begin(), "intercept");
  return CovariateBlock(std::move(all), std::move(flags), std::move(names));
}

CovariateBlock CovariateBlock::select_rows(std::span<const std::size_t> rows) const {
  check_rows(rows, n());
  CovariateBlock out;
  out.names_ = names_;
  out.values_.resize(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values_.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// StandardizedView and kernels

StandardizedView::StandardizedView(const PackedGenotypeMatrix& genotypes,
                                   const CovariateBlock* covariates, KernelOptions options)
    : packed_(&genotypes), covariates_(covariates), options_(options),
      n_(genotypes.n()), p_(genotypes.p()) {
  if (covariates_ && covariates_->n() != n_) {
    throw DimensionError("covariate rows differ from genotype samples");
  }
}

StandardizedView::StandardizedView(const DenseDesign& genotypes, const CovariateBlock* covariates,
                                   KernelOptions options)
    : dense_(&genotypes), covariates_(covariates), options_(options),
      n_(genotypes.n()), p_(genotypes.p()) {
  if (covariates_ && covariates_->n() != n_) {
    throw DimensionError("covariate rows differ from genotype samples");
  }
}

Eigen::VectorXd ax(const StandardizedView& view, const SparseModel& beta) {
  beta.validate();
  if (beta.p != view.p()) throw DimensionError("model genetic size differs from the view");
  if (beta.c() != view.c() && beta.c() != 0) {
    throw DimensionError("model covariate count differs from the view");
  }
  const std::size_t n = view.n();
  const std::size_t k = beta.support.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));

  const PackedGenotypeMatrix* packed = view.packed();
  std::vector<std::array<double, 4>> tables;
  if (packed) {
    tables.reserve(k);
    for (std::size_t s = 0; s < k; ++s) {
      const auto j = static_cast<Eigen::Index>(beta.support[s]);
      tables.push_back(
          standardized_codes(packed->means()[j], packed->precisions()[j], 1.0));
    }
  }
  const DenseDesign* dense = view.dense();
  const CovariateBlock* cov = beta.c() > 0 ? view.covariates() : nullptr;

  parallel_for_chunks(n, view.options().threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double acc = 0.0;
      if (packed) {
        for (std::size_t s = 0; s < k; ++s) {
          acc += tables[s][packed->code_t(i, beta.support[s])] * beta.values[s];
        }
      } else {
        for (std::size_t s = 0; s < k; ++s) {
          acc += dense->values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(beta.support[s])) *
                 beta.values[s];
        }
      }
      if (cov) {
        for (Eigen::Index c = 0; c < beta.covariates.size(); ++c) {
          acc += cov->values()(static_cast<Eigen::Index>(i), c) * beta.covariates[c];
        }
      }
      out[static_cast<Eigen::Index>(i)] = acc;
    }
  });
  return out;
}

Eigen::VectorXd aty(const StandardizedView& view, const Eigen::Ref<const Eigen::VectorXd>& r) {
  if (static_cast<std::size_t>(r.size()) != view.n()) {
    throw DimensionError("residual length " + std::to_string(r.size()) + " differs from n = " +
                         std::to_string(view.n()));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(view.total()));
  const int threads = view.options().threads;
  if (const PackedGenotypeMatrix* packed = view.packed()) {
    if (view.options().precision == Precision::kSingle) {
      aty_packed<float>(*packed, r, out, threads, kTablesF32);
    } else {
      aty_packed<double>(*packed, r, out, threads, kTablesF64);
    }
  } else {
    const DenseDesign& dense = *view.dense();
    parallel_for_chunks(view.p(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        const auto idx = static_cast<Eigen::Index>(j);
        out[idx] = dense.values.col(idx).dot(r);
      }
    });
  }
  if (const CovariateBlock* cov = view.covariates()) {
    out.tail(static_cast<Eigen::Index>(cov->c())) = cov->values().transpose() * r;
  }
  return out;
}

Eigen::MatrixXd decompress_active(const StandardizedView& view,
                                  std::span<const std::size_t> support) {
  std::vector<std::size_t> sorted(support.begin(), support.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DimensionError("support contains duplicate indices");
  }
  if (!sorted.empty() && sorted.back() >= view.total()) {
    throw DimensionError("predictor index " + std::to_string(sorted.back()) + " out of range");
  }
  const auto n = static_cast<Eigen::Index>(view.n());
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(sorted.size()));
  parallel_for_chunks(sorted.size(), view.options().threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const std::size_t j = sorted[s];
      auto dst = out.col(static_cast<Eigen::Index>(s));
      if (j >= view.p()) {
        dst = view.covariates()->values().col(static_cast<Eigen::Index>(j - view.p()));
      } else if (const PackedGenotypeMatrix* packed = view.packed()) {
        const auto idx = static_cast<Eigen::Index>(j);
        const auto table = standardized_codes(packed->means()[idx], packed->precisions()[idx]);
        const std::uint8_t* col = packed->column_bytes(j).data();
        for (Eigen::Index i = 0; i < n; ++i) {
          dst[i] = table[(col[i / 4] >> (2 * (i % 4))) & 3u];
        }
      } else {
        dst = view.dense()->values.col(static_cast<Eigen::Index>(j));
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// DesignSubset

DesignSubset DesignSubset::select(const StandardizedView& view, std::span<const std::size_t> rows,
                                  const PackedGenotypeMatrix* stats_from) {
  DesignSubset out;
  out.options_ = view.options();
  const int threads = view.options().threads;
  if (const PackedGenotypeMatrix* packed = view.packed()) {
    PackedGenotypeMatrix sub = packed->select_rows(rows, threads);
    if (stats_from) sub = sub.with_stats(stats_from->means(), stats_from->precisions());
    out.packed_ = std::move(sub);
  } else {
    out.dense_ = view.dense()->select_rows(rows);
  }
  if (view.covariates()) out.covariates_ = view.covariates()->select_rows(rows);
  return out;
}

StandardizedView DesignSubset::view() const {
  const CovariateBlock* cov = covariates_ ? &*covariates_ : nullptr;
  if (packed_) return StandardizedView(*packed_, cov, options_);
  if (dense_) return StandardizedView(*dense_, cov, options_);
  throw DimensionError("empty design subset");
}

}  // namespace packiht
