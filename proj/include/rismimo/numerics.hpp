#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rismimo {

using cdouble = std::complex<double>;

/// Dense complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries);
  /// Row-wise literal, e.g. CMatrix{{1, 2}, {3, 4}}.
  CMatrix(std::initializer_list<std::initializer_list<cdouble>> rows);

  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(std::span<const cdouble> d);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  cdouble& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const cdouble& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  [[nodiscard]] std::span<const cdouble> entries() const noexcept { return data_; }
  [[nodiscard]] std::span<cdouble> entries() noexcept { return data_; }

  [[nodiscard]] CMatrix column_block(std::size_t first, std::size_t count) const;
  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cdouble> data_;
};

using CVector = std::vector<cdouble>;

/// Thin singular value decomposition A = U diag(sigma) V^H with
/// r = min(rows, cols): U is rows x r, V is cols x r, both with orthonormal
/// columns, sigma non-increasing and non-negative.
struct SvdFactors {
  CMatrix U;
  std::vector<double> sigma;
  CMatrix V;
};

CMatrix matmul(const CMatrix& a, const CMatrix& b);
CVector matvec(const CMatrix& a, std::span<const cdouble> x);
CMatrix hermitian(const CMatrix& a);
CMatrix add(const CMatrix& a, const CMatrix& b);
CMatrix scale(const CMatrix& a, cdouble s);
double frobenius_norm(const CMatrix& a);
cdouble trace(const CMatrix& a);

/// One-sided (Hestenes) Jacobi SVD. Throws DomainError on non-finite input.
SvdFactors svd(const CMatrix& a);

/// Largest |a_ij - b_ij|; DimensionError if shapes differ.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

}  // namespace rismimo
