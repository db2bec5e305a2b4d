#include "rismimo/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

std::string shape(const CMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

// Hestenes one-sided Jacobi on a tall matrix (rows >= cols).
SvdFactors svd_tall(const CMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  CMatrix w = a;
  CMatrix v = CMatrix::identity(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_sweeps = 80;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0;
        double beta = 0.0;
        cdouble gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += std::norm(w(i, p));
          beta += std::norm(w(i, q));
          gamma += std::conj(w(i, p)) * w(i, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        // After rotating column q by conj(phase), a_p^H a_q is real and the
        // classical real Jacobi rotation applies.
        const cdouble phase_conj = std::conj(gamma / g);
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const cdouble wp = w(i, p);
          const cdouble wq = w(i, q) * phase_conj;
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const cdouble vp = v(i, p);
          const cdouble vq = v(i, q) * phase_conj;
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::norm(w(i, j));
    norms[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdFactors out{CMatrix(m, n), std::vector<double>(n), CMatrix(n, n)};
  const double cutoff = n > 0 ? static_cast<double>(m) * eps * norms[order[0]] : 0.0;
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < n; ++i) out.V(i, k) = v(i, j);
    if (norms[j] > cutoff && norms[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.U(i, k) = w(i, j) / norms[j];
      filled[k] = true;
    }
  }
  // Null-space columns of U: Gram-Schmidt over the standard basis.
  std::size_t basis = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    out.sigma[k] = 0.0;
    while (basis < m) {
      CVector cand(m, 0.0);
      cand[basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < n; ++o) {
          if (!filled[o]) continue;
          cdouble dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += std::conj(out.U(i, o)) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * out.U(i, o);
        }
      }
      double nrm = 0.0;
      for (const auto& z : cand) nrm += std::norm(z);
      nrm = std::sqrt(nrm);
      if (nrm > 1e-6) {
        for (std::size_t i = 0; i < m; ++i) out.U(i, k) = cand[i] / nrm;
        filled[k] = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cdouble{0.0, 0.0}) {}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("CMatrix: " + std::to_string(data_.size()) + " entries for shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cdouble>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("CMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

CMatrix CMatrix::diagonal(std::span<const cdouble> d) {
  CMatrix out(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = d[i];
  return out;
}

CMatrix CMatrix::column_block(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("column_block out of range");
  CMatrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

bool CMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](const cdouble& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a) + " times " + shape(b));
  }
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cdouble aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

CVector matvec(const CMatrix& a, std::span<const cdouble> x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec: " + shape(a) + " times vector of " + std::to_string(x.size()));
  }
  CVector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) out[i] += a(i, k) * x[k];
  return out;
}

CMatrix hermitian(const CMatrix& a) {
  CMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

CMatrix add(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: " + shape(a) + " plus " + shape(b));
  }
  CMatrix out = a;
  auto o = out.entries();
  auto bb = b.entries();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bb[i];
  return out;
}

CMatrix scale(const CMatrix& a, cdouble s) {
  CMatrix out = a;
  for (auto& z : out.entries()) z *= s;
  return out;
}

double frobenius_norm(const CMatrix& a) {
  double acc = 0.0;
  for (const auto& z : a.entries()) acc += std::norm(z);
  return std::sqrt(acc);
}

cdouble trace(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("trace of non-square " + shape(a));
  cdouble acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

SvdFactors svd(const CMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw DimensionError("svd of empty matrix");
  if (!a.all_finite()) throw DomainError("svd: non-finite entry");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdFactors t = svd_tall(hermitian(a));
  return SvdFactors{std::move(t.V), std::move(t.sigma), std::move(t.U)};
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff: " + shape(a) + " vs " + shape(b));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
  return worst;
}

}  // namespace rismimo
