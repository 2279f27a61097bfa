#pragma once

// Dense complex-matrix substrate: Kronecker products, partial traces,
// Hermitian functional calculus, Uhlmann fidelity and purifications.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cr/error.hpp"

namespace cr {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Ordered tensor-factor dimensions of a composite space. Factor 0 is the
/// most significant one, matching the index order produced by `tensor`.
struct DimShape {
  std::vector<std::size_t> factors;

  DimShape() = default;
  DimShape(std::initializer_list<std::size_t> f) : factors(f) {}
  explicit DimShape(std::vector<std::size_t> f) : factors(std::move(f)) {}

  [[nodiscard]] std::size_t total() const {
    return std::accumulate(factors.begin(), factors.end(), std::size_t{1},
                           std::multiplies<>());
  }
  [[nodiscard]] std::size_t size() const { return factors.size(); }
};

inline CMatrix identity(std::size_t d) {
  return CMatrix::Identity(static_cast<Eigen::Index>(d),
                           static_cast<Eigen::Index>(d));
}

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Largest entrywise deviation from Hermiticity.
inline double hermiticity_residual(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
  return hermiticity_residual(m) <= tol;
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

/// Kronecker product: (a⊗b)[(i,k),(j,l)] = a[i,j]·b[k,l].
inline CMatrix tensor(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename... Rest>
CMatrix tensor(const CMatrix& a, const CMatrix& b, const Rest&... rest) {
  return tensor(tensor(a, b), rest...);
}

inline CMatrix tensor_all(const std::vector<CMatrix>& ms) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (const auto& m : ms) out = tensor(out, m);
  return out;
}

namespace detail {

inline std::vector<std::size_t> digits(std::size_t index, const DimShape& shape) {
  std::vector<std::size_t> d(shape.size());
  for (std::size_t f = shape.size(); f-- > 0;) {
    d[f] = index % shape.factors[f];
    index /= shape.factors[f];
  }
  return d;
}

inline std::size_t undigits(const std::vector<std::size_t>& d,
                            const std::vector<std::size_t>& dims) {
  std::size_t idx = 0;
  for (std::size_t f = 0; f < dims.size(); ++f) idx = idx * dims[f] + d[f];
  return idx;
}

}  // namespace detail

/// Trace out every factor not listed in `keep`. Kept factors retain their
/// relative order.
inline CMatrix partial_trace(const CMatrix& m, const DimShape& shape,
                             std::vector<std::size_t> keep) {
  detail::require_dims(m.rows() == m.cols() &&
                           static_cast<std::size_t>(m.rows()) == shape.total(),
                       "partial_trace: matrix dimension does not match shape");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (auto k : keep)
    detail::require_dims(k < shape.size(), "partial_trace: factor index out of range");

  std::vector<std::size_t> kept_dims, traced_dims, traced;
  for (std::size_t f = 0; f < shape.size(); ++f) {
    if (std::binary_search(keep.begin(), keep.end(), f)) {
      kept_dims.push_back(shape.factors[f]);
    } else {
      traced.push_back(f);
      traced_dims.push_back(shape.factors[f]);
    }
  }
  const std::size_t nk = std::accumulate(kept_dims.begin(), kept_dims.end(),
                                         std::size_t{1}, std::multiplies<>());
  const std::size_t nt = std::accumulate(traced_dims.begin(), traced_dims.end(),
                                         std::size_t{1}, std::multiplies<>());
  // full[k * nt + t] = full index with kept digits k and traced digits t
  std::vector<std::size_t> full(nk * nt);
  for (std::size_t idx = 0; idx < shape.total(); ++idx) {
    const auto d = detail::digits(idx, shape);
    std::vector<std::size_t> dk, dt;
    for (std::size_t f = 0; f < shape.size(); ++f) {
      if (std::binary_search(keep.begin(), keep.end(), f))
        dk.push_back(d[f]);
      else
        dt.push_back(d[f]);
    }
    full[detail::undigits(dk, kept_dims) * nt + detail::undigits(dt, traced_dims)] = idx;
  }
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
  for (std::size_t r = 0; r < nk; ++r)
    for (std::size_t c = 0; c < nk; ++c) {
      Complex s = 0;
      for (std::size_t t = 0; t < nt; ++t)
        s += m(static_cast<Eigen::Index>(full[r * nt + t]),
               static_cast<Eigen::Index>(full[c * nt + t]));
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s;
    }
  return out;
}

/// Reorder tensor factors: output factor f is input factor perm[f].
inline CMatrix permute_factors(const CMatrix& m, const DimShape& shape,
                               const std::vector<std::size_t>& perm) {
  detail::require_dims(static_cast<std::size_t>(m.rows()) == shape.total() &&
                           perm.size() == shape.size(),
                       "permute_factors: shape mismatch");
  std::vector<std::size_t> new_dims(perm.size());
  for (std::size_t f = 0; f < perm.size(); ++f) new_dims[f] = shape.factors[perm[f]];
  std::vector<Eigen::Index> map(shape.total());
  for (std::size_t idx = 0; idx < shape.total(); ++idx) {
    const auto d = detail::digits(idx, shape);
    std::vector<std::size_t> nd(perm.size());
    for (std::size_t f = 0; f < perm.size(); ++f) nd[f] = d[perm[f]];
    map[idx] = static_cast<Eigen::Index>(detail::undigits(nd, new_dims));
  }
  CMatrix out(m.rows(), m.cols());
  const bool square = m.rows() == m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(map[static_cast<std::size_t>(i)], square ? map[static_cast<std::size_t>(j)] : j) =
          m(i, j);
  return out;
}

/// Eigendecomposition of a Hermitian matrix after checking Hermiticity.
inline Eigen::SelfAdjointEigenSolver<CMatrix> hermitian_eigen(const CMatrix& h,
                                                             double herm_tol = 1e-10) {
  detail::require(h.rows() == h.cols(), "matrix is not square");
  const double scale = std::max(1.0, max_abs(h));
  detail::require(hermiticity_residual(h) <= herm_tol * scale, "matrix is not Hermitian");
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(h));
}

/// Apply a real function to the spectrum of a Hermitian matrix.
template <typename F>
CMatrix herm_function(const CMatrix& h, F&& f) {
  const auto es = hermitian_eigen(h);
  RVector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = f(ev(i));
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Principal square root of a PSD matrix. Eigenvalues in [-psd_tol, 0) are
/// clamped to zero.
inline CMatrix herm_sqrt(const CMatrix& h, double psd_tol = 1e-10) {
  const auto es = hermitian_eigen(h);
  RVector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -psd_tol)
      throw PreconditionError("herm_sqrt: eigenvalue " + std::to_string(ev(i)) +
                              " below clamping threshold");
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_eigenvalue(const CMatrix& h) {
  return hermitian_eigen(h, 1e-8).eigenvalues().minCoeff();
}

inline bool is_psd(const CMatrix& h, double tol = 1e-10) {
  return hermiticity_residual(h) <= 1e-8 * std::max(1.0, max_abs(h)) &&
         Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(h), Eigen::EigenvaluesOnly)
                 .eigenvalues()
                 .minCoeff() >= -tol;
}

/// Uhlmann fidelity f(ρ,σ) = Tr√(√ρ σ √ρ), evaluated as the trace norm of
/// √ρ√σ. Not squared.
inline double state_fidelity(const CMatrix& rho, const CMatrix& sigma, double psd_tol = 1e-10) {
  detail::require_dims(rho.rows() == sigma.rows() && rho.cols() == sigma.cols(),
                       "state_fidelity: dimension mismatch");
  const CMatrix a = herm_sqrt(rho, psd_tol);
  const CMatrix b = herm_sqrt(sigma, psd_tol);
  Eigen::JacobiSVD<CMatrix> svd(a * b);
  return std::clamp(svd.singularValues().sum(), 0.0, 1.0);
}

/// Canonical purification: |ψ⟩ = Σ_i √λ_i |v_i⟩⊗|i⟩ with eigenvalues in
/// descending order and each eigenvector's first non-negligible amplitude made
/// real positive. Output lives on dim(ρ)² with ρ's space as factor 0.
inline CVector purify(const CMatrix& rho, double psd_tol = 1e-10) {
  const auto es = hermitian_eigen(rho);
  const auto n = rho.rows();
  CVector psi = CVector::Zero(n * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index src = n - 1 - r;  // eigenvalues arrive ascending
    const double lam = es.eigenvalues()(src);
    if (lam < -psd_tol) throw PreconditionError("purify: input is not PSD");
    if (lam <= 0) continue;
    CVector v = es.eigenvectors().col(src);
    for (Eigen::Index k = 0; k < n; ++k)
      if (std::abs(v(k)) > 1e-12) {
        v *= std::conj(v(k)) / std::abs(v(k));
        break;
      }
    for (Eigen::Index k = 0; k < n; ++k) psi(k * n + r) = std::sqrt(lam) * v(k);
  }
  return psi;
}

/// Purification with the reference system trimmed to the support of ρ
/// (reference dimension = numerical rank). Same conventions as `purify`.
inline CMatrix purify_compact(const CMatrix& rho, double rank_tol = 1e-12) {
  const auto es = hermitian_eigen(rho);
  const auto n = rho.rows();
  std::vector<Eigen::Index> support;
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  for (Eigen::Index r = n; r-- > 0;)
    if (es.eigenvalues()(r) > rank_tol * std::max(1.0, top)) support.push_back(r);
  const auto rank = static_cast<Eigen::Index>(support.size());
  CVector psi = CVector::Zero(n * rank);
  for (Eigen::Index r = 0; r < rank; ++r) {
    CVector v = es.eigenvectors().col(support[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < n; ++k)
      if (std::abs(v(k)) > 1e-12) {
        v *= std::conj(v(k)) / std::abs(v(k));
        break;
      }
    const double lam = es.eigenvalues()(support[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < n; ++k) psi(k * rank + r) = std::sqrt(lam) * v(k);
  }
  return psi;
}

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

inline CVector basis_vector(std::size_t d, std::size_t i) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

inline CMatrix matrix_unit(std::size_t d, std::size_t i, std::size_t j) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

/// Hilbert–Schmidt inner product ⟨X,Y⟩ = Tr(X†Y).
inline Complex hs_inner(const CMatrix& x, const CMatrix& y) {
  return (x.array().conjugate() * y.array()).sum();
}

/// Row-major vectorisation, so that vec(A X B) = (A ⊗ Bᵀ) vec(X).
inline CVector vec(const CMatrix& m) {
  CVector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

inline double frobenius(const CMatrix& m) { return m.norm(); }

/// Orthonormal basis of the null space of `a`, from the SVD, with singular
/// values at or below `tol·max(1, σ_max)` treated as zero.
inline CMatrix null_space(const CMatrix& a, double tol = 1e-10) {
  if (a.rows() == 0) return identity(static_cast<std::size_t>(a.cols()));
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

/// Orthonormal basis of the column space of `a`.
inline CMatrix range_basis(const CMatrix& a, double tol = 1e-10) {
  if (a.cols() == 0) return CMatrix(a.rows(), 0);
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cutoff = tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace cr
