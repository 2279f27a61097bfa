#pragma once

// Finite-dimensional †-algebras given by Hilbert–Schmidt-orthonormal bases:
// generation, commutants, centres, Wedderburn block structure and the
// conditional expectation onto an algebra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cr/channel.hpp"
#include "cr/matrix.hpp"
#include "cr/random.hpp"

namespace cr {

inline constexpr std::uint64_t kSectorSeed = 0x5EC7042;

/// A linear span of d×d matrices with an HS-orthonormal basis. The algebra
/// operations below only produce spans that are unital †-algebras; `from_span`
/// builds arbitrary spans (use `closure_residuals` to check).
class AlgebraBasis {
 public:
  AlgebraBasis() = default;

  /// Orthonormalise `elems` by modified Gram–Schmidt, dropping any element
  /// whose residual norm is ≤ drop_tol·max(1, ‖x‖).
  static AlgebraBasis from_span(const std::vector<CMatrix>& elems, std::size_t ambient_dim,
                                double drop_tol = 1e-10) {
    AlgebraBasis a;
    a.ambient_ = ambient_dim;
    a.frame_ = CMatrix(static_cast<Eigen::Index>(ambient_dim * ambient_dim), 0);
    a.extend(elems, drop_tol);
    return a;
  }

  static AlgebraBasis full(std::size_t d) {
    std::vector<CMatrix> units;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) units.push_back(matrix_unit(d, i, j));
    return from_span(units, d);
  }

  static AlgebraBasis scalars(std::size_t d) { return from_span({cr::identity(d)}, d); }

  [[nodiscard]] std::size_t ambient_dim() const { return ambient_; }
  [[nodiscard]] std::size_t dim() const { return basis_.size(); }
  [[nodiscard]] const std::vector<CMatrix>& basis() const { return basis_; }
  /// Basis elements as row-major vec columns (d² × dim).
  [[nodiscard]] const CMatrix& frame() const { return frame_; }

  /// Orthogonal projection of X onto the span.
  [[nodiscard]] CMatrix project(const CMatrix& x) const {
    check_dim(x);
    const auto d = static_cast<Eigen::Index>(ambient_);
    if (basis_.empty()) return CMatrix::Zero(d, d);
    const CVector v = vec(x);
    return unvec(frame_ * (frame_.adjoint() * v), d, d);
  }

  [[nodiscard]] double projection_residual(const CMatrix& x) const {
    return (x - project(x)).norm();
  }

  /// Membership: projection residual ≤ tol·max(1, ‖X‖_F).
  [[nodiscard]] bool contains(const CMatrix& x, double tol = 1e-9) const {
    return projection_residual(x) <= tol * std::max(1.0, x.norm());
  }

  /// Append elements (Gram–Schmidt against the current basis). Returns the
  /// number of new basis elements.
  std::size_t extend(const std::vector<CMatrix>& elems, double drop_tol = 1e-10) {
    std::size_t added = 0;
    for (const auto& x : elems) {
      check_dim(x);
      const double scale = std::max(1.0, x.norm());
      CVector v = vec(x);
      // two passes of modified Gram–Schmidt for stability
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index k = 0; k < frame_.cols(); ++k) v -= frame_.col(k) * frame_.col(k).dot(v);
      const double nv = v.norm();
      if (nv <= drop_tol * scale) continue;
      v /= nv;
      frame_.conservativeResize(Eigen::NoChange, frame_.cols() + 1);
      frame_.col(frame_.cols() - 1) = v;
      basis_.push_back(unvec(v, static_cast<Eigen::Index>(ambient_), static_cast<Eigen::Index>(ambient_)));
      ++added;
    }
    return added;
  }

 private:
  void check_dim(const CMatrix& x) const {
    detail::require_dims(static_cast<std::size_t>(x.rows()) == ambient_ &&
                             static_cast<std::size_t>(x.cols()) == ambient_,
                         "AlgebraBasis: operand dimension does not match ambient dimension");
  }

  std::size_t ambient_ = 0;
  std::vector<CMatrix> basis_;
  CMatrix frame_;
};

struct ClosureResiduals {
  double adjoint = 0.0;   // max over basis of ‖X† − P(X†)‖
  double product = 0.0;   // max over pairs of ‖XY − P(XY)‖
  double identity = 0.0;  // ‖1 − P(1)‖
  [[nodiscard]] bool ok(double tol = 1e-9) const {
    return adjoint <= tol && product <= tol && identity <= tol;
  }
};

inline ClosureResiduals closure_residuals(const AlgebraBasis& a) {
  ClosureResiduals r;
  for (const auto& x : a.basis()) {
    r.adjoint = std::max(r.adjoint, a.projection_residual(x.adjoint()));
    for (const auto& y : a.basis()) r.product = std::max(r.product, a.projection_residual(x * y));
  }
  r.identity = a.projection_residual(identity(a.ambient_dim()));
  return r;
}

/// Span of `elems` checked to be a unital †-algebra. Non-unital algebras
/// (identity a smaller projector) are rejected.
inline AlgebraBasis checked_algebra(const std::vector<CMatrix>& elems, std::size_t ambient_dim, double tol = 1e-9) {
  for (const auto& x : elems)
    detail::require_dims(static_cast<std::size_t>(x.rows()) == ambient_dim && x.rows() == x.cols(),
                         "checked_algebra: element dimension mismatch");
  AlgebraBasis a = AlgebraBasis::from_span(elems, ambient_dim);
  const ClosureResiduals r = closure_residuals(a);
  detail::require(r.identity <= tol, "checked_algebra: span does not contain the identity");
  detail::require(r.adjoint <= tol, "checked_algebra: span is not closed under adjoints");
  detail::require(r.product <= tol, "checked_algebra: span is not closed under products");
  return a;
}

/// Smallest unital †-algebra containing the generators: the span of all words
/// in generators and their adjoints, built by left multiplication until the
/// span stops growing.
inline AlgebraBasis generate_algebra(const std::vector<CMatrix>& generators, std::size_t ambient_dim) {
  for (const auto& g : generators)
    detail::require_dims(static_cast<std::size_t>(g.rows()) == ambient_dim && g.rows() == g.cols(),
                         "generate_algebra: generator dimension mismatch");
  std::vector<CMatrix> gens;
  for (const auto& g : generators) {
    if (g.norm() <= 1e-14) continue;
    gens.push_back(g);
    if (!is_hermitian(g, 1e-14 * std::max(1.0, g.norm()))) gens.push_back(g.adjoint());
  }
  AlgebraBasis a = AlgebraBasis::from_span({identity(ambient_dim)}, ambient_dim);
  std::size_t frontier_begin = 0;
  while (frontier_begin < a.dim()) {
    const std::size_t frontier_end = a.dim();
    std::vector<CMatrix> candidates;
    for (std::size_t k = frontier_begin; k < frontier_end; ++k)
      for (const auto& g : gens) candidates.push_back(g * a.basis()[k]);
    frontier_begin = frontier_end;
    a.extend(candidates);
  }
  return a;
}

/// Orthonormal basis of the common null space of X ↦ [A,X] over the basis.
inline AlgebraBasis commutant(const AlgebraBasis& a) {
  const std::size_t d = a.ambient_dim();
  const auto dd = static_cast<Eigen::Index>(d * d);
  const CMatrix id = identity(d);
  // Gram matrix Σ_k L_k† L_k of the commutator maps L_k = A_k⊗1 − 1⊗A_kᵀ.
  CMatrix gram = CMatrix::Zero(dd, dd);
  CMatrix left = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  CMatrix right = left;
  for (const auto& x : a.basis()) {
    left += x.adjoint() * x;
    right += (x * x.adjoint()).transpose();
    const CMatrix cross = tensor(x.adjoint(), x.transpose());
    gram -= cross + cross.adjoint();
  }
  gram += tensor(left, id) + tensor(id, right);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(gram));
  const double cutoff = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
  std::vector<CMatrix> elems;
  for (Eigen::Index k = 0; k < dd; ++k)
    if (es.eigenvalues()(k) <= cutoff)
      elems.push_back(unvec(es.eigenvectors().col(k), static_cast<Eigen::Index>(d),
                            static_cast<Eigen::Index>(d)));
  return AlgebraBasis::from_span(elems, d);
}

/// Intersection of two spans: directions with principal-angle cosine
/// ≥ 1 − tol.
inline AlgebraBasis intersect(const AlgebraBasis& a, const AlgebraBasis& b, double tol = 1e-9) {
  detail::require_dims(a.ambient_dim() == b.ambient_dim(), "intersect: ambient dimension mismatch");
  const std::size_t d = a.ambient_dim();
  if (a.dim() == 0 || b.dim() == 0) return AlgebraBasis::from_span({}, d);
  Eigen::JacobiSVD<CMatrix> svd(a.frame().adjoint() * b.frame(), Eigen::ComputeFullU);
  std::vector<CMatrix> elems;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) >= 1.0 - tol)
      elems.push_back(unvec(a.frame() * svd.matrixU().col(k), static_cast<Eigen::Index>(d),
                            static_cast<Eigen::Index>(d)));
  return AlgebraBasis::from_span(elems, d);
}

/// Algebra generated by the union of both bases.
inline AlgebraBasis join(const AlgebraBasis& a, const AlgebraBasis& b) {
  detail::require_dims(a.ambient_dim() == b.ambient_dim(), "join: ambient dimension mismatch");
  std::vector<CMatrix> gens = a.basis();
  gens.insert(gens.end(), b.basis().begin(), b.basis().end());
  return generate_algebra(gens, a.ambient_dim());
}

inline bool contains(const AlgebraBasis& a, const CMatrix& x, double tol = 1e-9) {
  return a.contains(x, tol);
}

/// Every basis element of `sub` lies in `sup`.
inline bool is_subalgebra(const AlgebraBasis& sub, const AlgebraBasis& sup, double tol = 1e-9) {
  detail::require_dims(sub.ambient_dim() == sup.ambient_dim(), "is_subalgebra: ambient dimension mismatch");
  return std::all_of(sub.basis().begin(), sub.basis().end(),
                     [&](const CMatrix& x) { return sup.contains(x, tol); });
}

/// Largest principal angle between the spans (π/2 if dimensions differ).
inline double max_principal_angle(const AlgebraBasis& a, const AlgebraBasis& b) {
  detail::require_dims(a.ambient_dim() == b.ambient_dim(), "max_principal_angle: ambient dimension mismatch");
  if (a.dim() != b.dim()) return M_PI / 2;
  if (a.dim() == 0) return 0.0;
  const CMatrix residual = b.frame() - a.frame() * (a.frame().adjoint() * b.frame());
  Eigen::JacobiSVD<CMatrix> svd(residual);
  return std::asin(std::min(1.0, svd.singularValues()(0)));
}

inline bool same_span(const AlgebraBasis& a, const AlgebraBasis& b, double tol = 1e-7) {
  return max_principal_angle(a, b) <= tol;
}

inline AlgebraBasis center(const AlgebraBasis& a) { return intersect(a, commutant(a)); }

/// Commutant of `b` inside `ambient`: b′ ∩ ambient.
inline AlgebraBasis relative_commutant(const AlgebraBasis& b, const AlgebraBasis& ambient) {
  detail::require(is_subalgebra(b, ambient, 1e-8), "relative_commutant: algebra is not contained in ambient");
  return intersect(commutant(b), ambient);
}

namespace detail {

inline CMatrix random_hermitian_element(const std::vector<CMatrix>& basis, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix h = CMatrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& x : basis) {
    h += g(rng) * hermitian_part(x);
    h += g(rng) * hermitian_part(Complex(0, 1) * x);
  }
  return hermitian_part(h);
}

/// Eigenvalue clusters (index ranges into the ascending spectrum). Throws
/// when two clusters are separated by less than 10×tol.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> cluster_spectrum(const RVector& ev, double tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;
  Eigen::Index start = 0;
  for (Eigen::Index k = 1; k <= ev.size(); ++k) {
    if (k == ev.size() || ev(k) - ev(k - 1) > tol) {
      if (k < ev.size() && ev(k) - ev(k - 1) <= 10 * tol)
        throw NumericalError("degenerate split: eigenvalue clusters closer than 10x tolerance");
      clusters.emplace_back(start, k);
      start = k;
    }
  }
  return clusters;
}

}  // namespace detail

/// Minimal projectors of the centre, ordered by descending rank; ties are
/// ordered by ascending Tr(P·diag(0,1,…,d−1)).
inline std::vector<CMatrix> minimal_central_projectors(const AlgebraBasis& a,
                                                       std::uint64_t seed = kSectorSeed) {
  const std::size_t d = a.ambient_dim();
  const AlgebraBasis z = center(a);
  if (z.dim() <= 1) return {identity(d)};
  Rng rng(seed);
  std::vector<CMatrix> projectors;
  for (int attempt = 0;; ++attempt) {
    const CMatrix h = detail::random_hermitian_element(z.basis(), rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    try {
      const auto clusters = detail::cluster_spectrum(es.eigenvalues(), 1e-8);
      projectors.clear();
      for (const auto& [lo, hi] : clusters) {
        const CMatrix v = es.eigenvectors().middleCols(lo, hi - lo);
        projectors.push_back(v * v.adjoint());
      }
    } catch (const NumericalError&) {
      if (attempt >= 4) throw;
      continue;
    }
    if (projectors.size() == z.dim()) break;
    if (attempt >= 4) throw NumericalError("minimal_central_projectors: centre not split by random element");
  }
  RVector ref(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = static_cast<double>(i);
  auto key = [&](const CMatrix& p) {
    return std::pair{-std::round(p.trace().real()), (p.diagonal().real().array() * ref.array()).sum()};
  };
  std::sort(projectors.begin(), projectors.end(),
            [&](const CMatrix& x, const CMatrix& y) { return key(x) < key(y); });
  return projectors;
}

struct Sector {
  CMatrix projector;
  std::size_t left_dim = 0;   // n_i
  std::size_t right_dim = 0;  // m_i
  CMatrix isometry;           // (n_i·m_i) × d, rows span range(P_i)
};

/// Wedderburn decomposition 𝒜 = ⊕ U_i†(𝒜_i ⊗ 1_{m_i})U_i.
struct BlockStructure {
  std::vector<Sector> sectors;

  /// Restriction of X to sector i in factorised coordinates: U_i X U_i†.
  [[nodiscard]] CMatrix sector_block(std::size_t i, const CMatrix& x) const {
    return sectors.at(i).isometry * x * sectors.at(i).isometry.adjoint();
  }
};

/// Conjugated basis elements must factor as A_i ⊗ 1 within this residual.
inline constexpr double kFactorizationTol = 1e-8;

inline BlockStructure block_structure(const AlgebraBasis& a, std::uint64_t seed = kSectorSeed) {
  const std::size_t d = a.ambient_dim();
  BlockStructure bs;
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  for (const auto& p : minimal_central_projectors(a, seed)) {
    const CMatrix q = range_basis(p, 1e-8);  // d × r
    const Eigen::Index r = q.cols();
    std::vector<CMatrix> restricted;
    for (const auto& x : a.basis()) restricted.push_back(q.adjoint() * x * q);
    const AlgebraBasis local = AlgebraBasis::from_span(restricted, static_cast<std::size_t>(r));
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(local.dim()))));
    if (n * n != static_cast<Eigen::Index>(local.dim()) || r % n != 0)
      throw NumericalError("block_structure: sector algebra is not a full matrix factor");
    const Eigen::Index m = r / n;

    // The eigenspace of a generic Hermitian element for one eigenvalue is the
    // range of a minimal projector e⊗1_m; its orthonormal basis φ_j fixes the
    // right factor and algebra elements T_k with T_kφ_1 orthonormal fix the left.
    const CMatrix h = detail::random_hermitian_element(local.basis(), rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CMatrix phi = es.eigenvectors().leftCols(m);
    CMatrix images(r, static_cast<Eigen::Index>(local.dim()));
    for (std::size_t l = 0; l < local.dim(); ++l)
      images.col(static_cast<Eigen::Index>(l)) = local.basis()[l] * phi.col(0);
    Eigen::JacobiSVD<CMatrix> svd(images, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().size() < n || svd.singularValues()(n - 1) < 1e-8)
      throw NumericalError("block_structure: degenerate sector splitting");
    // c maps basis coefficients to orthonormal images: T_k = Σ_l c(l,k) B_l
    const CMatrix c = svd.matrixV().leftCols(n) *
                      svd.singularValues().head(n).cwiseInverse().cast<Complex>().asDiagonal();
    CMatrix u(r, r);  // columns u_{(k,j)} in sector coordinates, index k*m + j
    for (Eigen::Index k = 0; k < n; ++k) {
      CMatrix t = CMatrix::Zero(r, r);
      for (std::size_t l = 0; l < local.dim(); ++l) t += c(static_cast<Eigen::Index>(l), k) * local.basis()[l];
      for (Eigen::Index j = 0; j < m; ++j) u.col(k * m + j) = t * phi.col(j);
    }
    Sector s;
    s.projector = p;
    s.left_dim = static_cast<std::size_t>(n);
    s.right_dim = static_cast<std::size_t>(m);
    s.isometry = (q * u).adjoint();
    if (max_abs(s.isometry * s.isometry.adjoint() - identity(static_cast<std::size_t>(r))) > 1e-8)
      throw NumericalError("block_structure: sector basis is not orthonormal");
    bs.sectors.push_back(std::move(s));
  }
  (void)d;
  return bs;
}

/// Max over basis elements and sectors of the distance between U_i A U_i†
/// and (Tr_right(U_i A U_i†)/m_i) ⊗ 1_{m_i}.
inline double factorization_residual(const AlgebraBasis& a, const BlockStructure& bs) {
  double worst = 0.0;
  for (const auto& x : a.basis())
    for (std::size_t i = 0; i < bs.sectors.size(); ++i) {
      const auto& s = bs.sectors[i];
      const CMatrix y = bs.sector_block(i, x);
      const CMatrix left = partial_trace(y, DimShape{s.left_dim, s.right_dim}, {0}) /
                           static_cast<double>(s.right_dim);
      worst = std::max(worst, (y - tensor(left, identity(s.right_dim))).norm());
    }
  return worst;
}

/// The trace-preserving HS-orthogonal projection onto `a`, assembled from the
/// block structure: identity on each left factor, normalised trace on the
/// right factor. Kraus operators U_i†(1⊗|j′⟩⟨j|)U_i/√m_i.
inline Channel conditional_expectation(const AlgebraBasis& a, std::uint64_t seed = kSectorSeed) {
  const BlockStructure bs = block_structure(a, seed);
  std::vector<CMatrix> kraus;
  for (const auto& s : bs.sectors) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(s.right_dim));
    for (std::size_t j = 0; j < s.right_dim; ++j)
      for (std::size_t jp = 0; jp < s.right_dim; ++jp) {
        const CMatrix unit = tensor(identity(s.left_dim), matrix_unit(s.right_dim, jp, j));
        kraus.push_back(norm * s.isometry.adjoint() * unit * s.isometry);
      }
  }
  return Channel(std::move(kraus));
}

}  // namespace cr
