#pragma once

// Kraus-form channels with cached Choi matrix and Stinespring isometry, plus
// the basic channel calculus (adjoint, composition, tensor products,
// complements, entanglement fidelity).

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "cr/matrix.hpp"

namespace cr {

/// A completely positive map ρ ↦ Σ E_i ρ E_i† from in_dim to out_dim.
///
/// Trace preservation is not enforced at construction: intermediate objects
/// such as the parity-preserving part of a channel are CP but not TP. Use
/// `validate` to check the channel invariants.
///
/// Choi convention: J = Σ_{ab} N(|a⟩⟨b|) ⊗ |a⟩⟨b|, output factor first,
/// unnormalised (Tr J = in_dim for a channel). The Stinespring isometry is
/// V = Σ_i E_i ⊗ |i⟩ with the environment as the second factor.
class Channel {
 public:
  Channel() = default;

  explicit Channel(std::vector<CMatrix> kraus) : kraus_(std::move(kraus)) {
    detail::require_dims(!kraus_.empty(), "Channel: empty Kraus set");
    out_ = static_cast<std::size_t>(kraus_.front().rows());
    in_ = static_cast<std::size_t>(kraus_.front().cols());
    for (const auto& e : kraus_)
      detail::require_dims(static_cast<std::size_t>(e.rows()) == out_ &&
                               static_cast<std::size_t>(e.cols()) == in_,
                           "Channel: Kraus operators of differing shapes");
    build_caches();
  }

  [[nodiscard]] std::size_t in_dim() const { return in_; }
  [[nodiscard]] std::size_t out_dim() const { return out_; }
  [[nodiscard]] std::size_t kraus_rank() const { return kraus_.size(); }
  [[nodiscard]] const std::vector<CMatrix>& kraus() const { return kraus_; }
  [[nodiscard]] const CMatrix& choi() const { return choi_; }
  [[nodiscard]] const CMatrix& stinespring() const { return stinespring_; }

  [[nodiscard]] CMatrix apply(const CMatrix& rho) const {
    detail::require_dims(static_cast<std::size_t>(rho.rows()) == in_ && rho.rows() == rho.cols(),
                         "Channel::apply: dimension mismatch");
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(out_));
    for (const auto& e : kraus_) out.noalias() += e * rho * e.adjoint();
    return out;
  }

  /// Heisenberg-picture action Σ E_i† X E_i.
  [[nodiscard]] CMatrix adjoint_apply(const CMatrix& x) const {
    detail::require_dims(static_cast<std::size_t>(x.rows()) == out_ && x.rows() == x.cols(),
                         "Channel::adjoint_apply: dimension mismatch");
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(in_));
    for (const auto& e : kraus_) out.noalias() += e.adjoint() * x * e;
    return out;
  }

  /// (N ⊗ id_r)(X) for X on in_dim ⊗ r.
  [[nodiscard]] CMatrix apply_with_reference(const CMatrix& x, std::size_t ref_dim) const {
    detail::require_dims(static_cast<std::size_t>(x.rows()) == in_ * ref_dim,
                         "Channel::apply_with_reference: dimension mismatch");
    const auto r = static_cast<Eigen::Index>(ref_dim);
    const CMatrix id = CMatrix::Identity(r, r);
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(out_) * r, static_cast<Eigen::Index>(out_) * r);
    for (const auto& e : kraus_) {
      const CMatrix big = tensor(e, id);
      out.noalias() += big * x * big.adjoint();
    }
    return out;
  }

  /// Superoperator matrix S with vec(N(X)) = S vec(X) (row-major vec).
  [[nodiscard]] CMatrix superoperator() const {
    CMatrix s = CMatrix::Zero(static_cast<Eigen::Index>(out_ * out_),
                              static_cast<Eigen::Index>(in_ * in_));
    for (const auto& e : kraus_) s += tensor(e, e.conjugate());
    return s;
  }

  /// Channel from a Choi matrix in this class's convention. Eigenvalues at or
  /// below `cutoff·max(1,λ_max)` are dropped.
  static Channel from_choi(const CMatrix& choi, std::size_t in_dim, std::size_t out_dim,
                           double cutoff = 1e-12) {
    detail::require_dims(static_cast<std::size_t>(choi.rows()) == in_dim * out_dim,
                         "Channel::from_choi: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(choi));
    const double top = std::max(1.0, es.eigenvalues().maxCoeff());
    std::vector<CMatrix> kraus;
    for (Eigen::Index k = es.eigenvalues().size(); k-- > 0;) {
      const double lam = es.eigenvalues()(k);
      if (lam <= cutoff * top) continue;
      const CVector v = std::sqrt(lam) * es.eigenvectors().col(k);
      kraus.push_back(unvec(v, static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim)));
    }
    if (kraus.empty())
      kraus.push_back(CMatrix::Zero(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim)));
    return Channel(std::move(kraus));
  }

  /// Same superoperator with a minimal Kraus set.
  [[nodiscard]] Channel reduced(double cutoff = 1e-12) const {
    return from_choi(choi_, in_, out_, cutoff);
  }

  static Channel identity(std::size_t d) { return Channel({cr::identity(d)}); }

  static Channel unitary(const CMatrix& u) { return Channel({u}); }

  /// ρ ↦ Tr(ρ)·1 on a one-dimensional output.
  static Channel trace(std::size_t d) {
    std::vector<CMatrix> k;
    for (std::size_t i = 0; i < d; ++i) {
      CMatrix e = CMatrix::Zero(1, static_cast<Eigen::Index>(d));
      e(0, static_cast<Eigen::Index>(i)) = 1.0;
      k.push_back(e);
    }
    return Channel(std::move(k));
  }

  /// D_σ(ρ) = σ·Tr(ρ).
  static Channel constant_output(const CMatrix& sigma, std::size_t in_dim) {
    const auto es = hermitian_eigen(sigma);
    std::vector<CMatrix> k;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
      const double lam = es.eigenvalues()(j);
      if (lam <= 1e-14) continue;
      for (std::size_t i = 0; i < in_dim; ++i) {
        CMatrix e = CMatrix::Zero(sigma.rows(), static_cast<Eigen::Index>(in_dim));
        e.col(static_cast<Eigen::Index>(i)) = std::sqrt(lam) * es.eigenvectors().col(j);
        k.push_back(e);
      }
    }
    return Channel(std::move(k));
  }

  static Channel completely_depolarizing(std::size_t d) {
    return constant_output(cr::identity(d) / static_cast<double>(d), d);
  }

 private:
  void build_caches() {
    const auto n_out = static_cast<Eigen::Index>(out_);
    const auto n_in = static_cast<Eigen::Index>(in_);
    const auto k = static_cast<Eigen::Index>(kraus_.size());
    choi_ = CMatrix::Zero(n_out * n_in, n_out * n_in);
    stinespring_ = CMatrix::Zero(n_out * k, n_in);
    for (Eigen::Index i = 0; i < k; ++i) {
      const CVector v = vec(kraus_[static_cast<std::size_t>(i)]);
      choi_.noalias() += v * v.adjoint();
      for (Eigen::Index o = 0; o < n_out; ++o)
        stinespring_.row(o * k + i) = kraus_[static_cast<std::size_t>(i)].row(o);
    }
  }

  std::vector<CMatrix> kraus_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  CMatrix choi_;
  CMatrix stinespring_;
};

struct ChannelReport {
  double trace_preservation_residual = 0.0;  // max |Σ E†E − 1|
  double choi_min_eigenvalue = 0.0;
  double isometry_residual = 0.0;  // max |V†V − 1|
  bool valid = false;
};

inline ChannelReport validate(const Channel& c, double tol = 1e-9) {
  ChannelReport r;
  CMatrix s = CMatrix::Zero(static_cast<Eigen::Index>(c.in_dim()), static_cast<Eigen::Index>(c.in_dim()));
  for (const auto& e : c.kraus()) s += e.adjoint() * e;
  r.trace_preservation_residual = max_abs(s - identity(c.in_dim()));
  r.choi_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(c.choi()), Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  const CMatrix& v = c.stinespring();
  r.isometry_residual = max_abs(v.adjoint() * v - identity(c.in_dim()));
  r.valid = r.trace_preservation_residual <= tol && r.choi_min_eigenvalue >= -tol &&
            r.isometry_residual <= tol;
  return r;
}

/// Composition a∘b (b acts first).
inline Channel compose(const Channel& a, const Channel& b, bool reduce = true) {
  detail::require_dims(b.out_dim() == a.in_dim(), "compose: inner dimensions differ");
  std::vector<CMatrix> k;
  k.reserve(a.kraus_rank() * b.kraus_rank());
  for (const auto& ea : a.kraus())
    for (const auto& eb : b.kraus()) k.push_back(ea * eb);
  Channel c(std::move(k));
  if (reduce && c.kraus_rank() > c.in_dim() * c.out_dim()) return c.reduced();
  return c;
}

inline Channel tensor_channels(const Channel& a, const Channel& b, bool reduce = false) {
  std::vector<CMatrix> k;
  for (const auto& ea : a.kraus())
    for (const auto& eb : b.kraus()) k.push_back(tensor(ea, eb));
  Channel c(std::move(k));
  return reduce ? c.reduced() : c;
}

/// Sum of CP maps (Kraus sets concatenated).
inline Channel add(const Channel& a, const Channel& b) {
  detail::require_dims(a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim(),
                       "add: dimension mismatch");
  auto k = a.kraus();
  k.insert(k.end(), b.kraus().begin(), b.kraus().end());
  return Channel(std::move(k));
}

inline Channel scaled(const Channel& a, double weight) {
  auto k = a.kraus();
  for (auto& e : k) e *= std::sqrt(weight);
  return Channel(std::move(k));
}

/// Canonical complementary channel N̂(ρ) = Σ_ij Tr(ρ E_j†E_i)|i⟩⟨j|, with the
/// environment basis in stored Kraus order.
inline Channel complementary(const Channel& c) {
  const auto k = static_cast<Eigen::Index>(c.kraus_rank());
  const auto in = static_cast<Eigen::Index>(c.in_dim());
  std::vector<CMatrix> out;
  for (Eigen::Index o = 0; o < static_cast<Eigen::Index>(c.out_dim()); ++o) {
    CMatrix f(k, in);
    for (Eigen::Index i = 0; i < k; ++i) f.row(i) = c.kraus()[static_cast<std::size_t>(i)].row(o);
    out.push_back(std::move(f));
  }
  return Channel(std::move(out));
}

/// Frobenius distance between Choi matrices.
inline double choi_distance(const Channel& a, const Channel& b) {
  detail::require_dims(a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim(),
                       "choi_distance: dimension mismatch");
  return (a.choi() - b.choi()).norm();
}

struct ChannelDistance {
  double choi_frobenius = 0.0;
  std::optional<double> fidelity_lower_bound;
};

/// Purified input (N ⊗ id)(ψ) for the compact purification of ρ.
inline CMatrix extended_output(const Channel& n, const CVector& psi, std::size_t ref_dim) {
  return n.apply_with_reference(psi * psi.adjoint(), ref_dim);
}

/// F_ρ(N, M) = f((N⊗id)(ψ), (M⊗id)(ψ)).
inline double entanglement_fidelity(const Channel& n, const Channel& m, const CMatrix& rho) {
  detail::require_dims(n.in_dim() == m.in_dim() && n.out_dim() == m.out_dim() &&
                           static_cast<std::size_t>(rho.rows()) == n.in_dim(),
                       "entanglement_fidelity: dimension mismatch");
  detail::require(std::abs(rho.trace().real() - 1.0) <= 1e-8 && is_psd(rho, 1e-10),
                  "entanglement_fidelity: rho is not a density matrix");
  const CVector psi = purify_compact(rho);
  const std::size_t r = static_cast<std::size_t>(psi.size()) / n.in_dim();
  const CMatrix a = extended_output(n, psi, r);
  const CMatrix b = extended_output(m, psi, r);
  return state_fidelity(a / a.trace().real(), b / b.trace().real(), 1e-9);
}

}  // namespace cr
