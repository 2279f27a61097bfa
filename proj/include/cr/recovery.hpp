#pragma once

// Correctability criteria and optimal recovery fidelities.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "cr/algebra.hpp"
#include "cr/channel.hpp"
#include "cr/code.hpp"
#include "cr/fermion.hpp"
#include "cr/fidelity_sdp.hpp"
#include "cr/locality.hpp"
#include "cr/random.hpp"
#include "cr/sdp.hpp"

namespace cr {

enum class Verdict { correctable, not_correctable, indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::correctable: return "correctable";
    case Verdict::not_correctable: return "not_correctable";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

/// A solved coefficient family, row-major over `shape`.
struct CoefficientTable {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<Complex> values;

  [[nodiscard]] Complex at(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t f = 0; f < shape.size(); ++f) flat = flat * shape[f] + idx[f];
    return values.at(flat);
  }
};

struct CorrectabilityReport {
  std::string criterion;
  Verdict verdict = Verdict::indeterminate;
  double residual = 0.0;
  double tolerance = 0.0;
  std::vector<CoefficientTable> coefficients;
  std::map<std::string, bool> flags;
  std::map<std::string, double> diagnostics;
  std::string message;

  [[nodiscard]] bool correctable() const { return verdict == Verdict::correctable; }
  [[nodiscard]] const CoefficientTable* table(const std::string& name) const {
    for (const auto& t : coefficients)
      if (t.name == name) return &t;
    return nullptr;
  }
};

namespace detail {

inline constexpr double kPinvCutoff = 1e-10;

/// Least-squares fits y ≈ A c with a truncated pseudoinverse.
class SpanFitter {
 public:
  explicit SpanFitter(CMatrix a) : a_(std::move(a)), svd_(a_, Eigen::ComputeThinU | Eigen::ComputeThinV) {
    const auto& s = svd_.singularValues();
    const double top = s.size() > 0 ? s(0) : 0.0;
    inv_ = RVector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > kPinvCutoff * std::max(top, 1.0)) inv_(i) = 1.0 / s(i);
  }

  [[nodiscard]] CVector coefficients(const CVector& y) const {
    const CVector uy = svd_.matrixU().adjoint() * y;
    return svd_.matrixV() * (inv_.cast<Complex>().asDiagonal() * uy);
  }

  /// Squared misfit ‖y − A c‖².
  [[nodiscard]] double misfit_sq(const CVector& y, const CVector& c) const { return (y - a_ * c).squaredNorm(); }

 private:
  CMatrix a_;
  Eigen::JacobiSVD<CMatrix> svd_;
  RVector inv_;
};

inline CVector stack(const std::vector<CMatrix>& ms) {
  Eigen::Index n = 0;
  for (const auto& m : ms) n += m.size();
  CVector out(n);
  Eigen::Index off = 0;
  for (const auto& m : ms) {
    out.segment(off, m.size()) = vec(m);
    off += m.size();
  }
  return out;
}

inline void require_code_match(const Code& code, const std::vector<CMatrix>& kraus, const char* what) {
  detail::require(!kraus.empty(), std::string(what) + ": empty Kraus list");
  for (const auto& e : kraus)
    detail::require_dims(static_cast<std::size_t>(e.cols()) == code.physical_dim(),
                         std::string(what) + ": Kraus operator does not act on the code space");
}

inline Verdict verdict_from(double residual, double tol) {
  return residual <= tol ? Verdict::correctable : Verdict::not_correctable;
}

}  // namespace detail

/// Standard Knill–Laflamme: W†E_j†E_iW = σ_ij W†W.
inline CorrectabilityReport kl_check(const Code& code, const std::vector<CMatrix>& kraus, double tol = 1e-8) {
  detail::require_code_match(code, kraus, "kl_check");
  const CMatrix& w = code.isometry();
  const auto k = static_cast<double>(code.logical_dim());
  const std::size_t n = kraus.size();
  std::vector<CMatrix> ew;
  for (const auto& e : kraus) ew.push_back(e * w);

  CorrectabilityReport r;
  r.criterion = "kl";
  r.tolerance = tol;
  CMatrix sigma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double misfit = 0.0;
  const CMatrix id = cr::identity(code.logical_dim());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const CMatrix m = ew[j].adjoint() * ew[i];
      const Complex s = m.trace() / k;
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
      misfit += (m - s * id).squaredNorm();
    }
  r.residual = std::sqrt(misfit);
  const double trace_err = std::abs(sigma.trace() - 1.0);
  const double min_eig = min_eigenvalue(hermitian_part(sigma));
  r.diagnostics["sigma_trace_error"] = trace_err;
  r.diagnostics["sigma_min_eigenvalue"] = min_eig;
  r.flags["sigma_state"] = trace_err <= tol && min_eig >= -tol;
  r.coefficients.push_back({"sigma", {n, n}, {}});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      r.coefficients.back().values.push_back(sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  r.verdict = r.residual <= tol && r.flags["sigma_state"] ? Verdict::correctable : Verdict::not_correctable;
  return r;
}

namespace detail {

inline void require_projector_family(const std::vector<CMatrix>& ps, std::size_t d, const char* what) {
  detail::require(!ps.empty(), std::string(what) + ": empty projector family");
  CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    detail::require_dims(static_cast<std::size_t>(ps[i].rows()) == d && ps[i].rows() == ps[i].cols(),
                         std::string(what) + ": projector dimension");
    detail::require(max_abs(ps[i] * ps[i] - ps[i]) <= 1e-9 && hermiticity_residual(ps[i]) <= 1e-9,
                    std::string(what) + ": not an orthogonal projector");
    for (std::size_t j = 0; j < i; ++j)
      detail::require(max_abs(ps[i] * ps[j]) <= 1e-9, std::string(what) + ": projectors are not mutually orthogonal");
    sum += ps[i];
  }
  detail::require(max_abs(sum - cr::identity(d)) <= 1e-9, std::string(what) + ": projectors do not sum to the identity");
}

struct Gkl0Result {
  bool solved = false;
  double margin = 0.0;  // largest achievable min eigenvalue over all σ_{j|i}
  SdpSolution solution;
  std::vector<std::vector<CMatrix>> states;  // [i][j]
};

/// Feasibility of states σ_{j|i} ⪰ 0, Σ_j Tr σ_{j|i} = 1, with
/// Σ_i σ_{j|i}[n,m] Π_i = L_{jnm} imposed through the normal equations on
/// span{Π_i}. Solved as: maximise λ with σ_{j|i} − λ·1 ⪰ 0.
inline Gkl0Result solve_gkl0(const std::vector<CMatrix>& pis, const std::vector<std::vector<std::vector<CMatrix>>>& l,
                             double shift, double tol) {
  const std::size_t ni = pis.size();
  const std::size_t nj = l.size();
  const auto nk = static_cast<Eigen::Index>(l.front().size());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < ni; ++i)
    if (pis[i].norm() > 1e-12) active.push_back(i);
  RMatrix g(active.size(), active.size());
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t b = 0; b < active.size(); ++b) g(a, b) = hs_inner(pis[active[a]], pis[active[b]]).real();

  SdpProblem p;
  std::vector<std::vector<std::size_t>> blk(active.size(), std::vector<std::size_t>(nj));
  for (auto& row : blk)
    for (auto& b : row) b = p.add_block(nk);
  const std::size_t lam = p.add_block(1);  // λ′ = λ + shift ≥ 0
  p.objective.add(lam, 0, 0, 1.0);
  for (std::size_t j = 0; j < nj; ++j)
    for (Eigen::Index n = 0; n < nk; ++n)
      for (Eigen::Index m = n; m < nk; ++m)
        for (std::size_t la = 0; la < active.size(); ++la) {
          const Complex h = hs_inner(pis[active[la]], l[j][static_cast<std::size_t>(n)][static_cast<std::size_t>(m)]);
          for (int part = 0; part < (n == m ? 1 : 2); ++part) {
            const Complex rot = part == 0 ? Complex(1.0) : Complex(0.0, -1.0);
            SdpFunctional f;
            double gsum = 0.0;
            for (std::size_t ia = 0; ia < active.size(); ++ia) {
              if (g(la, ia) == 0.0) continue;
              f.add(blk[ia][j], n, m, rot * g(la, ia));
              gsum += g(la, ia);
            }
            double rhs = (rot * h).real();
            if (n == m) {
              f.add(lam, 0, 0, gsum);
              rhs += shift * gsum;
            }
            if (!f.entries.empty()) p.add_equality(std::move(f), rhs);
          }
        }
  for (std::size_t ia = 0; ia < active.size(); ++ia) {
    SdpFunctional f;
    for (std::size_t j = 0; j < nj; ++j)
      for (Eigen::Index n = 0; n < nk; ++n) f.add(blk[ia][j], n, n, 1.0);
    const double count = static_cast<double>(nj) * static_cast<double>(nk);
    f.add(lam, 0, 0, count);
    p.add_equality(std::move(f), 1.0 + shift * count);
  }
  SdpOptions opt;
  opt.tol = std::min(tol, 1e-8);
  Gkl0Result res;
  res.solution = solve(p, opt);
  res.solved = res.solution.ok();
  const double lam_value = res.solution.blocks.empty() ? 0.0 : res.solution.blocks[lam](0, 0).real();
  res.margin = lam_value - shift;
  res.states.assign(ni, std::vector<CMatrix>(nj, CMatrix::Zero(nk, nk)));
  if (!res.solution.blocks.empty())
    for (std::size_t ia = 0; ia < active.size(); ++ia)
      for (std::size_t j = 0; j < nj; ++j)
        res.states[active[ia]][j] = res.solution.blocks[blk[ia][j]] + res.margin * CMatrix::Identity(nk, nk);
  return res;
}

}  // namespace detail

/// Knill–Laflamme under a superselection rule with charge sectors P_i.
inline CorrectabilityReport superselection_kl_check(const Code& code, const std::vector<CMatrix>& kraus,
                                                    const std::vector<CMatrix>& projectors, double tol = 1e-8) {
  detail::require_code_match(code, kraus, "superselection_kl_check");
  const std::size_t dout = static_cast<std::size_t>(kraus.front().rows());
  detail::require_projector_family(projectors, dout, "superselection_kl_check");
  const CMatrix& w = code.isometry();
  const std::size_t ni = projectors.size();
  const std::size_t nk = kraus.size();
  detail::require_dims(dout == code.physical_dim(), "superselection_kl_check: noise must map the code space to itself");

  CorrectabilityReport r;
  r.tolerance = tol;
  const CMatrix pw = code.projector();
  double comm = 0.0;
  std::optional<std::size_t> fixed;
  std::vector<CMatrix> pis;
  for (std::size_t i = 0; i < ni; ++i) {
    comm = std::max(comm, max_abs(projectors[i] * pw - pw * projectors[i]));
    if (max_abs(projectors[i] * w - w) <= 1e-9) fixed = i;
    pis.push_back(w.adjoint() * projectors[i] * w);
  }
  r.flags["charge_commutes_with_code"] = comm <= 1e-9;
  r.flags["fixed_charge"] = fixed.has_value();
  r.diagnostics["charge_code_commutator"] = comm;
  r.criterion = fixed ? "simple_gkl" : "gkl";

  CMatrix a(static_cast<Eigen::Index>(pis.front().size()), static_cast<Eigen::Index>(ni));
  for (std::size_t i = 0; i < ni; ++i) a.col(static_cast<Eigen::Index>(i)) = vec(pis[i]);
  const detail::SpanFitter fitter(a);

  std::vector<CMatrix> ew;
  for (const auto& e : kraus) ew.push_back(e * w);
  // l[j][n][m] = W†E_n†P_jE_mW
  std::vector<std::vector<std::vector<CMatrix>>> l(ni, std::vector<std::vector<CMatrix>>(nk, std::vector<CMatrix>(nk)));
  CoefficientTable c{"c", {ni, ni, nk, nk}, std::vector<Complex>(ni * ni * nk * nk)};
  double misfit = 0.0;
  for (std::size_t j = 0; j < ni; ++j)
    for (std::size_t n = 0; n < nk; ++n)
      for (std::size_t m = 0; m < nk; ++m) {
        const CMatrix lm = ew[n].adjoint() * projectors[j] * ew[m];
        l[j][n][m] = lm;
        const CVector y = vec(lm);
        const CVector coef = fitter.coefficients(y);
        misfit += fitter.misfit_sq(y, coef);
        for (std::size_t i = 0; i < ni; ++i) c.values[((i * ni + j) * nk + n) * nk + m] = coef(static_cast<Eigen::Index>(i));
      }
  r.residual = std::sqrt(misfit);
  r.coefficients.push_back(c);
  if (fixed) {
    CoefficientTable cs{"c_simple", {ni, nk, nk}, {}};
    for (std::size_t j = 0; j < ni; ++j)
      for (std::size_t n = 0; n < nk; ++n)
        for (std::size_t m = 0; m < nk; ++m) cs.values.push_back(c.at({*fixed, j, n, m}));
    r.coefficients.push_back(cs);
  }
  if (r.residual > tol) {
    r.verdict = Verdict::not_correctable;
    r.message = "linear superselection conditions fail";
    return r;
  }
  double shift = 1.0;
  for (const auto& v : c.values) shift += std::abs(v);
  const auto g = detail::solve_gkl0(pis, l, shift, tol);
  r.flags["states_solved"] = g.solved;
  r.diagnostics["state_margin"] = g.margin;
  r.diagnostics["state_sdp_iterations"] = g.solution.iterations;
  if (!g.solved) {
    r.verdict = Verdict::indeterminate;
    r.message = std::string("state feasibility problem: ") + to_string(g.solution.status);
    return r;
  }
  CoefficientTable st{"sigma_j_given_i", {ni, ni, nk, nk}, {}};
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 0; j < ni; ++j)
      for (std::size_t n = 0; n < nk; ++n)
        for (std::size_t m = 0; m < nk; ++m)
          st.values.push_back(g.states[i][j](static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)));
  r.coefficients.push_back(st);
  r.verdict = g.margin >= -tol ? Verdict::correctable : Verdict::not_correctable;
  if (r.verdict == Verdict::not_correctable) r.message = "no positive conditional states";
  return r;
}

/// Local correctability on H_A ⊗ H_B for noise acting on A:
/// W_m†E_i†E_jW_n = λ_ij W_m†W_n with W_n = (1 ⊗ ⟨n|)W.
inline CorrectabilityReport tensor_local_check(const Code& code, std::size_t dim_a, std::size_t dim_b,
                                               const std::vector<CMatrix>& kraus_a, double tol = 1e-8) {
  detail::require_dims(dim_a * dim_b == code.physical_dim(), "tensor_local_check: bipartition does not match the code");
  detail::require(!kraus_a.empty(), "tensor_local_check: empty Kraus list");
  for (const auto& e : kraus_a)
    detail::require_dims(static_cast<std::size_t>(e.cols()) == dim_a, "tensor_local_check: Kraus operator does not act on A");
  const CMatrix& w = code.isometry();
  const auto da = static_cast<Eigen::Index>(dim_a), db = static_cast<Eigen::Index>(dim_b);
  std::vector<CMatrix> wn;
  for (Eigen::Index n = 0; n < db; ++n) wn.push_back(w(Eigen::seqN(n, da, db), Eigen::all));

  std::vector<CMatrix> base;
  for (Eigen::Index m = 0; m < db; ++m)
    for (Eigen::Index n = 0; n < db; ++n) base.push_back(wn[m].adjoint() * wn[n]);
  const CVector bv = detail::stack(base);
  const detail::SpanFitter fitter(bv);
  const std::size_t nk = kraus_a.size();
  CorrectabilityReport r;
  r.criterion = "tensor_local";
  r.tolerance = tol;
  CoefficientTable lam{"lambda", {nk, nk}, {}};
  double misfit = 0.0;
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = 0; j < nk; ++j) {
      const CMatrix eij = kraus_a[i].adjoint() * kraus_a[j];
      std::vector<CMatrix> ys;
      for (Eigen::Index m = 0; m < db; ++m)
        for (Eigen::Index n = 0; n < db; ++n) ys.push_back(wn[m].adjoint() * eij * wn[n]);
      const CVector y = detail::stack(ys);
      const CVector coef = fitter.coefficients(y);
      misfit += fitter.misfit_sq(y, coef);
      lam.values.push_back(coef(0));
    }
  r.residual = std::sqrt(misfit);
  r.coefficients.push_back(lam);
  r.verdict = detail::verdict_from(r.residual, tol);
  return r;
}

/// Spanning monomials of the commutant of the even algebra on region ω:
/// those whose support meets ω in ∅ or in all of ω. Distinct monomials are
/// Hilbert–Schmidt orthogonal, so no orthonormalization is needed.
inline std::vector<CMatrix> region_commutant_monomials(const FermionSystem& sys, const MajoranaIndices& region) {
  std::set<int> in(region.begin(), region.end());
  MajoranaIndices rest;
  for (int k = 1; k <= sys.n_majoranas(); ++k)
    if (!in.count(k)) rest.push_back(k);
  detail::require(rest.size() <= 14, "region_commutant_monomials: region complement too large");
  std::vector<CMatrix> elems;
  const std::size_t nsub = std::size_t{1} << rest.size();
  for (std::size_t mask = 0; mask < nsub; ++mask) {
    MajoranaIndices s;
    for (std::size_t b = 0; b < rest.size(); ++b)
      if (mask >> b & 1U) s.push_back(rest[b]);
    elems.push_back(sys.hermitian_monomial(s));
    MajoranaIndices t = s;
    t.insert(t.end(), in.begin(), in.end());
    elems.push_back(sys.hermitian_monomial(t));
  }
  return elems;
}

inline AlgebraBasis region_commutant(const FermionSystem& sys, const MajoranaIndices& region) {
  return AlgebraBasis::from_span(region_commutant_monomials(sys, region), sys.dim());
}

/// Membership in the even algebra of region ω: x must commute with every
/// Majorana outside ω and with the region parity.
inline double region_membership_residual(const FermionSystem& sys, const MajoranaIndices& region, const CMatrix& x) {
  std::set<int> in(region.begin(), region.end());
  const CMatrix c = parity_operator(sys, region).charge;
  double worst = max_abs(c * x - x * c);
  for (int k = 1; k <= sys.n_majoranas(); ++k)
    if (!in.count(k)) worst = std::max(worst, max_abs(sys.majorana(k) * x - x * sys.majorana(k)));
  return worst / std::max(1.0, max_abs(x));
}

/// Strongly local correctability for noise inside the physical algebra of
/// region ω: W†E_i†E_jB_kW = λ_ijk W†B_kW for B in the commutant,
/// B_k = P_kBP_k with P_± the region parity projectors.
inline CorrectabilityReport fermion_local_check(const Code& code, const std::vector<CMatrix>& kraus,
                                                const FermionSystem& sys, const MajoranaIndices& region,
                                                double tol = 1e-8) {
  detail::require_code_match(code, kraus, "fermion_local_check");
  detail::require_dims(code.physical_dim() == sys.dim(), "fermion_local_check: code does not live on the fermion space");
  for (const auto& e : kraus)
    if (region_membership_residual(sys, region, e) > 1e-9)
      throw PreconditionError("fermion_local_check: Kraus operator outside the physical algebra of the region");
  const std::vector<CMatrix> comm = region_commutant_monomials(sys, region);
  const ParityData par = parity_operator(sys, region);
  const CMatrix& w = code.isometry();
  const std::array<CMatrix, 2> proj{par.plus, par.minus};

  CorrectabilityReport r;
  r.criterion = "fermion_local";
  r.tolerance = tol;
  const CMatrix pw = code.projector();
  r.flags["code_commutes_with_parity"] = max_abs(par.charge * pw - pw * par.charge) <= 1e-9;
  bool even = true;
  for (const auto& e : kraus) even = even && max_abs(par.charge * e - e * par.charge) <= 1e-9;
  r.flags["parity_preserving_noise"] = even;
  r.flags["reduces_to_kl"] = r.flags["code_commutes_with_parity"] && even;

  const std::size_t nk = kraus.size();
  CoefficientTable lam{"lambda", {nk, nk, 2}, std::vector<Complex>(nk * nk * 2)};
  double misfit = 0.0;
  std::vector<CMatrix> ew;
  for (const auto& e : kraus) ew.push_back(e * w);
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<CMatrix> bkw, base;
    for (const auto& b : comm) {
      bkw.push_back(proj[s] * (b * (proj[s] * w)));
      base.push_back(w.adjoint() * bkw.back());
    }
    const detail::SpanFitter fitter(detail::stack(base));
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t j = 0; j < nk; ++j) {
        const CMatrix eij = ew[i].adjoint() * kraus[j];
        std::vector<CMatrix> ys;
        for (const auto& x : bkw) ys.push_back(eij * x);
        const CVector y = detail::stack(ys);
        const CVector coef = fitter.coefficients(y);
        misfit += fitter.misfit_sq(y, coef);
        lam.values[(i * nk + j) * 2 + s] = coef(0);
      }
  }
  r.residual = std::sqrt(misfit);
  r.coefficients.push_back(lam);
  r.verdict = detail::verdict_from(r.residual, tol);
  return r;
}

/// Constraint on the recovery map.
struct RecoveryConstraint {
  enum class Kind { unconstrained, physical, fixes };
  Kind kind = Kind::unconstrained;
  std::optional<Channel> p;  // physical: projector on the target output
  std::optional<Channel> q;  // physical: projector on the noise output
  std::optional<AlgebraBasis> b;

  static RecoveryConstraint unconstrained() { return {}; }
  static RecoveryConstraint physical(Channel p, Channel q) {
    RecoveryConstraint c;
    c.kind = Kind::physical;
    c.p = std::move(p);
    c.q = std::move(q);
    return c;
  }
  static RecoveryConstraint fixes(AlgebraBasis b) {
    RecoveryConstraint c;
    c.kind = Kind::fixes;
    c.b = std::move(b);
    return c;
  }
  [[nodiscard]] std::string describe() const {
    switch (kind) {
      case Kind::unconstrained: return "unconstrained";
      case Kind::physical: return "physical";
      case Kind::fixes: return "fixes(dim " + std::to_string(b->dim()) + ")";
    }
    return "?";
  }
};

struct FidelityResult {
  double value = 0.0;
  CMatrix optimizer;  // process matrix of the optimal map
  std::size_t optimizer_in = 0;
  std::size_t optimizer_out = 0;
  double duality_gap = 0.0;
  int iterations = 0;
  std::string constraint;
  SdpStatus status = SdpStatus::numerical_error;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool heuristic = false;
  bool converged = true;
  std::optional<double> upper_bound;

  [[nodiscard]] bool ok() const { return status == SdpStatus::optimal; }
  [[nodiscard]] Channel optimizer_channel() const { return Channel::from_choi(optimizer, optimizer_in, optimizer_out); }
};

namespace detail {

inline void require_state(const CMatrix& rho, std::size_t d, const char* what) {
  detail::require_dims(static_cast<std::size_t>(rho.rows()) == d && rho.rows() == rho.cols(),
                       std::string(what) + ": state dimension mismatch");
  detail::require(std::abs(rho.trace().real() - 1.0) <= 1e-8 && is_psd(rho, 1e-9),
                  std::string(what) + ": rho is not a density matrix");
}

struct Purified {
  CMatrix state;  // |ψ⟩⟨ψ| on system ⊗ reference
  Eigen::Index ref = 0;
};

inline Purified purified(const CMatrix& rho) {
  const CMatrix psi = purify_compact(rho);
  return {psi * psi.adjoint(), psi.rows() / rho.rows()};
}

inline FidelityResult solve_fidelity_sdp(const ChannelFidelitySdp& sdp, double tol, const std::string& desc) {
  SdpOptions opt;
  opt.tol = tol;
  const SdpSolution sol = solve(sdp.problem, opt);
  FidelityResult r;
  r.status = sol.status;
  r.value = std::clamp(sol.value, 0.0, 1.0);
  r.duality_gap = std::abs(sol.value - sol.dual_value);
  r.iterations = sol.iterations;
  r.primal_residual = sol.primal_residual;
  r.dual_residual = sol.dual_residual;
  r.constraint = desc;
  r.optimizer_in = static_cast<std::size_t>(sdp.in_dim);
  r.optimizer_out = static_cast<std::size_t>(sdp.out_dim);
  if (!sol.blocks.empty()) r.optimizer = sdp.choi(sol);
  return r;
}

inline FidelityResult solve_fidelity(const ChannelFidelityProblem& cfg, double tol, const std::string& desc) {
  return solve_fidelity_sdp(build_channel_fidelity_sdp(cfg), tol, desc);
}

}  // namespace detail

/// Fidelity SDP for max_R F_ρ(R∘N, M) under the constraint. Under
/// physical(p, q) the variable is R in R∘Q and the target is P∘M.
inline ChannelFidelitySdp build_recovery_fidelity_sdp(const Channel& n, const Channel& m, const CMatrix& rho,
                                                      const RecoveryConstraint& c = {}) {
  detail::require_dims(n.in_dim() == m.in_dim(), "build_recovery_fidelity_sdp: input dimensions differ");
  detail::require_state(rho, n.in_dim(), "build_recovery_fidelity_sdp");
  const auto pure = detail::purified(rho);
  ChannelFidelityProblem cfg;
  cfg.in_dim = static_cast<Eigen::Index>(n.out_dim());
  cfg.out_dim = static_cast<Eigen::Index>(m.out_dim());
  auto add_term = [&](const Channel& first, const Channel& target) {
    cfg.terms.push_back({first.apply_with_reference(pure.state, pure.ref), target.apply_with_reference(pure.state, pure.ref), pure.ref});
  };
  switch (c.kind) {
    case RecoveryConstraint::Kind::unconstrained:
      add_term(n, m);
      break;
    case RecoveryConstraint::Kind::physical: {
      const Channel& p = *c.p;
      const Channel& q = *c.q;
      detail::require_dims(p.in_dim() == m.out_dim() && p.out_dim() == m.out_dim() && q.in_dim() == n.out_dim() &&
                               q.out_dim() == n.out_dim(),
                           "build_recovery_fidelity_sdp: projector dimensions");
      add_term(compose(q, n, false), compose(p, m, false));
      break;
    }
    case RecoveryConstraint::Kind::fixes: {
      const AlgebraBasis& b = *c.b;
      detail::require_dims(n.out_dim() == m.out_dim() && b.ambient_dim() == n.out_dim(),
                           "build_recovery_fidelity_sdp: fixed algebra must live on the noise output");
      add_term(n, m);
      cfg.face = kraus_span_face(commutant(b).basis());
      cfg.fixed = b.basis();
      break;
    }
  }
  return build_channel_fidelity_sdp(cfg);
}

/// max_R F_ρ(R∘N, M) over recovery maps R obeying the constraint.
inline FidelityResult optimal_recovery_fidelity(const Channel& n, const Channel& m, const CMatrix& rho,
                                                const RecoveryConstraint& c = {}, double tol = 1e-7) {
  const ChannelFidelitySdp sdp = build_recovery_fidelity_sdp(n, m, rho, c);
  FidelityResult r = detail::solve_fidelity_sdp(sdp, tol, c.describe());
  if (c.kind == RecoveryConstraint::Kind::physical && r.optimizer.size() > 0)
    r.optimizer = detail::apply_choi(r.optimizer, c.q->choi(), sdp.in_dim, sdp.out_dim, sdp.in_dim);
  return r;
}

/// max_S F(N̂, S∘M̂) with complements chosen per constraint. Under fixes(b)
/// the local complements are used and the environment of P_{ℬ′} is kept
/// as part of the reference, so S acts on the noise environments only.
inline FidelityResult environment_side_fidelity(const Channel& n, const Channel& m, const CMatrix& rho,
                                                const RecoveryConstraint& c = {}, double tol = 1e-7) {
  detail::require_dims(n.in_dim() == m.in_dim(), "environment_side_fidelity: input dimensions differ");
  detail::require_state(rho, n.in_dim(), "environment_side_fidelity");
  const auto pure = detail::purified(rho);
  ChannelFidelityProblem cfg;
  auto plain = [&](const Channel& nc, const Channel& mc) {
    cfg.in_dim = static_cast<Eigen::Index>(mc.out_dim());
    cfg.out_dim = static_cast<Eigen::Index>(nc.out_dim());
    cfg.terms.push_back({mc.apply_with_reference(pure.state, pure.ref), nc.apply_with_reference(pure.state, pure.ref), pure.ref});
    return detail::solve_fidelity(cfg, tol, c.describe());
  };
  switch (c.kind) {
    case RecoveryConstraint::Kind::unconstrained:
      return plain(complementary(n), complementary(m));
    case RecoveryConstraint::Kind::physical:
      detail::require_dims(c.p->in_dim() == m.out_dim() && c.q->in_dim() == n.out_dim(),
                           "environment_side_fidelity: projector dimensions");
      return plain(complementary(compose(*c.q, n, false)), complementary(compose(*c.p, m, false)));
    case RecoveryConstraint::Kind::fixes: {
      const AlgebraBasis& b = *c.b;
      detail::require_dims(n.out_dim() == m.out_dim() && b.ambient_dim() == n.out_dim(),
                           "environment_side_fidelity: fixed algebra must live on the channel output");
      const Channel pb = conditional_expectation(commutant(b));
      const std::size_t kp = pb.kraus_rank();
      const Channel ln = complementary(compose(pb, n, false));
      const Channel lm = complementary(compose(pb, m, false));
      const std::size_t kn = n.kraus_rank(), km = m.kraus_rank();
      const auto r = static_cast<std::size_t>(pure.ref);
      const CMatrix tau = permute_factors(lm.apply_with_reference(pure.state, r), DimShape{kp, km, r}, {1, 0, 2});
      const CMatrix target = permute_factors(ln.apply_with_reference(pure.state, r), DimShape{kp, kn, r}, {1, 0, 2});
      cfg.in_dim = static_cast<Eigen::Index>(km);
      cfg.out_dim = static_cast<Eigen::Index>(kn);
      cfg.terms.push_back({tau, target, static_cast<Eigen::Index>(kp * r)});
      return detail::solve_fidelity(cfg, tol, c.describe());
    }
  }
  throw PreconditionError("environment_side_fidelity: unknown constraint");
}

struct DualityReport {
  FidelityResult lhs;
  FidelityResult rhs;
  double difference = 0.0;
  bool determinate = false;
  bool pass = false;
};

inline DualityReport verify_duality(const Channel& n, const Channel& m, const CMatrix& rho,
                                    const RecoveryConstraint& c = {}, double tol = 1e-5) {
  DualityReport r;
  r.lhs = optimal_recovery_fidelity(n, m, rho, c);
  r.rhs = environment_side_fidelity(n, m, rho, c);
  r.difference = std::abs(r.lhs.value - r.rhs.value);
  r.determinate = r.lhs.ok() && r.rhs.ok();
  r.pass = r.determinate && r.difference <= tol;
  return r;
}

namespace detail {

/// F_ρ(R∘N, M) for ρ = WσW†, R given by its process matrix.
inline double code_state_fidelity(const CMatrix& j, std::size_t r_in, std::size_t r_out, const Channel& n,
                                  const Channel& m, const CMatrix& w, const CMatrix& sigma) {
  const CMatrix rho = w * sigma * w.adjoint();
  const auto pure = purified(rho);
  const CMatrix a = apply_choi(j, n.apply_with_reference(pure.state, pure.ref), static_cast<Eigen::Index>(r_in),
                               static_cast<Eigen::Index>(r_out), pure.ref);
  const CMatrix b = m.apply_with_reference(pure.state, pure.ref);
  return state_fidelity(hermitian_part(a), b, 1e-9);
}

inline CMatrix normalized_state(const CMatrix& a) {
  const CMatrix s = a * a.adjoint();
  return s / s.trace().real();
}

/// Multistart pattern search for the least fidelity over code states.
inline std::pair<double, CMatrix> minimize_over_code_states(const CMatrix& j, std::size_t r_in, std::size_t r_out,
                                                            const Channel& n, const Channel& m, const CMatrix& w,
                                                            Rng& rng) {
  const auto k = w.cols();
  auto eval = [&](const CMatrix& a) { return code_state_fidelity(j, r_in, r_out, n, m, w, normalized_state(a)); };
  std::vector<CMatrix> starts;
  starts.push_back(CMatrix::Identity(k, k));
  for (Eigen::Index i = 0; i < k; ++i) {
    CMatrix a = CMatrix::Zero(k, k);
    a(i, 0) = 1.0;
    starts.push_back(a);
  }
  for (int t = 0; t < 12; ++t) {
    CMatrix a = CMatrix::Zero(k, k);
    a.col(0) = random_pure_state(rng, k);
    starts.push_back(a);
  }
  for (int t = 0; t < 6; ++t) starts.push_back(random_ginibre(rng, k, k));

  std::vector<std::pair<double, CMatrix>> scored;
  for (const auto& a : starts) scored.emplace_back(eval(a), a);
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::pair<double, CMatrix> best = scored.front();
  const std::size_t refine = std::min<std::size_t>(4, scored.size());
  for (std::size_t s = 0; s < refine; ++s) {
    auto [val, a] = scored[s];
    a /= a.norm();
    double step = 0.3;
    while (step > 1e-4) {
      bool improved = false;
      for (int t = 0; t < 8; ++t) {
        CMatrix cand = a + step * random_ginibre(rng, k, k);
        cand /= cand.norm();
        const double v = eval(cand);
        if (v < val) {
          val = v;
          a = cand;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (val < best.first) best = {val, a};
  }
  return {best.first, normalized_state(best.second)};
}

}  // namespace detail

/// Heuristic max_R min_ρ F_ρ(R∘N, M) over states ρ supported on the code.
/// Alternates a max-min SDP over R on a growing set of states with a search
/// for the worst code state of the current R. The returned value is the
/// search minimum for the best R found; `upper_bound` is the SDP value on
/// the final state set.
inline FidelityResult worst_case_fidelity_seesaw(const Channel& n, const Channel& m, const Code& code, int rounds = 8,
                                                 double tol = 1e-6, std::uint64_t seed = kDefaultSeed) {
  detail::require_dims(n.in_dim() == m.in_dim() && code.physical_dim() == n.in_dim(),
                       "worst_case_fidelity_seesaw: dimension mismatch");
  detail::require(rounds > 0, "worst_case_fidelity_seesaw: rounds must be positive");
  Rng rng(seed);
  const CMatrix& w = code.isometry();
  const auto k = static_cast<Eigen::Index>(code.logical_dim());
  std::vector<CMatrix> states{CMatrix::Identity(k, k) / static_cast<double>(k)};
  FidelityResult best;
  best.heuristic = true;
  best.converged = false;
  best.value = -1.0;
  for (int round = 0; round < rounds; ++round) {
    ChannelFidelityProblem cfg;
    cfg.in_dim = static_cast<Eigen::Index>(n.out_dim());
    cfg.out_dim = static_cast<Eigen::Index>(m.out_dim());
    for (const auto& s : states) {
      const auto pure = detail::purified(w * s * w.adjoint());
      cfg.terms.push_back({n.apply_with_reference(pure.state, pure.ref), m.apply_with_reference(pure.state, pure.ref), pure.ref});
    }
    FidelityResult step = detail::solve_fidelity(cfg, std::min(tol, 1e-7), "unconstrained");
    if (!step.ok() && round > 0) break;
    auto [worst, sigma] =
        detail::minimize_over_code_states(step.optimizer, n.out_dim(), m.out_dim(), n, m, w, rng);
    worst = std::min(worst, step.value);
    if (worst > best.value) {
      best = step;
      best.heuristic = true;
      best.value = worst;
    }
    best.upper_bound = step.value;
    best.iterations = round + 1;
    if (step.value - worst <= tol) {
      best.converged = true;
      break;
    }
    states.push_back(sigma);
  }
  best.value = std::clamp(best.value, 0.0, 1.0);
  return best;
}

}  // namespace cr
