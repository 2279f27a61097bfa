#pragma once

// Physicality and locality predicates, local complementary channels and the
// equivalence test for complementary channels.

#include <optional>
#include <vector>

#include "cr/algebra.hpp"
#include "cr/channel.hpp"
#include "cr/fidelity_sdp.hpp"
#include "cr/sdp.hpp"

namespace cr {

/// Local complementary channel N̂ᴮ, built as the ordinary complement of
/// P_{ℬ′}∘N. Output factors: (environment of P_{ℬ′}) ⊗ (environment of N).
inline Channel local_complementary(const Channel& n, const AlgebraBasis& b) {
  detail::require_dims(b.ambient_dim() == n.out_dim(), "local_complementary: algebra lives on a different space");
  const Channel p = conditional_expectation(commutant(b));
  return complementary(compose(p, n, false));
}

/// Largest deviation between the constructive local complement and the
/// defining relation N̂ᴮ†(Y ⊗ E) = V†(P_ℬ(B) ⊗ E)V, where Y is any
/// environment operator of P_{ℬ′} whose image under the complement's adjoint
/// is P_ℬ(B). Checked for B and E running over matrix units.
inline double local_complementary_residual(const Channel& n, const AlgebraBasis& b) {
  detail::require_dims(b.ambient_dim() == n.out_dim(), "local_complementary_residual: dimension mismatch");
  const Channel p_comm = conditional_expectation(commutant(b));
  const Channel p_b = conditional_expectation(b);
  const Channel pc = complementary(p_comm);
  const Channel lc = complementary(compose(p_comm, n, false));
  const std::size_t d = n.out_dim();
  const std::size_t kp = p_comm.kraus_rank();
  const std::size_t kn = n.kraus_rank();
  const CMatrix& v = n.stinespring();

  // Linear map Y ↦ P̂c†(Y) on row-major vectors; least-squares preimages.
  const CMatrix adj = detail::linear_map_matrix([&](const CMatrix& y) { return pc.adjoint_apply(y); },
                                                static_cast<Eigen::Index>(kp));
  const Eigen::CompleteOrthogonalDecomposition<CMatrix> solver(adj);
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const CMatrix pb = p_b.adjoint_apply(matrix_unit(d, i, j));
      const CVector yv = solver.solve(vec(pb));
      const CMatrix y = unvec(yv, static_cast<Eigen::Index>(kp), static_cast<Eigen::Index>(kp));
      worst = std::max(worst, max_abs(pc.adjoint_apply(y) - pb));
      for (std::size_t k = 0; k < kn; ++k)
        for (std::size_t l = 0; l < kn; ++l) {
          const CMatrix e = matrix_unit(kn, k, l);
          const CMatrix definitional = v.adjoint() * tensor(pb, e) * v;
          const CMatrix constructive = lc.adjoint_apply(tensor(y, e));
          worst = std::max(worst, max_abs(definitional - constructive));
        }
    }
  return worst;
}

struct PhysicalityReport {
  bool physical = false;
  double residual = 0.0;  // ‖Choi(QNP) − Choi(QN)‖_F
};

inline double idempotence_residual(const Channel& p) {
  return (compose(p, p, false).choi() - p.choi()).norm();
}

/// Q N P = Q N as superoperators.
inline PhysicalityReport is_physical(const Channel& n, const Channel& p, const Channel& q, double tol = 1e-8) {
  detail::require_dims(p.in_dim() == p.out_dim() && q.in_dim() == q.out_dim() && p.out_dim() == n.in_dim() &&
                           q.in_dim() == n.out_dim(),
                       "is_physical: dimension mismatch");
  detail::require(idempotence_residual(p) <= 1e-8, "is_physical: source projector is not idempotent");
  detail::require(idempotence_residual(q) <= 1e-8, "is_physical: target projector is not idempotent");
  const Channel qn = compose(q, n, false);
  PhysicalityReport r;
  r.residual = (compose(qn, p, false).choi() - qn.choi()).norm();
  r.physical = r.residual <= tol;
  return r;
}

struct FixesReport {
  double adjoint_residual = 0.0;      // max_B ‖N̂(B) − B‖_max
  double commutation_residual = 0.0;  // max_{i,B} ‖[E_i, B]‖_max
  bool adjoint_fixes = false;
  bool kraus_commute = false;
  [[nodiscard]] bool ok() const { return adjoint_fixes && kraus_commute; }
};

inline FixesReport fixes_algebra(const Channel& n, const AlgebraBasis& b, double tol = 1e-8) {
  detail::require_dims(n.in_dim() == n.out_dim() && b.ambient_dim() == n.in_dim(), "fixes_algebra: dimension mismatch");
  FixesReport r;
  for (const auto& x : b.basis()) {
    r.adjoint_residual = std::max(r.adjoint_residual, max_abs(n.adjoint_apply(x) - x));
    for (const auto& e : n.kraus()) r.commutation_residual = std::max(r.commutation_residual, max_abs(e * x - x * e));
  }
  r.adjoint_fixes = r.adjoint_residual <= tol;
  r.kraus_commute = r.commutation_residual <= tol;
  return r;
}

/// N̂(𝒜) ⊆ 𝒜; returns the largest relative projection residual.
inline double maps_into_residual(const Channel& n, const AlgebraBasis& a) {
  detail::require_dims(n.in_dim() == n.out_dim() && a.ambient_dim() == n.in_dim(), "maps_into: dimension mismatch");
  double worst = 0.0;
  for (const auto& x : a.basis()) worst = std::max(worst, a.projection_residual(n.adjoint_apply(x)));
  return worst;
}

inline bool maps_into(const Channel& n, const AlgebraBasis& a, double tol = 1e-8) {
  return maps_into_residual(n, a) <= tol;
}

struct LocalityReport {
  double maps_into_residual = 0.0;
  FixesReport fixes;
  bool local = false;
  bool strong = false;  // ℬ = 𝒜′
};

/// Locality of N to 𝒜 with effective complement ℬ ⊆ 𝒜′.
inline LocalityReport is_local(const Channel& n, const AlgebraBasis& a, const AlgebraBasis& b, double tol = 1e-8) {
  const AlgebraBasis a_comm = commutant(a);
  detail::require(is_subalgebra(b, a_comm, 1e-8), "is_local: the complement algebra does not commute with the local algebra");
  LocalityReport r;
  r.maps_into_residual = maps_into_residual(n, a);
  r.fixes = fixes_algebra(n, b, tol);
  r.local = r.maps_into_residual <= tol && r.fixes.ok();
  r.strong = same_span(b, a_comm);
  return r;
}

struct EquivalenceReport {
  bool equivalent = false;
  bool determinate = true;
  double forward_residual = 0.0;   // min_R ‖Choi(R∘a) − Choi(b)‖_op
  double backward_residual = 0.0;  // min_S ‖Choi(S∘b) − Choi(a)‖_op
  std::string message;
};

namespace detail {
/// min over CPTP R of the operator norm of Choi(R∘a) − Choi(b).
inline SdpSolution post_processing_distance(const Channel& a, const Channel& b, double& residual) {
  const auto in = static_cast<Eigen::Index>(a.in_dim());
  const auto ra = static_cast<Eigen::Index>(a.out_dim());
  const auto rb = static_cast<Eigen::Index>(b.out_dim());
  const Eigen::Index n = rb * in;
  SdpProblem p;
  const std::size_t jb = p.add_block(rb * ra);
  const std::size_t s1 = p.add_block(n);  // t·1 − D
  const std::size_t s2 = p.add_block(n);  // t·1 + D
  const std::size_t tb = p.add_block(1);
  p.objective.add(tb, 0, 0, -1.0);
  const CMatrix t = linear_map_matrix([&](const CMatrix& j) { return apply_choi(j, a.choi(), ra, rb, in); }, rb * ra);
  const CMatrix target = b.choi();
  // D(J) = T J − Choi(b).   S1 + D − t = 0,   S2 − D − t = 0.
  for (int sign : {1, -1}) {
    const std::size_t slack = sign == 1 ? s1 : s2;
    for (Eigen::Index al = 0; al < n; ++al)
      for (Eigen::Index be = al; be < n; ++be)
        for (int part = 0; part < (al == be ? 1 : 2); ++part) {
          const Complex rot = part == 0 ? Complex(1.0) : Complex(0.0, -1.0);
          SdpFunctional f;
          f.add(slack, al, be, rot);
          for (Eigen::Index q = 0; q < t.cols(); ++q) {
            const Complex c = t(al * n + be, q);
            if (std::abs(c) > 1e-14) f.add(jb, q / (rb * ra), q % (rb * ra), double(sign) * rot * c);
          }
          if (al == be) f.add(tb, 0, 0, -1.0);
          const Complex rhs = double(sign) * target(al, be);
          p.add_equality(std::move(f), part == 0 ? rhs.real() : (rot * rhs).real());
        }
  }
  const DimShape shape{{static_cast<std::size_t>(rb), static_cast<std::size_t>(ra)}};
  const CMatrix tp = linear_map_matrix([&](const CMatrix& j) { return partial_trace(j, shape, {1}); }, rb * ra);
  add_matrix_equality(p, jb, tp, rb * ra, CMatrix::Identity(ra, ra));
  SdpSolution s = solve(p);
  residual = -s.value;
  return s;
}
}  // namespace detail

/// Decides whether b = R∘a and a = S∘b for some channels R, S.
inline EquivalenceReport equivalent_complements_report(const Channel& a, const Channel& b, double tol = 1e-6) {
  detail::require_dims(a.in_dim() == b.in_dim(), "equivalent_complements: input dimensions differ");
  EquivalenceReport r;
  const SdpSolution f = detail::post_processing_distance(a, b, r.forward_residual);
  const SdpSolution g = detail::post_processing_distance(b, a, r.backward_residual);
  r.determinate = f.ok() && g.ok();
  if (!r.determinate) r.message = std::string("solver status ") + to_string(f.status) + "/" + to_string(g.status);
  r.equivalent = r.forward_residual <= tol && r.backward_residual <= tol;
  return r;
}

inline bool equivalent_complements(const Channel& a, const Channel& b, double tol = 1e-6) {
  const auto r = equivalent_complements_report(a, b, tol);
  if (!r.determinate) throw NumericalError("equivalent_complements: indeterminate (" + r.message + ")");
  return r.equivalent;
}

}  // namespace cr
