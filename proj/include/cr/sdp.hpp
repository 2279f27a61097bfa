#pragma once

// Dense primal-dual interior-point solver for complex Hermitian SDPs.
//
//   maximize   Σ_k Re Tr(C_k X_k)
//   subject to Σ_k Re Tr(A_ik X_k) = b_i,   X_k ⪰ 0.
//
// Linear functionals are given entrywise: an entry (k, r, c, a) contributes
// Re(a · X_k[r, c]). Search directions use Nesterov–Todd scaling with a
// Mehrotra predictor–corrector step.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cr/error.hpp"
#include "cr/matrix.hpp"

namespace cr {

struct SdpEntry {
  std::size_t block = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Complex coeff{1.0, 0.0};
};

/// Real-linear functional X ↦ Σ Re(coeff · X_block[row, col]).
struct SdpFunctional {
  std::vector<SdpEntry> entries;
  void add(std::size_t block, Eigen::Index row, Eigen::Index col, Complex coeff) {
    entries.push_back({block, row, col, coeff});
  }
};

struct SdpEquality {
  SdpFunctional lhs;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<Eigen::Index> blocks;
  SdpFunctional objective;
  std::vector<SdpEquality> equalities;

  std::size_t add_block(Eigen::Index dim) {
    detail::require_dims(dim > 0, "SdpProblem: block dimension must be positive");
    blocks.push_back(dim);
    return blocks.size() - 1;
  }
  void add_equality(SdpFunctional lhs, double rhs) { equalities.push_back({std::move(lhs), rhs}); }

  void validate() const {
    auto check = [&](const SdpFunctional& f) {
      for (const auto& e : f.entries) {
        detail::require_dims(e.block < blocks.size(), "SdpProblem: entry refers to a missing block");
        const Eigen::Index n = blocks[e.block];
        detail::require_dims(e.row >= 0 && e.row < n && e.col >= 0 && e.col < n, "SdpProblem: entry out of range");
        detail::require(std::isfinite(e.coeff.real()) && std::isfinite(e.coeff.imag()), "SdpProblem: non-finite coefficient");
      }
    };
    detail::require(!blocks.empty(), "SdpProblem: no variable blocks");
    check(objective);
    for (const auto& eq : equalities) {
      check(eq.lhs);
      detail::require(std::isfinite(eq.rhs), "SdpProblem: non-finite right-hand side");
    }
  }

  /// Value of a functional on Hermitian blocks.
  [[nodiscard]] static double evaluate(const SdpFunctional& f, const std::vector<CMatrix>& x) {
    double s = 0;
    for (const auto& e : f.entries) s += (e.coeff * x[e.block](e.row, e.col)).real();
    return s;
  }
};

enum class SdpStatus { optimal, max_iter, infeasible, numerical_error };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iter: return "max_iter";
    case SdpStatus::infeasible: return "infeasible";
    default: return "numerical_error";
  }
}

struct SdpOptions {
  double tol = 1e-7;
  int max_iter = 200;
  bool remove_dependent = true;
  double dependency_tol = 1e-9;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_error;
  double value = 0.0;       // primal objective
  double dual_value = 0.0;  // dual objective (upper bound at optimality)
  std::vector<CMatrix> blocks;
  std::vector<CMatrix> dual_slacks;  // Z_k = Σ y_i A_ik − C_k
  RVector dual;                      // y, one entry per original equality
  double primal_residual = 0.0;      // ‖b − A(X)‖ / (1 + ‖b‖)
  double dual_residual = 0.0;        // ‖A*(y) − Z − C‖ / (1 + ‖C‖)
  double gap = 0.0;                  // |p − d| / (1 + |p| + |d|)
  int iterations = 0;
  std::size_t dropped_constraints = 0;
  std::string message;
  [[nodiscard]] bool ok() const { return status == SdpStatus::optimal; }
};

namespace detail {

struct HermTerm {
  Eigen::Index p, q;
  Complex v;  // A[p, q]
};

/// Hermitian operator A with Σ Re Tr(A_k X_k) equal to the functional, stored
/// sparsely per block.
struct SparseHerm {
  std::vector<std::vector<HermTerm>> by_block;

  [[nodiscard]] double apply(const std::vector<CMatrix>& x) const {
    double s = 0;
    for (std::size_t b = 0; b < by_block.size(); ++b)
      for (const auto& t : by_block[b]) s += (t.v * x[b](t.q, t.p)).real();
    return s;
  }
  [[nodiscard]] double norm2() const {
    double s = 0;
    for (const auto& blk : by_block)
      for (const auto& t : blk) s += std::norm(t.v);
    return s;
  }
  [[nodiscard]] double block_norm(std::size_t b) const {
    double s = 0;
    for (const auto& t : by_block[b]) s += std::norm(t.v);
    return std::sqrt(s);
  }
};

inline SparseHerm hermitian_expand(const SdpFunctional& f, std::size_t nblocks) {
  std::vector<std::map<std::pair<Eigen::Index, Eigen::Index>, Complex>> acc(nblocks);
  for (const auto& e : f.entries) {
    auto& m = acc[e.block];
    if (e.row == e.col) {
      m[{e.row, e.row}] += e.coeff.real();
    } else {
      m[{e.col, e.row}] += 0.5 * e.coeff;
      m[{e.row, e.col}] += 0.5 * std::conj(e.coeff);
    }
  }
  SparseHerm h;
  h.by_block.resize(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b)
    for (const auto& [key, v] : acc[b])
      if (v != Complex(0.0)) h.by_block[b].push_back({key.first, key.second, v});
  return h;
}

inline double sparse_inner(const SparseHerm& a, const SparseHerm& b) {
  double s = 0;
  for (std::size_t blk = 0; blk < a.by_block.size(); ++blk) {
    const auto& x = a.by_block[blk];
    const auto& y = b.by_block[blk];
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
      const auto kx = std::make_pair(x[i].p, x[i].q);
      const auto ky = std::make_pair(y[j].p, y[j].q);
      if (kx < ky) {
        ++i;
      } else if (ky < kx) {
        ++j;
      } else {
        s += (std::conj(x[i].v) * y[j].v).real();
        ++i;
        ++j;
      }
    }
  }
  return s;
}

/// Greedy pivoted Cholesky on the constraint Gram matrix. Returns the kept
/// indices, or reports inconsistency of a dropped row.
struct DependencyResult {
  std::vector<std::size_t> kept;
  bool consistent = true;
  double worst_inconsistency = 0.0;
};

inline DependencyResult find_independent(const std::vector<SparseHerm>& a, const RVector& b, double tol) {
  const auto m = static_cast<Eigen::Index>(a.size());
  DependencyResult out;
  if (m == 0) return out;
  RMatrix gram(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l <= k; ++l) gram(k, l) = gram(l, k) = sparse_inner(a[static_cast<std::size_t>(k)], a[static_cast<std::size_t>(l)]);
  // Row-normalise so the pivot threshold is scale free.
  RVector scale(m);
  for (Eigen::Index k = 0; k < m; ++k) scale(k) = gram(k, k) > 0 ? 1.0 / std::sqrt(gram(k, k)) : 0.0;
  const RMatrix g = scale.asDiagonal() * gram * scale.asDiagonal();
  const RVector bs = scale.cwiseProduct(b);

  RMatrix l = RMatrix::Zero(m, m);
  RVector d = g.diagonal();
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::vector<Eigen::Index> piv;
  for (Eigen::Index r = 0; r < m; ++r) {
    Eigen::Index best = -1;
    double best_val = tol;
    for (Eigen::Index k = 0; k < m; ++k)
      if (!used[static_cast<std::size_t>(k)] && d(k) > best_val) {
        best_val = d(k);
        best = k;
      }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = true;
    const auto c = static_cast<Eigen::Index>(piv.size());
    piv.push_back(best);
    const double s = std::sqrt(d(best));
    for (Eigen::Index k = 0; k < m; ++k) {
      if (used[static_cast<std::size_t>(k)] && k != best) continue;
      double v = g(k, best);
      for (Eigen::Index t = 0; t < c; ++t) v -= l(k, t) * l(best, t);
      l(k, c) = v / s;
    }
    for (Eigen::Index k = 0; k < m; ++k)
      if (!used[static_cast<std::size_t>(k)]) d(k) -= l(k, c) * l(k, c);
  }
  std::sort(piv.begin(), piv.end());
  for (auto p : piv) out.kept.push_back(static_cast<std::size_t>(p));
  if (static_cast<Eigen::Index>(piv.size()) == m) return out;

  const auto r = static_cast<Eigen::Index>(piv.size());
  RMatrix gii(r, r);
  RVector bi(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    bi(i) = bs(piv[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < r; ++j) gii(i, j) = g(piv[static_cast<std::size_t>(i)], piv[static_cast<std::size_t>(j)]);
  }
  const Eigen::LDLT<RMatrix> ldlt(gii);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (std::binary_search(piv.begin(), piv.end(), k)) continue;
    if (scale(k) == 0.0) {  // empty functional: needs rhs 0
      out.worst_inconsistency = std::max(out.worst_inconsistency, std::abs(b(k)));
      continue;
    }
    RVector gik(r);
    for (Eigen::Index i = 0; i < r; ++i) gik(i) = g(piv[static_cast<std::size_t>(i)], k);
    const RVector alpha = r > 0 ? RVector(ldlt.solve(gik)) : RVector();
    const double pred = r > 0 ? alpha.dot(bi) : 0.0;
    out.worst_inconsistency = std::max(out.worst_inconsistency, std::abs(pred - bs(k)) / (1.0 + std::abs(bs(k))));
  }
  out.consistent = out.worst_inconsistency <= 1e-7;
  return out;
}

inline double max_step(const Eigen::LLT<CMatrix>& chol, const CMatrix& d) {
  const auto& l = chol.matrixL();
  CMatrix t = l.solve(d);
  t = l.solve(CMatrix(t.adjoint()));
  const CMatrix h = 0.5 * (t + t.adjoint());
  const double lam = Eigen::SelfAdjointEigenSolver<CMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return lam < 0 ? -1.0 / lam : std::numeric_limits<double>::infinity();
}

inline double inner(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].conjugate().cwiseProduct(b[k])).sum().real();
  return s;
}

inline double fro(const std::vector<CMatrix>& a) {
  double s = 0;
  for (const auto& x : a) s += x.squaredNorm();
  return std::sqrt(s);
}

}  // namespace detail

inline SdpSolution solve(const SdpProblem& problem, const SdpOptions& opt = {}) {
  problem.validate();
  const std::size_t nb = problem.blocks.size();
  SdpSolution sol;
  sol.dual = RVector::Zero(static_cast<Eigen::Index>(problem.equalities.size()));

  std::vector<detail::SparseHerm> all_a;
  RVector all_b(static_cast<Eigen::Index>(problem.equalities.size()));
  for (std::size_t k = 0; k < problem.equalities.size(); ++k) {
    all_a.push_back(detail::hermitian_expand(problem.equalities[k].lhs, nb));
    all_b(static_cast<Eigen::Index>(k)) = problem.equalities[k].rhs;
  }
  std::vector<std::size_t> kept(all_a.size());
  for (std::size_t k = 0; k < kept.size(); ++k) kept[k] = k;
  if (opt.remove_dependent) {
    const auto dep = detail::find_independent(all_a, all_b, opt.dependency_tol);
    if (!dep.consistent) {
      sol.status = SdpStatus::infeasible;
      std::ostringstream msg;
      msg << "inconsistent equality constraints (residual " << dep.worst_inconsistency << ")";
      sol.message = msg.str();
      return sol;
    }
    kept = dep.kept;
  }
  sol.dropped_constraints = all_a.size() - kept.size();

  std::vector<detail::SparseHerm> a;
  const auto m = static_cast<Eigen::Index>(kept.size());
  RVector b(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    a.push_back(all_a[kept[static_cast<std::size_t>(k)]]);
    b(k) = all_b(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(k)]));
  }
  // Minimise ⟨Ĉ, X⟩ with Ĉ = −C.
  const detail::SparseHerm chat_sparse = detail::hermitian_expand(problem.objective, nb);
  std::vector<CMatrix> chat(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    chat[k] = CMatrix::Zero(problem.blocks[k], problem.blocks[k]);
    for (const auto& t : chat_sparse.by_block[k]) chat[k](t.p, t.q) -= t.v;
  }

  std::vector<std::vector<std::size_t>> touching(nb);
  for (Eigen::Index k = 0; k < m; ++k)
    for (std::size_t blk = 0; blk < nb; ++blk)
      if (!a[static_cast<std::size_t>(k)].by_block[blk].empty()) touching[blk].push_back(static_cast<std::size_t>(k));

  auto op_a = [&](const std::vector<CMatrix>& x) {
    RVector r(m);
    for (Eigen::Index k = 0; k < m; ++k) r(k) = a[static_cast<std::size_t>(k)].apply(x);
    return r;
  };
  auto op_at = [&](const RVector& y) {
    std::vector<CMatrix> r(nb);
    for (std::size_t blk = 0; blk < nb; ++blk) r[blk] = CMatrix::Zero(problem.blocks[blk], problem.blocks[blk]);
    for (Eigen::Index k = 0; k < m; ++k)
      for (std::size_t blk = 0; blk < nb; ++blk)
        for (const auto& t : a[static_cast<std::size_t>(k)].by_block[blk]) r[blk](t.p, t.q) += y(k) * t.v;
    return r;
  };

  // Starting point.
  std::vector<CMatrix> x(nb), z(nb);
  double n_total = 0;
  for (std::size_t blk = 0; blk < nb; ++blk) {
    const auto n = static_cast<double>(problem.blocks[blk]);
    n_total += n;
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), chat[blk].norm()});
    for (Eigen::Index k = 0; k < m; ++k) {
      const double an = a[static_cast<std::size_t>(k)].block_norm(blk);
      if (an == 0) continue;
      xi = std::max(xi, n * (1.0 + std::abs(b(k))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    x[blk] = xi * CMatrix::Identity(problem.blocks[blk], problem.blocks[blk]);
    z[blk] = eta * CMatrix::Identity(problem.blocks[blk], problem.blocks[blk]);
  }
  RVector y = RVector::Zero(m);
  const double b_norm = b.norm();
  const double c_norm = detail::fro(chat);

  auto finish = [&](SdpStatus status, int iter, const std::string& msg) {
    sol.status = status;
    sol.iterations = iter;
    sol.message = msg;
    sol.blocks = x;
    sol.value = -detail::inner(chat, x);
    sol.dual_value = -b.dot(y);
    sol.dual_slacks = z;
    for (Eigen::Index k = 0; k < m; ++k) sol.dual(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(k)])) = -y(k);
    return sol;
  };

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    const RVector rp = b - op_a(x);
    std::vector<CMatrix> rd = op_at(y);
    for (std::size_t blk = 0; blk < nb; ++blk) rd[blk] = chat[blk] - z[blk] - rd[blk];
    const double pobj = detail::inner(chat, x);
    const double dobj = b.dot(y);
    sol.primal_residual = rp.norm() / (1.0 + b_norm);
    sol.dual_residual = detail::fro(rd) / (1.0 + c_norm);
    sol.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double xz = detail::inner(x, z);
    if (sol.primal_residual <= opt.tol && sol.dual_residual <= opt.tol && sol.gap <= opt.tol && xz / n_total <= opt.tol)
      return finish(SdpStatus::optimal, iter, "converged");
    if (iter == opt.max_iter) break;
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || detail::fro(x) > 1e12 || y.norm() > 1e12)
      return finish(SdpStatus::infeasible, iter, "iterates diverged");
    const double mu = xz / n_total;

    // Nesterov–Todd scaling point per block.
    std::vector<CMatrix> w(nb), g(nb), ginv(nb);
    std::vector<RVector> lam(nb);
    std::vector<Eigen::LLT<CMatrix>> chol_x(nb), chol_z(nb);
    for (std::size_t blk = 0; blk < nb; ++blk) {
      chol_x[blk].compute(x[blk]);
      chol_z[blk].compute(z[blk]);
      if (chol_x[blk].info() != Eigen::Success || chol_z[blk].info() != Eigen::Success)
        return finish(SdpStatus::numerical_error, iter, "iterate left the PSD cone");
      const CMatrix lx = chol_x[blk].matrixL();
      const CMatrix lz = chol_z[blk].matrixL();
      Eigen::JacobiSVD<CMatrix> svd(lz.adjoint() * lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
      lam[blk] = svd.singularValues();
      const CMatrix& q = svd.matrixV();
      const RVector isq = lam[blk].cwiseSqrt().cwiseInverse();
      g[blk] = lx * q * isq.asDiagonal();
      ginv[blk] = lam[blk].cwiseSqrt().asDiagonal() * q.adjoint() * chol_x[blk].matrixL().solve(CMatrix::Identity(lx.rows(), lx.cols()));
      w[blk] = g[blk] * g[blk].adjoint();
    }

    // Schur complement M_kl = ⟨A_k, W A_l W⟩.
    RMatrix schur = RMatrix::Zero(m, m);
    for (std::size_t blk = 0; blk < nb; ++blk) {
      const CMatrix& wb = w[blk];
      const Eigen::Index n = problem.blocks[blk];
      for (std::size_t li = 0; li < touching[blk].size(); ++li) {
        const std::size_t l = touching[blk][li];
        // W A_l W = W[:, P] · diag(v) · W[Q, :] as one product
        const auto& terms = a[l].by_block[blk];
        const auto nt = static_cast<Eigen::Index>(terms.size());
        CMatrix left(n, nt), right(nt, n);
        for (Eigen::Index i = 0; i < nt; ++i) {
          const auto& t = terms[static_cast<std::size_t>(i)];
          left.col(i) = wb.col(t.p);
          right.row(i) = t.v * wb.row(t.q);
        }
        const CMatrix gl = left * right;
        for (std::size_t ki = li; ki < touching[blk].size(); ++ki) {
          const std::size_t k = touching[blk][ki];
          double s = 0;
          for (const auto& t : a[k].by_block[blk]) s += (t.v * gl(t.q, t.p)).real();
          schur(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) += s;
        }
      }
    }
    schur.triangularView<Eigen::StrictlyUpper>() = schur.transpose().triangularView<Eigen::StrictlyUpper>();
    Eigen::LLT<RMatrix> schur_chol(schur);
    if (schur_chol.info() != Eigen::Success) {
      const double reg = 1e-13 * std::max(1.0, schur.diagonal().maxCoeff());
      schur_chol.compute(schur + reg * RMatrix::Identity(m, m));
      if (schur_chol.info() != Eigen::Success)
        return finish(SdpStatus::numerical_error, iter, "Schur complement is not positive definite");
    }

    auto direction = [&](const std::vector<CMatrix>& rc, std::vector<CMatrix>& dx, RVector& dy, std::vector<CMatrix>& dz) {
      std::vector<CMatrix> wrdw(nb);
      for (std::size_t blk = 0; blk < nb; ++blk) wrdw[blk] = w[blk] * rd[blk] * w[blk];
      const RVector rhs = rp - op_a(rc) + op_a(wrdw);
      dy = schur_chol.solve(rhs);
      dz = op_at(dy);
      dx.resize(nb);
      for (std::size_t blk = 0; blk < nb; ++blk) {
        dz[blk] = rd[blk] - dz[blk];
        dx[blk] = rc[blk] - w[blk] * dz[blk] * w[blk];
        dx[blk] = 0.5 * (dx[blk] + dx[blk].adjoint());
        dz[blk] = 0.5 * (dz[blk] + dz[blk].adjoint());
      }
    };
    auto comp_rhs = [&](double target, const std::vector<CMatrix>* dxa, const std::vector<CMatrix>* dza) {
      std::vector<CMatrix> rc(nb);
      for (std::size_t blk = 0; blk < nb; ++blk) {
        const RVector& l = lam[blk];
        const Eigen::Index n = l.size();
        CMatrix r = CMatrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) r(i, i) = target - l(i) * l(i);
        if (dxa != nullptr) {
          const CMatrix sx = ginv[blk] * (*dxa)[blk] * ginv[blk].adjoint();
          const CMatrix sz = g[blk].adjoint() * (*dza)[blk] * g[blk];
          const CMatrix prod = sx * sz;
          r -= 0.5 * (prod + prod.adjoint());
        }
        CMatrix t(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j) t(i, j) = 2.0 * r(i, j) / (l(i) + l(j));
        rc[blk] = g[blk] * t * g[blk].adjoint();
      }
      return rc;
    };
    auto steps = [&](const std::vector<CMatrix>& dx, const std::vector<CMatrix>& dz) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t blk = 0; blk < nb; ++blk) {
        ap = std::min(ap, detail::max_step(chol_x[blk], dx[blk]));
        ad = std::min(ad, detail::max_step(chol_z[blk], dz[blk]));
      }
      return std::make_pair(ap, ad);
    };

    std::vector<CMatrix> dxa, dza, dx, dz;
    RVector dya, dy;
    direction(comp_rhs(0.0, nullptr, nullptr), dxa, dya, dza);
    auto [apa, ada] = steps(dxa, dza);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double xz_aff = 0;
    for (std::size_t blk = 0; blk < nb; ++blk)
      xz_aff += ((x[blk] + apa * dxa[blk]).conjugate().cwiseProduct(z[blk] + ada * dza[blk])).sum().real();
    double sigma = std::pow(std::max(0.0, xz_aff) / xz, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);
    direction(comp_rhs(sigma * mu, &dxa, &dza), dx, dy, dz);
    auto [ap, ad] = steps(dx, dz);
    const double gamma = 0.9 + 0.09 * std::min(apa, ada);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    for (std::size_t blk = 0; blk < nb; ++blk) {
      x[blk] += ap * dx[blk];
      z[blk] += ad * dz[blk];
      x[blk] = 0.5 * (x[blk] + x[blk].adjoint());
      z[blk] = 0.5 * (z[blk] + z[blk].adjoint());
    }
    y += ad * dy;
  }
  return finish(SdpStatus::max_iter, opt.max_iter, "iteration limit reached");
}

// ---------------------------------------------------------------------------
// Text dump format
//
//   sdp 1
//   blocks <count> <n_1> ... <n_count>
//   objective <entries>
//   <block> <row> <col> <re> <im>          (one line per entry)
//   equalities <count>
//   equality <entries> <rhs>
//   <block> <row> <col> <re> <im>
//   ...
//
// Solutions are written as
//
//   sdp-solution 1
//   status <name> iterations <n>
//   value <p> dual <d> gap <g> presidual <r> dresidual <r>
//   block <k> <n>
//   <n rows of n pairs "re im">
// ---------------------------------------------------------------------------

inline void write_problem(std::ostream& os, const SdpProblem& p) {
  os.precision(17);
  os << "sdp 1\nblocks " << p.blocks.size();
  for (auto n : p.blocks) os << ' ' << n;
  auto entries = [&](const SdpFunctional& f) {
    for (const auto& e : f.entries)
      os << e.block << ' ' << e.row << ' ' << e.col << ' ' << e.coeff.real() << ' ' << e.coeff.imag() << '\n';
  };
  os << "\nobjective " << p.objective.entries.size() << '\n';
  entries(p.objective);
  os << "equalities " << p.equalities.size() << '\n';
  for (const auto& eq : p.equalities) {
    os << "equality " << eq.lhs.entries.size() << ' ' << eq.rhs << '\n';
    entries(eq.lhs);
  }
}

inline SdpProblem read_problem(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(is >> w) || w != word) throw Error("read_problem: expected '" + word + "'");
  };
  auto read_entries = [&](std::size_t count, SdpFunctional& f) {
    for (std::size_t i = 0; i < count; ++i) {
      SdpEntry e;
      double re = 0, im = 0;
      if (!(is >> e.block >> e.row >> e.col >> re >> im)) throw Error("read_problem: truncated entry list");
      e.coeff = Complex(re, im);
      f.entries.push_back(e);
    }
  };
  SdpProblem p;
  int version = 0;
  expect("sdp");
  if (!(is >> version) || version != 1) throw Error("read_problem: unsupported version");
  expect("blocks");
  std::size_t nb = 0;
  is >> nb;
  for (std::size_t k = 0; k < nb; ++k) {
    Eigen::Index n = 0;
    if (!(is >> n)) throw Error("read_problem: truncated block list");
    p.add_block(n);
  }
  expect("objective");
  std::size_t count = 0;
  is >> count;
  read_entries(count, p.objective);
  expect("equalities");
  std::size_t neq = 0;
  is >> neq;
  for (std::size_t k = 0; k < neq; ++k) {
    expect("equality");
    SdpEquality eq;
    if (!(is >> count >> eq.rhs)) throw Error("read_problem: truncated equality header");
    read_entries(count, eq.lhs);
    p.equalities.push_back(std::move(eq));
  }
  p.validate();
  return p;
}

inline void write_solution(std::ostream& os, const SdpSolution& s) {
  os.precision(17);
  os << "sdp-solution 1\nstatus " << to_string(s.status) << " iterations " << s.iterations << '\n'
     << "value " << s.value << " dual " << s.dual_value << " gap " << s.gap << " presidual " << s.primal_residual
     << " dresidual " << s.dual_residual << '\n';
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    const auto& b = s.blocks[k];
    os << "block " << k << ' ' << b.rows() << '\n';
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) os << (j ? " " : "") << b(i, j).real() << ' ' << b(i, j).imag();
      os << '\n';
    }
  }
}

}  // namespace cr
