#pragma once

// Test helpers and independent oracles. Nothing here calls into the library's
// algebra or SDP machinery except where noted.

#include <complex>
#include <cstdint>
#include <vector>

#include "cr/channel.hpp"
#include "cr/code.hpp"
#include "cr/matrix.hpp"
#include "cr/random.hpp"

namespace crt {

using cr::CMatrix;
using cr::Complex;
using cr::CVector;

inline CMatrix X() { return (CMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline CMatrix Y() { return (CMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished(); }
inline CMatrix Z() { return (CMatrix(2, 2) << 1, 0, 0, -1).finished(); }
inline CMatrix I2() { return CMatrix::Identity(2, 2); }

/// Kraus operators from a random isometry din → dout·k.
inline cr::Channel random_channel(cr::Rng& rng, Eigen::Index din, Eigen::Index dout, Eigen::Index k) {
  const CMatrix v = cr::random_isometry(rng, dout * k, din);
  std::vector<CMatrix> kraus;
  for (Eigen::Index i = 0; i < k; ++i) {
    CMatrix e(dout, din);
    for (Eigen::Index o = 0; o < dout; ++o) e.row(o) = v.row(o * k + i);
    kraus.push_back(e);
  }
  return cr::Channel(std::move(kraus));
}

/// Generalised Pauli (clock and shift) operator X^a Z^b in dimension m.
inline CMatrix weyl(Eigen::Index m, Eigen::Index a, Eigen::Index b) {
  CMatrix x = CMatrix::Zero(m, m), z = CMatrix::Zero(m, m);
  const double pi = std::acos(-1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    x((i + a) % m, i) = 1.0;
    z(i, i) = std::polar(1.0, 2 * pi * double(b * i) / double(m));
  }
  return x * z;
}

/// Algebra with known Wedderburn structure U (⊕ M_{n_i} ⊗ 1_{m_i}) U†.
struct KnownAlgebra {
  std::size_t dim = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sectors;  // (n_i, m_i)
  CMatrix unitary;
  std::vector<CMatrix> generators;

  [[nodiscard]] std::size_t algebra_dim() const {
    std::size_t s = 0;
    for (auto [n, m] : sectors) s += static_cast<std::size_t>(n * n);
    return s;
  }
  [[nodiscard]] std::size_t commutant_dim() const {
    std::size_t s = 0;
    for (auto [n, m] : sectors) s += static_cast<std::size_t>(m * m);
    return s;
  }

  /// U (⊕ A_i ⊗ 1_{m_i}) U† from per-sector blocks.
  [[nodiscard]] CMatrix assemble(const std::vector<CMatrix>& blocks, bool commutant_side) const {
    CMatrix out = CMatrix::Zero(Eigen::Index(dim), Eigen::Index(dim));
    Eigen::Index off = 0;
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      const auto [n, m] = sectors[s];
      const CMatrix blk = commutant_side ? cr::tensor(CMatrix::Identity(n, n), blocks[s])
                                         : cr::tensor(blocks[s], CMatrix::Identity(m, m));
      out.block(off, off, n * m, n * m) = blk;
      off += n * m;
    }
    return unitary * out * unitary.adjoint();
  }

  /// Conditional expectation by averaging over a unitary 1-design of the
  /// commutant: sector phases times Weyl operators on each multiplicity factor.
  [[nodiscard]] CMatrix twirl(const CMatrix& x) const {
    const auto ns = static_cast<Eigen::Index>(sectors.size());
    const double pi = std::acos(-1.0);
    std::vector<Eigen::Index> radix;
    for (auto [n, m] : sectors) radix.push_back(m * m);
    Eigen::Index count = 1;
    for (auto r : radix) count *= r;
    CMatrix acc = CMatrix::Zero(x.rows(), x.cols());
    std::size_t terms = 0;
    for (Eigen::Index t = 0; t < ns; ++t)
      for (Eigen::Index idx = 0; idx < count; ++idx) {
        std::vector<CMatrix> blocks;
        Eigen::Index rest = idx;
        for (Eigen::Index s = 0; s < ns; ++s) {
          const Eigen::Index m = sectors[std::size_t(s)].second;
          const Eigen::Index g = rest % (m * m);
          rest /= m * m;
          blocks.push_back(std::polar(1.0, 2 * pi * double(t * s) / double(ns)) * weyl(m, g / m, g % m));
        }
        const CMatrix u = assemble(blocks, true);
        acc += u * x * u.adjoint();
        ++terms;
      }
    return acc / double(terms);
  }
};

/// Random sector layout with Σ n_i m_i = d, d ≤ max_dim.
inline KnownAlgebra random_known_algebra(cr::Rng& rng, std::size_t max_dim) {
  std::uniform_int_distribution<int> nsec(1, 3), small(1, 3);
  KnownAlgebra a;
  const int k = nsec(rng);
  for (int s = 0; s < k; ++s) {
    Eigen::Index n = small(rng), m = small(rng);
    if (a.dim + std::size_t(n * m) > max_dim) break;
    a.sectors.emplace_back(n, m);
    a.dim += std::size_t(n * m);
  }
  if (a.sectors.empty()) {
    a.sectors.emplace_back(1, 1);
    a.dim = 1;
  }
  if (a.dim == 1) {  // avoid the trivial 1×1 ambient space
    a.sectors.emplace_back(1, 1);
    a.dim = 2;
  }
  a.unitary = cr::random_unitary(rng, Eigen::Index(a.dim));
  for (int g = 0; g < 2; ++g) {
    std::vector<CMatrix> blocks;
    for (auto [n, m] : a.sectors) blocks.push_back(cr::random_ginibre(rng, n, n));
    a.generators.push_back(a.assemble(blocks, false));
  }
  return a;
}

/// Knill–Laflamme by matrix elements: W†E_i†E_jW must be a multiple of 1.
/// Returns the largest deviation from the best multiple.
inline double kl_matrix_element_defect(const cr::Code& code, const std::vector<CMatrix>& kraus) {
  const CMatrix& w = code.isometry();
  const auto k = w.cols();
  double worst = 0;
  for (const auto& ei : kraus)
    for (const auto& ej : kraus) {
      const CMatrix m = w.adjoint() * ei.adjoint() * ej * w;
      const Complex c = m.trace() / double(k);
      worst = std::max(worst, (m - c * CMatrix::Identity(k, k)).cwiseAbs().maxCoeff());
    }
  return worst;
}

/// F_ρ(N, id) for pure-state ρ and any ρ via ⟨ψ|(N⊗id)(ψ)|ψ⟩ = Σ|Tr(E ρ)|²
/// when ψ is pure on system⊗reference (valid since the target is pure).
inline double fidelity_against_identity(const cr::Channel& n, const CMatrix& rho) {
  double s = 0;
  for (const auto& e : n.kraus()) s += std::norm((e * rho).trace());
  return std::sqrt(s);
}

}  // namespace crt
