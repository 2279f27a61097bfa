#pragma once

// Seeded generators for random states, unitaries and isometries. Every
// routine takes the engine by reference so callers control reproducibility.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>

#include "cr/matrix.hpp"

namespace cr {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20190601;

/// Seed from the CONSTRAINED_RECOVERY_SEED environment variable, else the
/// library default.
inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("CONSTRAINED_RECOVERY_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
    }
  }
  return kDefaultSeed;
}

inline CMatrix random_ginibre(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

/// Haar-random isometry of shape rows×cols (rows ≥ cols).
inline CMatrix random_isometry(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  detail::require_dims(rows >= cols, "random_isometry: rows < cols");
  const CMatrix g = random_ginibre(rng, rows, cols);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  const CMatrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline CMatrix random_unitary(Rng& rng, Eigen::Index d) { return random_isometry(rng, d, d); }

/// Random density matrix of the given rank (Ginibre / induced measure).
inline CMatrix random_density(Rng& rng, Eigen::Index d, std::optional<Eigen::Index> rank = {}) {
  const CMatrix g = random_ginibre(rng, d, rank.value_or(d));
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline CMatrix random_hermitian(Rng& rng, Eigen::Index d) {
  const CMatrix g = random_ginibre(rng, d, d);
  return hermitian_part(g);
}

inline CVector random_pure_state(Rng& rng, Eigen::Index d) {
  CVector v = random_ginibre(rng, d, 1).col(0);
  return v / v.norm();
}

}  // namespace cr
