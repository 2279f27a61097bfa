#pragma once

#include <cstddef>

#include "cr/channel.hpp"
#include "cr/matrix.hpp"

namespace cr {

/// Isometric encoding W of a k-dimensional logical space into d dimensions.
class Code {
 public:
  Code() = default;

  explicit Code(CMatrix isometry, double tol = 1e-10) : w_(std::move(isometry)) {
    detail::require_dims(w_.rows() >= w_.cols() && w_.cols() > 0, "Code: isometry must be d×k with d ≥ k ≥ 1");
    detail::require(max_abs(w_.adjoint() * w_ - cr::identity(logical_dim())) <= tol,
                    "Code: W†W differs from the identity");
  }

  /// Identity code on a d-dimensional space.
  static Code identity(std::size_t d) { return Code(cr::identity(d)); }

  /// Code spanned by the given orthonormal columns of the physical basis.
  static Code from_basis_states(std::size_t d, const std::vector<std::size_t>& states) {
    CMatrix w = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(states.size()));
    for (std::size_t c = 0; c < states.size(); ++c)
      w(static_cast<Eigen::Index>(states[c]), static_cast<Eigen::Index>(c)) = 1.0;
    return Code(std::move(w));
  }

  [[nodiscard]] std::size_t logical_dim() const { return static_cast<std::size_t>(w_.cols()); }
  [[nodiscard]] std::size_t physical_dim() const { return static_cast<std::size_t>(w_.rows()); }
  [[nodiscard]] const CMatrix& isometry() const { return w_; }
  [[nodiscard]] CMatrix projector() const { return w_ * w_.adjoint(); }
  /// Encoding channel ρ ↦ WρW†.
  [[nodiscard]] Channel encoding() const { return Channel({w_}); }
  /// Maximally mixed logical state, encoded.
  [[nodiscard]] CMatrix maximally_mixed() const {
    return projector() / static_cast<double>(logical_dim());
  }

 private:
  CMatrix w_;
};

}  // namespace cr
