#pragma once

// Semidefinite formulations of the state fidelity and of channel-fidelity
// maximisation over a process matrix.
//
// Fidelity certificate: for σ = SS† (S of full column rank r),
//   f(Y, σ) = max { Re Tr(S†K) : [[Y, K], [K†, 1_r]] ⪰ 0 }.

#include <functional>
#include <optional>
#include <vector>

#include "cr/channel.hpp"
#include "cr/matrix.hpp"
#include "cr/sdp.hpp"

namespace cr {

namespace detail {

/// Column factor S with SS† = σ, keeping eigenvalues above cutoff·max(1, λ_max).
inline CMatrix psd_factor(const CMatrix& sigma, double cutoff = 1e-13) {
  const auto es = hermitian_eigen(sigma, 1e-8);
  const RVector& ev = es.eigenvalues();
  const CMatrix& vecs = es.eigenvectors();
  const double top = std::max(1.0, ev.maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff * top) keep.push_back(i);
  CMatrix s(sigma.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    s.col(static_cast<Eigen::Index>(c)) = std::sqrt(ev(keep[c])) * vecs.col(keep[c]);
  return s;
}

/// Adds Σ_pq T[(α,β),(p,q)] X_jblock[p,q] − Z_slack[off+α, off+β] = rhs[α,β]
/// for all α ≤ β (real and imaginary parts). T acts on row-major vec(X).
inline void add_matrix_equality(SdpProblem& prob, std::size_t jblock, const CMatrix& t, Eigen::Index fdim,
                                const CMatrix& rhs, std::optional<std::pair<std::size_t, Eigen::Index>> slack = {},
                                double drop = 1e-14) {
  const Eigen::Index d = rhs.rows();
  const Complex minus_i(0.0, -1.0);
  for (Eigen::Index al = 0; al < d; ++al)
    for (Eigen::Index be = al; be < d; ++be) {
      const Eigen::Index row = al * d + be;
      for (int part = 0; part < (al == be ? 1 : 2); ++part) {
        const Complex rot = part == 0 ? Complex(1.0) : minus_i;
        SdpFunctional f;
        for (Eigen::Index p = 0; p < fdim; ++p)
          for (Eigen::Index q = 0; q < fdim; ++q) {
            const Complex c = t(row, p * fdim + q);
            if (std::abs(c) > drop) f.add(jblock, p, q, rot * c);
          }
        if (slack) f.add(slack->first, slack->second + al, slack->second + be, -rot);
        const double value = part == 0 ? rhs(al, be).real() : rhs(al, be).imag();
        prob.add_equality(std::move(f), value);
      }
    }
}

/// Z[off+α, off+β] = m[α, β] for a Hermitian m.
inline void add_block_equals(SdpProblem& prob, std::size_t blk, Eigen::Index off, const CMatrix& m) {
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = a; b < m.cols(); ++b) {
      SdpFunctional re;
      re.add(blk, off + a, off + b, 1.0);
      prob.add_equality(std::move(re), m(a, b).real());
      if (a != b) {
        SdpFunctional im;
        im.add(blk, off + a, off + b, Complex(0.0, -1.0));
        prob.add_equality(std::move(im), m(a, b).imag());
      }
    }
}

/// Like add_matrix_equality without a slack block, imposing every entry
/// (real and imaginary parts) of a possibly non-Hermitian matrix equation.
inline void add_full_matrix_equality(SdpProblem& prob, std::size_t jblock, const CMatrix& t, Eigen::Index fdim,
                                     const CMatrix& rhs, double drop = 1e-14) {
  const Eigen::Index rows = rhs.rows(), cols = rhs.cols();
  for (Eigen::Index al = 0; al < rows; ++al)
    for (Eigen::Index be = 0; be < cols; ++be)
      for (int part = 0; part < 2; ++part) {
        const Complex rot = part == 0 ? Complex(1.0) : Complex(0.0, -1.0);
        SdpFunctional f;
        for (Eigen::Index p = 0; p < fdim; ++p)
          for (Eigen::Index q = 0; q < fdim; ++q) {
            const Complex c = t(al * cols + be, p * fdim + q);
            if (std::abs(c) > drop) f.add(jblock, p, q, rot * c);
          }
        const double value = part == 0 ? rhs(al, be).real() : rhs(al, be).imag();
        if (f.entries.empty() && std::abs(value) == 0.0) continue;
        prob.add_equality(std::move(f), value);
      }
}

/// Matrix of a complex-linear map on f×f matrices (row-major vec), sampled on
/// matrix units.
inline CMatrix linear_map_matrix(const std::function<CMatrix(const CMatrix&)>& map, Eigen::Index fdim) {
  CMatrix out;
  for (Eigen::Index p = 0; p < fdim; ++p)
    for (Eigen::Index q = 0; q < fdim; ++q) {
      CMatrix unit = CMatrix::Zero(fdim, fdim);
      unit(p, q) = 1.0;
      const CMatrix img = map(unit);
      if (out.size() == 0) out = CMatrix::Zero(img.size(), fdim * fdim);
      out.col(p * fdim + q) = vec(img);
    }
  return out;
}

}  // namespace detail

/// f(ρ, σ) as an SDP. With V spanning supp ρ and σ = SS†, the certificate
/// block is [[V†ρV, K], [K†, 1_r]] and the objective Re Tr((V†S)†K); both
/// diagonal blocks are then positive definite, so a strictly feasible point
/// exists even for rank-deficient inputs.
inline SdpProblem build_state_fidelity_sdp(const CMatrix& rho, const CMatrix& sigma) {
  detail::require_dims(rho.rows() == rho.cols() && sigma.rows() == sigma.cols() && rho.rows() == sigma.rows(),
                       "build_state_fidelity_sdp: dimension mismatch");
  detail::require(is_psd(rho, 1e-10) && is_psd(sigma, 1e-10), "build_state_fidelity_sdp: inputs must be PSD");
  const CMatrix v = range_basis(hermitian_part(rho), 1e-12);
  const CMatrix s = v.adjoint() * detail::psd_factor(sigma);
  const Eigen::Index d = v.cols(), r = s.cols();
  SdpProblem p;
  const std::size_t blk = p.add_block(std::max<Eigen::Index>(d + r, 1));
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index t = 0; t < r; ++t)
      if (std::abs(s(a, t)) > 0) p.objective.add(blk, a, d + t, std::conj(s(a, t)));
  const CMatrix rho_c = v.adjoint() * rho * v;
  detail::add_block_equals(p, blk, 0, rho_c);
  detail::add_block_equals(p, blk, d, CMatrix::Identity(r, r));
  return p;
}

/// One fidelity term f(target, ((post∘R) ⊗ id_ref)(input)).
struct FidelityTerm {
  CMatrix input;   // on in ⊗ ref
  CMatrix target;  // on out′ ⊗ ref (out′ = post output, or out)
  Eigen::Index ref_dim = 0;
};

/// maximise min_t f_t over process matrices J of maps R: in → out, optionally
/// restricted to J = U J′ U† (face) and to R̂(B) = B. With a single term the
/// objective is that term's fidelity.
struct ChannelFidelityProblem {
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  std::vector<FidelityTerm> terms;
  std::optional<Channel> post;   // out → out′ applied after R
  std::optional<CMatrix> face;   // (out·in) × f isometry
  std::vector<CMatrix> fixed;    // R̂(B) = B (in == out)
  bool trace_preserving = true;
};

struct ChannelFidelitySdp {
  SdpProblem problem;
  std::size_t choi_block = 0;
  std::vector<std::size_t> fidelity_blocks;
  std::vector<CMatrix> supports;  // per term: isometry onto the reachable output support
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  CMatrix face;  // identity when unrestricted

  /// Process matrix J = U J′ U† of the optimiser.
  [[nodiscard]] CMatrix choi(const SdpSolution& s) const {
    const CMatrix& jp = s.blocks.at(choi_block);
    const CMatrix j = face * jp * face.adjoint();
    return 0.5 * (j + j.adjoint());
  }
};

namespace detail {
/// ((R ⊗ id)(τ))[(o,s),(o′,s′)] = Σ_ab J[(o,a),(o′,b)] τ[(a,s),(b,s′)].
inline CMatrix apply_choi(const CMatrix& j, const CMatrix& tau, Eigen::Index in, Eigen::Index out, Eigen::Index ref) {
  CMatrix y = CMatrix::Zero(out * ref, out * ref);
  for (Eigen::Index a = 0; a < in; ++a)
    for (Eigen::Index b = 0; b < in; ++b) {
      const CMatrix tab = tau.block(a * ref, b * ref, ref, ref);
      if (tab.cwiseAbs().maxCoeff() == 0.0) continue;
      const CMatrix jab = j(Eigen::seqN(a, out, in), Eigen::seqN(b, out, in));  // J[(o,a),(o′,b)]
      if (jab.cwiseAbs().maxCoeff() == 0.0) continue;
      y += tensor(jab, tab);
    }
  return y;
}
}  // namespace detail

inline ChannelFidelitySdp build_channel_fidelity_sdp(const ChannelFidelityProblem& cfg) {
  const Eigen::Index in = cfg.in_dim, out = cfg.out_dim;
  detail::require_dims(in > 0 && out > 0, "build_channel_fidelity_sdp: dimensions must be positive");
  detail::require(!cfg.terms.empty(), "build_channel_fidelity_sdp: no fidelity terms");
  Eigen::Index out2 = out;
  if (cfg.post) {
    detail::require_dims(static_cast<Eigen::Index>(cfg.post->in_dim()) == out, "build_channel_fidelity_sdp: post-processing input dimension");
    out2 = static_cast<Eigen::Index>(cfg.post->out_dim());
  }
  const CMatrix u = cfg.face.value_or(CMatrix::Identity(out * in, out * in));
  detail::require_dims(u.rows() == out * in, "build_channel_fidelity_sdp: face dimension mismatch");
  const Eigen::Index f = u.cols();

  ChannelFidelitySdp res;
  res.in_dim = in;
  res.out_dim = out;
  res.face = u;
  SdpProblem& p = res.problem;
  res.choi_block = p.add_block(f);
  const bool maximin = cfg.terms.size() > 1;
  const std::size_t t_block = maximin ? p.add_block(1) : 0;
  if (maximin) p.objective.add(t_block, 0, 0, 1.0);

  // linear_map_matrix feeds matrix units, so lift entrywise
  auto face_lift = [&](const CMatrix& jp) -> CMatrix {
    if (!cfg.face) return jp;
    CMatrix j = CMatrix::Zero(u.rows(), u.rows());
    for (Eigen::Index q = 0; q < jp.cols(); ++q)
      for (Eigen::Index p = 0; p < jp.rows(); ++p)
        if (jp(p, q) != Complex(0.0)) j.noalias() += jp(p, q) * u.col(p) * u.col(q).adjoint();
    return j;
  };
  for (const auto& term : cfg.terms) {
    const Eigen::Index ref = term.ref_dim;
    detail::require_dims(ref > 0 && term.input.rows() == in * ref && term.input.cols() == in * ref,
                         "build_channel_fidelity_sdp: input state dimension mismatch");
    detail::require_dims(term.target.rows() == out2 * ref && term.target.cols() == out2 * ref,
                         "build_channel_fidelity_sdp: target dimension mismatch");
    auto image = [&](const CMatrix& j) {
      CMatrix y = detail::apply_choi(j, term.input, in, out, ref);
      if (cfg.post) y = cfg.post->apply_with_reference(y, static_cast<std::size_t>(ref));
      return y;
    };
    // Every feasible image lies in the support of image(UU†); compressing onto
    // it keeps the certificate block strictly feasible.
    const CMatrix v = range_basis(hermitian_part(image(u * u.adjoint())), 1e-11);
    res.supports.push_back(v);
    const CMatrix s = v.adjoint() * detail::psd_factor(term.target);
    const Eigen::Index r = s.cols();
    const Eigen::Index dy = v.cols();
    SdpFunctional certificate;
    std::size_t blk = 0;
    if (r == 0 || dy == 0) {
      // Zero target or zero image: the fidelity vanishes identically.
      blk = p.add_block(1);
      detail::add_block_equals(p, blk, 0, CMatrix::Identity(1, 1));
    } else {
      blk = p.add_block(dy + r);
      for (Eigen::Index al = 0; al < dy; ++al)
        for (Eigen::Index t = 0; t < r; ++t)
          if (std::abs(s(al, t)) > 0) certificate.add(blk, al, dy + t, std::conj(s(al, t)));
      const CMatrix t = detail::linear_map_matrix(
          [&](const CMatrix& jp) { return CMatrix(v.adjoint() * image(face_lift(jp)) * v); }, f);
      detail::add_matrix_equality(p, res.choi_block, t, f, CMatrix::Zero(dy, dy), std::make_pair(blk, Eigen::Index{0}));
      detail::add_block_equals(p, blk, dy, CMatrix::Identity(r, r));
    }
    res.fidelity_blocks.push_back(blk);
    if (!maximin) {
      p.objective = certificate;
    } else {
      // certificate − t − slack = 0
      const std::size_t slack = p.add_block(1);
      certificate.add(t_block, 0, 0, -1.0);
      certificate.add(slack, 0, 0, -1.0);
      p.add_equality(std::move(certificate), 0.0);
    }
  }
  if (cfg.trace_preserving) {
    const DimShape shape{{static_cast<std::size_t>(out), static_cast<std::size_t>(in)}};
    const CMatrix t = detail::linear_map_matrix(
        [&](const CMatrix& jp) { return partial_trace(face_lift(jp), shape, {1}); }, f);
    detail::add_matrix_equality(p, res.choi_block, t, f, CMatrix::Identity(in, in));
  }
  if (!cfg.fixed.empty()) {
    detail::require_dims(in == out, "build_channel_fidelity_sdp: algebra fixing requires a square map");
    for (const auto& bmat : cfg.fixed) {
      detail::require_dims(bmat.rows() == in && bmat.cols() == in, "build_channel_fidelity_sdp: fixed operator dimension");
      // R̂(B)[a,b] = Σ_{o,o′} B[o,o′] J[(o′,b),(o,a)]
      const CMatrix t = detail::linear_map_matrix(
          [&](const CMatrix& jp) {
            const CMatrix j = face_lift(jp);
            CMatrix img = CMatrix::Zero(in, in);
            for (Eigen::Index a = 0; a < in; ++a)
              for (Eigen::Index b = 0; b < in; ++b)
                for (Eigen::Index o = 0; o < out; ++o)
                  for (Eigen::Index o2 = 0; o2 < out; ++o2) img(a, b) += bmat(o, o2) * j(o2 * in + b, o * in + a);
            return img;
          },
          f);
      detail::add_full_matrix_equality(p, res.choi_block, t, f, bmat);
    }
  }
  return res;
}

/// Orthonormal basis of {vec(E) : E ∈ span(ops)} ⊂ C^{out·in}, used as a
/// face restriction for process matrices whose Kraus operators lie in span(ops).
inline CMatrix kraus_span_face(const std::vector<CMatrix>& ops, double tol = 1e-10) {
  detail::require(!ops.empty(), "kraus_span_face: empty operator list");
  CMatrix stack(ops.front().size(), static_cast<Eigen::Index>(ops.size()));
  for (std::size_t k = 0; k < ops.size(); ++k) stack.col(static_cast<Eigen::Index>(k)) = vec(ops[k]);
  return range_basis(stack, tol);
}

}  // namespace cr
