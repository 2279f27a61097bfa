#pragma once

// Jordan–Wigner Majorana operators, parity observables, local physical
// algebras, definite-parity Kraus splitting and Majorana-ring codes.
//
// Conventions (Majorana indices are 1-based, mode j carries w_{2j-1}, w_{2j};
// mode 1 is the most significant tensor factor):
//   w_{2j-1} = Z^{⊗(j-1)} ⊗ Y ⊗ 1,   w_{2j} = Z^{⊗(j-1)} ⊗ X ⊗ 1.
//   C_ω = ± i^{|ω|/2} w_{ω_1}⋯w_{ω_n} (ascending indices), Hermitian, C_ω² = 1,
//   with the sign chosen so the vacuum has eigenvalue +1 whenever ω consists
//   of whole modes (then C_ω = ∏(1 − 2n_j)).

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cr/algebra.hpp"
#include "cr/channel.hpp"
#include "cr/code.hpp"
#include "cr/matrix.hpp"

namespace cr {

using MajoranaIndices = std::vector<int>;

/// Complex multiple of a product of Majorana operators.
struct MajoranaMonomial {
  MajoranaIndices indices;  // sorted ascending, no repeats
  Complex coeff{1.0, 0.0};
};

namespace detail {
inline CMatrix pauli(char p) {
  CMatrix m(2, 2);
  switch (p) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1;
  }
  return m;
}
}  // namespace detail

class FermionSystem {
 public:
  static constexpr int kMaxModes = 7;

  explicit FermionSystem(int n_modes) : n_(n_modes) {
    detail::require(n_modes >= 1 && n_modes <= kMaxModes,
                    "FermionSystem: mode count must lie in [1, " + std::to_string(kMaxModes) + "]");
    for (int k = 1; k <= 2 * n_; ++k) majorana_.push_back(tensor_all(factors({k})));
    for (int k = 0; k < 2 * n_; ++k)
      for (int l = 0; l < 2 * n_; ++l) {
        const CMatrix ac = majorana_[k] * majorana_[l] + majorana_[l] * majorana_[k];
        const CMatrix expect = (k == l ? 2.0 : 0.0) * cr::identity(dim());
        if (max_abs(ac - expect) > 1e-10) throw NumericalError("FermionSystem: anticommutation check failed");
      }
  }

  [[nodiscard]] int n_modes() const { return n_; }
  [[nodiscard]] int n_majoranas() const { return 2 * n_; }
  [[nodiscard]] std::size_t dim() const { return std::size_t{1} << n_; }

  [[nodiscard]] const CMatrix& majorana(int k) const {
    check_index(k);
    return majorana_[static_cast<std::size_t>(k - 1)];
  }

  /// w_{k_1} w_{k_2} ⋯ in the given order (repeats allowed), computed
  /// factor-wise on the Pauli strings.
  [[nodiscard]] CMatrix product(const MajoranaIndices& ks) const {
    for (int k : ks) check_index(k);
    return tensor_all(factors(ks));
  }

  [[nodiscard]] CMatrix monomial(const MajoranaMonomial& m) const { return m.coeff * product(m.indices); }

  /// Hermitian unitary i^{n(n-1)/2} w_{k_1}⋯w_{k_n} for sorted distinct indices.
  [[nodiscard]] CMatrix hermitian_monomial(MajoranaIndices ks) const {
    std::sort(ks.begin(), ks.end());
    const auto n = static_cast<int>(ks.size());
    Complex phase = 1.0;
    for (int t = 0; t < (n * (n - 1) / 2) % 4; ++t) phase *= Complex(0, 1);
    return phase * product(ks);
  }

  [[nodiscard]] CMatrix annihilation(int mode) const {
    detail::require_dims(mode >= 1 && mode <= n_, "annihilation: mode out of range");
    return 0.5 * (majorana(2 * mode) + Complex(0, 1) * majorana(2 * mode - 1));
  }

  [[nodiscard]] static MajoranaIndices modes_to_majoranas(const std::vector<int>& modes) {
    MajoranaIndices out;
    for (int j : modes) {
      out.push_back(2 * j - 1);
      out.push_back(2 * j);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  [[nodiscard]] MajoranaIndices all_majoranas() const {
    MajoranaIndices out(static_cast<std::size_t>(2 * n_));
    for (int k = 0; k < 2 * n_; ++k) out[static_cast<std::size_t>(k)] = k + 1;
    return out;
  }

 private:
  void check_index(int k) const {
    detail::require_dims(k >= 1 && k <= 2 * n_, "Majorana index " + std::to_string(k) + " out of range");
  }

  [[nodiscard]] std::vector<CMatrix> factors(const MajoranaIndices& ks) const {
    std::vector<CMatrix> f(static_cast<std::size_t>(n_), cr::identity(2));
    for (int k : ks) {
      const int mode = (k + 1) / 2;  // 1-based
      for (int l = 1; l < mode; ++l) f[static_cast<std::size_t>(l - 1)] *= detail::pauli('Z');
      f[static_cast<std::size_t>(mode - 1)] *= detail::pauli(k % 2 == 1 ? 'Y' : 'X');
    }
    return f;
  }

  int n_;
  std::vector<CMatrix> majorana_;
};

struct ParityData {
  MajoranaIndices region;
  CMatrix charge;      // C_ω
  CMatrix plus;        // (1 + C)/2
  CMatrix minus;       // (1 − C)/2
  int sign = 1;        // global sign applied on top of i^{|ω|/2}∏w
};

inline ParityData parity_operator(const FermionSystem& sys, MajoranaIndices region) {
  std::sort(region.begin(), region.end());
  detail::require(std::adjacent_find(region.begin(), region.end()) == region.end(),
                  "parity_operator: repeated Majorana index");
  detail::require(region.size() % 2 == 0, "parity_operator: region must contain an even number of Majoranas");
  const auto half = static_cast<int>(region.size() / 2);
  Complex phase = 1.0;
  for (int t = 0; t < half % 4; ++t) phase *= Complex(0, 1);
  ParityData p;
  p.region = region;
  p.charge = phase * sys.product(region);
  bool whole_modes = true;
  for (std::size_t i = 0; i < region.size(); i += 2)
    whole_modes = whole_modes && region[i] % 2 == 1 && region[i + 1] == region[i] + 1;
  if (whole_modes && p.charge(0, 0).real() < 0) {
    p.charge = -p.charge;
    p.sign = -1;
  }
  const CMatrix id = identity(sys.dim());
  p.plus = 0.5 * (id + p.charge);
  p.minus = 0.5 * (id - p.charge);
  return p;
}

inline ParityData global_parity(const FermionSystem& sys) { return parity_operator(sys, sys.all_majoranas()); }

/// All sorted even-size subsets of `region` (including the empty one).
inline std::vector<MajoranaIndices> even_subsets(MajoranaIndices region) {
  std::sort(region.begin(), region.end());
  std::vector<MajoranaIndices> out;
  const std::size_t n = region.size();
  detail::require(n <= 20, "even_subsets: region too large");
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    if (__builtin_popcountll(mask) % 2 != 0) continue;
    MajoranaIndices s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(region[i]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Physical algebra 𝒜_ω: span of even Majorana monomials supported in ω.
/// The monomials are mutually HS-orthogonal, so the basis is their
/// normalisation.
inline AlgebraBasis physical_algebra(const FermionSystem& sys, const MajoranaIndices& region) {
  std::set<int> uniq(region.begin(), region.end());
  for (int k : uniq) detail::require_dims(k >= 1 && k <= sys.n_majoranas(), "physical_algebra: index out of range");
  std::vector<CMatrix> elems;
  const double norm = 1.0 / std::sqrt(static_cast<double>(sys.dim()));
  for (const auto& s : even_subsets({uniq.begin(), uniq.end()})) elems.push_back(norm * sys.hermitian_monomial(s));
  return AlgebraBasis::from_span(elems, sys.dim());
}

inline AlgebraBasis physical_algebra_modes(const FermionSystem& sys, const std::vector<int>& modes) {
  return physical_algebra(sys, FermionSystem::modes_to_majoranas(modes));
}

/// {X : [X, C] = 0} for an involution C, built as P₊ B(H) P₊ ⊕ P₋ B(H) P₋.
inline AlgebraBasis charge_commutant(const CMatrix& charge) {
  const std::size_t d = static_cast<std::size_t>(charge.rows());
  const CMatrix id = identity(d);
  std::vector<CMatrix> elems;
  for (int s : {1, -1}) {
    const CMatrix range = range_basis(0.5 * (id + s * charge), 1e-8);
    for (Eigen::Index i = 0; i < range.cols(); ++i)
      for (Eigen::Index j = 0; j < range.cols(); ++j) elems.push_back(range.col(i) * range.col(j).adjoint());
  }
  return AlgebraBasis::from_span(elems, d);
}

/// Kraus operators of a channel regrouped into parity-even (E C = C E) and
/// parity-odd (E C = −C E) parts.
struct ParitySplit {
  std::vector<CMatrix> even;
  std::vector<CMatrix> odd;
  std::optional<Channel> plus;   // Σ_even E ρ E†
  std::optional<Channel> minus;  // Σ_odd E ρ E†
  bool already_definite = false;

  /// N₊ + N₋ as a single CP map.
  [[nodiscard]] Channel combined() const {
    if (plus && minus) return add(*plus, *minus);
    return plus ? *plus : *minus;
  }
};

inline ParitySplit definite_parity_split(const Channel& n, const CMatrix& charge, double tol = 1e-10) {
  detail::require(n.in_dim() == n.out_dim() && static_cast<std::size_t>(charge.rows()) == n.in_dim(),
                  "definite_parity_split: charge dimension mismatch");
  detail::require(is_hermitian(charge, 1e-10) && max_abs(charge * charge - identity(n.in_dim())) <= 1e-10,
                  "definite_parity_split: charge is not a Hermitian involution");
  ParitySplit split;
  auto parity_of = [&](const CMatrix& e) -> int {
    if (max_abs(e * charge - charge * e) <= tol * std::max(1.0, max_abs(e))) return 1;
    if (max_abs(e * charge + charge * e) <= tol * std::max(1.0, max_abs(e))) return -1;
    return 0;
  };
  split.already_definite = std::all_of(n.kraus().begin(), n.kraus().end(),
                                       [&](const CMatrix& e) { return parity_of(e) != 0; });
  if (split.already_definite) {
    for (const auto& e : n.kraus()) (parity_of(e) == 1 ? split.even : split.odd).push_back(e);
  } else {
    // Kraus operators of QNP are {E, CE, EC, CEC}/2; rotating each pair
    // (E, CEC) and (CE, EC) by a Hadamard separates the two parities.
    const double w = 1.0 / (2.0 * std::sqrt(2.0));
    for (const auto& e : n.kraus()) {
      const CMatrix ce = charge * e, ec = e * charge, cec = charge * e * charge;
      for (const CMatrix& x : {CMatrix(w * (e + cec)), CMatrix(w * (ce + ec))})
        if (max_abs(x) > 1e-13) split.even.push_back(x);
      for (const CMatrix& x : {CMatrix(w * (e - cec)), CMatrix(w * (ce - ec))})
        if (max_abs(x) > 1e-13) split.odd.push_back(x);
    }
  }
  if (!split.even.empty()) split.plus = Channel(split.even).reduced();
  if (!split.odd.empty()) split.minus = Channel(split.odd).reduced();
  if (split.plus) split.even = split.plus->kraus();
  if (split.minus) split.odd = split.minus->kraus();
  return split;
}

/// Dephasing channel ρ ↦ ½(ρ + CρC) for a Hermitian involution C.
inline Channel parity_dephasing(const CMatrix& charge) {
  const std::size_t d = static_cast<std::size_t>(charge.rows());
  return Channel({identity(d) / std::sqrt(2.0), charge / std::sqrt(2.0)});
}

struct MajoranaRingScenario {
  int n_modes = 0;
  MajoranaIndices unpaired;                      // ω, in ring order
  std::vector<std::pair<int, int>> pairing;      // stabilisers −i w_p w_q
  std::vector<MajoranaIndices> intervals;        // I_j between ω_j and ω_{j+1}
  Code code;
  int logical_parity_sign = 1;                   // W† C_Ω W = sign · C_logical
  std::optional<FermionSystem> system;
  std::optional<Channel> noise;
  [[nodiscard]] std::size_t shortest_interval() const {
    std::size_t d = static_cast<std::size_t>(2 * n_modes);
    for (const auto& i : intervals) d = std::min(d, i.size());
    return d;
  }
};

/// Circular span (number of consecutive ring positions) covering `ks`.
inline int ring_span(const MajoranaIndices& ks, int n_majoranas) {
  if (ks.empty()) return 0;
  MajoranaIndices s = ks;
  std::sort(s.begin(), s.end());
  int largest_gap = s.front() + n_majoranas - s.back();
  for (std::size_t i = 1; i < s.size(); ++i) largest_gap = std::max(largest_gap, s[i] - s[i - 1]);
  return n_majoranas - largest_gap + 1;
}

/// Identity plus every even monomial whose ring span is ≤ max_support.
inline std::vector<MajoranaIndices> local_even_monomials(const FermionSystem& sys, int max_support) {
  detail::require(max_support >= 2, "local_even_monomials: max_support must be ≥ 2");
  const int m = sys.n_majoranas();
  std::set<MajoranaIndices> found;
  found.insert(MajoranaIndices{});
  for (int start = 1; start <= m; ++start) {
    MajoranaIndices window;
    for (int t = 0; t < std::min(max_support, m); ++t) window.push_back((start - 1 + t) % m + 1);
    for (auto s : even_subsets(window))
      if (!s.empty()) found.insert(s);
  }
  return {found.begin(), found.end()};
}

/// Noise channel with Kraus operators E_k = Σ_i U_{ki} √p_i M_i, where M_i are
/// the Hermitian local even monomials, p the normalised weights and U a unitary
/// mixing matrix (identity by default). Σ E†E = Σ p_i M_i² = 1.
inline Channel geometric_noise(const FermionSystem& sys, int max_support, std::vector<double> weights = {},
                               std::optional<CMatrix> mixing = {}) {
  const auto monos = local_even_monomials(sys, max_support);
  if (weights.empty()) weights.assign(monos.size(), 1.0);
  detail::require(weights.size() == monos.size(), "geometric_noise: one weight per local monomial expected");
  double total = 0;
  for (double w : weights) {
    detail::require(w >= 0 && std::isfinite(w), "geometric_noise: weights must be non-negative");
    total += w;
  }
  if (total <= 0) throw PreconditionError("geometric_noise: weight normalization failure");
  const auto n = static_cast<Eigen::Index>(monos.size());
  const CMatrix u = mixing.value_or(CMatrix::Identity(n, n));
  detail::require_dims(u.rows() == n && u.cols() == n, "geometric_noise: mixing matrix size");
  detail::require(max_abs(u.adjoint() * u - CMatrix::Identity(n, n)) <= 1e-10, "geometric_noise: mixing matrix is not unitary");
  std::vector<CMatrix> terms;
  for (std::size_t i = 0; i < monos.size(); ++i)
    terms.push_back(std::sqrt(weights[i] / total) * sys.hermitian_monomial(monos[i]));
  std::vector<CMatrix> kraus;
  for (Eigen::Index k = 0; k < n; ++k) {
    CMatrix e = CMatrix::Zero(static_cast<Eigen::Index>(sys.dim()), static_cast<Eigen::Index>(sys.dim()));
    for (Eigen::Index i = 0; i < n; ++i)
      if (u(k, i) != Complex(0)) e += u(k, i) * terms[static_cast<std::size_t>(i)];
    if (max_abs(e) > 1e-14) kraus.push_back(std::move(e));
  }
  return Channel(std::move(kraus));
}

/// Quasiparticle poisoning: Kraus {w_a/√2, w_b/√2} (odd, parity flipping).
inline Channel poisoning_noise(const FermionSystem& sys, int a, int b) {
  return Channel({sys.majorana(a) / std::sqrt(2.0), sys.majorana(b) / std::sqrt(2.0)});
}

/// Nearest-neighbour pairing of every interval between consecutive unpaired
/// Majoranas on the ring.
inline std::vector<std::pair<int, int>> ring_pairing(int n_modes, const MajoranaIndices& unpaired) {
  const int m = 2 * n_modes;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t j = 0; j < unpaired.size(); ++j) {
    const int a = unpaired[j];
    const int b = unpaired[(j + 1) % unpaired.size()];
    std::vector<int> interval;
    for (int k = a % m + 1; k != b; k = k % m + 1) interval.push_back(k);
    detail::require(interval.size() % 2 == 0, "ring_pairing: interval of odd length");
    for (std::size_t t = 0; t < interval.size(); t += 2) pairs.emplace_back(interval[t], interval[t + 1]);
  }
  return pairs;
}

namespace detail {
inline CMatrix common_plus_eigenspace(const std::vector<CMatrix>& involutions, std::size_t d) {
  CMatrix proj = identity(d);
  for (const auto& s : involutions) proj = proj * (0.5 * (identity(d) + s));
  return range_basis(proj, 1e-8);
}

inline void fix_phase(CVector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (std::abs(v(k)) > 1e-10) {
      v *= std::conj(v(k)) / std::abs(v(k));
      return;
    }
}
}  // namespace detail

/// Majorana-ring code. The logical basis is built so that the unpaired
/// Majoranas act on it as Jordan–Wigner Majoranas of k logical modes
/// (logical mode j ↔ (ω_{2j−1}, ω_{2j})).
inline MajoranaRingScenario majorana_ring(const FermionSystem& sys, const MajoranaIndices& unpaired,
                                          std::vector<std::pair<int, int>> pairing = {},
                                          std::optional<Channel> noise = {}) {
  const int m = sys.n_majoranas();
  detail::require(!unpaired.empty() && unpaired.size() % 2 == 0, "majorana_ring: |ω| must be even and positive");
  if (pairing.empty()) pairing = ring_pairing(sys.n_modes(), unpaired);
  std::vector<int> seen(static_cast<std::size_t>(m + 1), 0);
  for (int k : unpaired) {
    detail::require(k >= 1 && k <= m, "majorana_ring: index out of range");
    ++seen[static_cast<std::size_t>(k)];
  }
  for (auto [p, q] : pairing) {
    detail::require(p >= 1 && p <= m && q >= 1 && q <= m, "majorana_ring: index out of range");
    ++seen[static_cast<std::size_t>(p)];
    ++seen[static_cast<std::size_t>(q)];
  }
  for (int k = 1; k <= m; ++k)
    detail::require(seen[static_cast<std::size_t>(k)] == 1, "majorana_ring: unpaired and paired indices must partition all Majoranas");

  MajoranaRingScenario sc;
  sc.n_modes = sys.n_modes();
  sc.unpaired = unpaired;
  sc.pairing = pairing;
  for (std::size_t j = 0; j < unpaired.size(); ++j) {
    MajoranaIndices interval;
    for (int k = unpaired[j] % m + 1; k != unpaired[(j + 1) % unpaired.size()]; k = k % m + 1) interval.push_back(k);
    sc.intervals.push_back(std::move(interval));
  }

  const std::size_t d = sys.dim();
  std::vector<CMatrix> stabilisers;
  for (auto [p, q] : pairing) stabilisers.push_back(Complex(0, -1) * sys.product({p, q}));
  const int k = static_cast<int>(unpaired.size() / 2);
  std::vector<CMatrix> logical_z, creation;
  for (int j = 0; j < k; ++j) {
    const int a = unpaired[static_cast<std::size_t>(2 * j)];
    const int b = unpaired[static_cast<std::size_t>(2 * j + 1)];
    logical_z.push_back(Complex(0, 1) * sys.product({a, b}));
    creation.push_back(0.5 * (sys.majorana(b) - Complex(0, 1) * sys.majorana(a)));
  }
  std::vector<CMatrix> all = stabilisers;
  all.insert(all.end(), logical_z.begin(), logical_z.end());
  const CMatrix vac_space = detail::common_plus_eigenspace(all, d);
  if (vac_space.cols() != 1) throw NumericalError("majorana_ring: logical vacuum is not unique");
  CVector vacuum = vac_space.col(0);
  detail::fix_phase(vacuum);

  const auto kd = static_cast<Eigen::Index>(std::size_t{1} << k);
  CMatrix w(static_cast<Eigen::Index>(d), kd);
  for (Eigen::Index idx = 0; idx < kd; ++idx) {
    CVector v = vacuum;
    for (int j = k; j-- > 0;)  // ã_1†^{n_1}⋯ã_k†^{n_k}|vac⟩
      if ((idx >> (k - 1 - j)) & 1) v = creation[static_cast<std::size_t>(j)] * v;
    w.col(idx) = v;
  }
  sc.code = Code(w, 1e-9);

  const CMatrix c_global = global_parity(sys).charge;
  const CMatrix c_logical = global_parity(FermionSystem(k)).charge;
  const CMatrix reduced = w.adjoint() * c_global * w;
  if (max_abs(reduced - c_logical) <= 1e-9)
    sc.logical_parity_sign = 1;
  else if (max_abs(reduced + c_logical) <= 1e-9)
    sc.logical_parity_sign = -1;
  else
    throw NumericalError("majorana_ring: W†CW is not ± the logical parity");
  const CMatrix pw = sc.code.projector();
  if (max_abs(c_global * pw - pw * c_global) > 1e-9) throw NumericalError("majorana_ring: code projector does not commute with parity");
  sc.system = sys;
  if (noise) {
    detail::require_dims(noise->in_dim() == d && noise->out_dim() == d, "majorana_ring: noise acts on a different space");
    sc.noise = std::move(noise);
  } else {
    sc.noise = geometric_noise(sys, std::max(2, static_cast<int>(sc.shortest_interval() / 2)));
  }
  return sc;
}

}  // namespace cr
