// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N only

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "cr/algebra.hpp"
#include "cr/fermion.hpp"
#include "cr/locality.hpp"
#include "cr/recovery.hpp"
#include "support.hpp"

using namespace cr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Channel random_channel(Rng& rng, Eigen::Index din, Eigen::Index dout, Eigen::Index kmax) {
  // at least din/dout Kraus operators are needed for trace preservation
  std::uniform_int_distribution<Eigen::Index> k((din + dout - 1) / dout, kmax);
  return crt::random_channel(rng, din, dout, k(rng));
}

// 1. unconstrained duality over all CPTP recoveries
Outcome duality() {
  Rng rng(1001);
  std::uniform_int_distribution<Eigen::Index> dim(2, 4);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  int failed = 0;
  const int cases = 25;
  for (int t = 0; t < cases; ++t) {
    const Eigen::Index din = dim(rng);
    const Channel n = random_channel(rng, din, dim(rng), 4);
    const Channel m = random_channel(rng, din, dim(rng), 4);
    const auto d = verify_duality(n, m, random_density(rng, din));
    worst = std::max(worst, d.difference);
    if (!d.pass) ++failed;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && secs <= 60.0;
  o.detail = std::to_string(cases) + " pairs, max |lhs-rhs| = " + fmt(worst) + ", failures " + std::to_string(failed) +
             ", " + fmt(secs) + " s (budget 60 s)";
  return o;
}

// 2. duality with physical recoveries on two fermionic modes
Outcome constrained_duality() {
  Rng rng(1002);
  FermionSystem sys(2);
  const Channel q = parity_dephasing(global_parity(sys).charge);
  const auto c = RecoveryConstraint::physical(q, q);
  double worst = 0;
  int failed = 0;
  const int cases = 10;
  for (int t = 0; t < cases; ++t) {
    const Channel n = random_channel(rng, 4, 4, 4);
    const Channel m = t % 2 ? Channel::identity(4) : random_channel(rng, 4, 4, 2);
    const auto d = verify_duality(n, m, random_density(rng, 4), c);
    worst = std::max(worst, d.difference);
    if (!d.pass) ++failed;
  }
  Outcome o;
  o.pass = failed == 0;
  o.detail = std::to_string(cases) + " instances, max |lhs-rhs| = " + fmt(worst) + ", failures " + std::to_string(failed);
  return o;
}

// 3. duality with recoveries fixing the parity algebra
Outcome fixed_algebra_duality() {
  Rng rng(1003);
  FermionSystem sys(2);
  const CMatrix charge = global_parity(sys).charge;
  const auto b = AlgebraBasis::from_span({identity(4), charge}, 4);
  const auto c = RecoveryConstraint::fixes(b);
  double worst = 0;
  int failed = 0;
  const int cases = 10;
  for (int t = 0; t < cases; ++t) {
    const Channel n = random_channel(rng, 4, 4, 4);
    const Channel m = t % 2 ? Channel::identity(4) : random_channel(rng, 4, 4, 2);
    const auto d = verify_duality(n, m, random_density(rng, 4), c);
    worst = std::max(worst, d.difference);
    if (!d.pass) ++failed;
  }
  Outcome o;
  o.pass = failed == 0;
  o.detail = std::to_string(cases) + " instances, max |lhs-rhs| = " + fmt(worst) + ", failures " + std::to_string(failed);
  return o;
}

// 4. KL verdict against the SDP recovery fidelity
struct KlCase {
  std::string name;
  Code code;
  std::vector<CMatrix> kraus;
};

CMatrix qubit_op(const std::string& paulis) {
  std::vector<CMatrix> f;
  for (char p : paulis) f.push_back(p == 'X' ? crt::X() : p == 'Z' ? crt::Z() : crt::I2());
  return tensor_all(f);
}

std::vector<CMatrix> weighted(Rng& rng, const std::vector<CMatrix>& ops) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> w;
  double total = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) total += w.emplace_back(u(rng));
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < ops.size(); ++i) out.push_back(std::sqrt(w[i] / total) * ops[i]);
  return out;
}

std::vector<KlCase> kl_corpus() {
  Rng rng(1004);
  std::vector<KlCase> cs;
  const Code rep3 = Code::from_basis_states(8, {0, 7});
  for (int t = 0; t < 3; ++t)
    cs.push_back({"bit flip, single X", rep3, weighted(rng, {qubit_op("III"), qubit_op("XII"), qubit_op("IXI"), qubit_op("IIX")})});
  for (int t = 0; t < 2; ++t) cs.push_back({"bit flip, phase error", rep3, weighted(rng, {qubit_op("III"), qubit_op("ZII")})});
  cs.push_back({"bit flip, XX", rep3, weighted(rng, {qubit_op("III"), qubit_op("XXI")})});
  cs.push_back({"bit flip, X and XX", rep3, weighted(rng, {qubit_op("III"), qubit_op("XII"), qubit_op("IXX")})});
  for (Eigen::Index d : {4, 6, 8}) {
    const Code code(random_isometry(rng, d, 2));
    cs.push_back({"random unitary", code, {random_unitary(rng, d)}});
  }
  for (Eigen::Index d : {4, 5, 8}) {
    const Code code(random_isometry(rng, d, 2));
    cs.push_back({"random rank 2", code, crt::random_channel(rng, d, d, 2).kraus()});
  }
  // Kraus operators sending the code to mutually orthogonal blocks
  for (auto [d, nk] : {std::pair<Eigen::Index, Eigen::Index>{8, 4}, {8, 3}, {6, 3}}) {
    const CMatrix u = random_unitary(rng, d), r = random_unitary(rng, d);
    const Code code(u.leftCols(2));
    std::vector<CMatrix> ops;
    for (Eigen::Index i = 0; i < nk; ++i) {
      CMatrix shift = CMatrix::Zero(d, d);
      for (Eigen::Index j = 0; j < d; ++j) shift((j + 2 * i) % d, j) = 1.0;
      ops.push_back(r * shift * u.adjoint());
    }
    cs.push_back({"orthogonal blocks", code, weighted(rng, ops)});
  }
  const Code bell = Code::from_basis_states(4, {0, 3});
  cs.push_back({"repetition, ZZ", bell, weighted(rng, {qubit_op("II"), qubit_op("ZZ")})});
  cs.push_back({"repetition, ZI", bell, weighted(rng, {qubit_op("II"), qubit_op("ZI")})});
  cs.push_back({"one-dimensional code", Code(random_isometry(rng, 3, 1)), crt::random_channel(rng, 3, 3, 3).kraus()});
  cs.push_back({"depolarized", Code(random_isometry(rng, 4, 2)), Channel::completely_depolarizing(4).kraus()});
  cs.push_back({"random rank 4", Code(random_isometry(rng, 4, 2)), crt::random_channel(rng, 4, 4, 4).kraus()});
  cs.push_back({"dephased qubit", Code::identity(2), weighted(rng, {crt::I2(), crt::Z()})});
  return cs;
}

Outcome kl_bridge() {
  const auto corpus = kl_corpus();
  int agree = 0, correctable = 0;
  std::vector<std::string> bad;
  for (const auto& c : corpus) {
    const auto kl = kl_check(c.code, c.kraus);
    const auto d = static_cast<std::size_t>(c.code.physical_dim());
    const auto f = optimal_recovery_fidelity(Channel(c.kraus), Channel::identity(d), c.code.maximally_mixed());
    const bool sdp_one = f.ok() && std::abs(f.value - 1.0) <= 1e-5;
    if (kl.correctable()) ++correctable;
    if (f.ok() && kl.correctable() == sdp_one)
      ++agree;
    else
      bad.push_back(c.name + " (F=" + fmt(f.value) + ", kl residual " + fmt(kl.residual) + ")");
  }
  Outcome o;
  const int total = static_cast<int>(corpus.size());
  o.pass = agree == total && correctable > 0 && correctable < total;
  o.detail = std::to_string(agree) + "/" + std::to_string(total) + " agree (" + std::to_string(correctable) +
             " correctable)";
  for (const auto& b : bad) o.notes.push_back("disagreement: " + b);
  return o;
}

// 5. Majorana ring with geometrically local even noise
struct RingSweep {
  double worst = 0;
  std::string worst_set;
  int sets = 0;
};

RingSweep sweep_local_sets(const FermionSystem& sys, const MajoranaRingScenario& ring, int support) {
  const auto par = global_parity(sys);
  const std::vector<CMatrix> projectors{par.plus, par.minus};
  const auto monos = local_even_monomials(sys, support);
  RingSweep s;
  auto run = [&](const std::vector<CMatrix>& kraus, const std::string& label) {
    const auto r = superselection_kl_check(ring.code, kraus, projectors);
    const double res = r.correctable() ? r.residual : std::max(r.residual, 1.0);
    if (s.sets++ == 0 || res > s.worst) {
      s.worst = res;
      s.worst_set = label;
    }
  };
  auto label_of = [](const MajoranaIndices& m) {
    std::string l = "{";
    for (std::size_t i = 0; i < m.size(); ++i) l += (i ? "," : "") + std::to_string(m[i]);
    return l + "}";
  };
  run(geometric_noise(sys, support).kraus(), "all local monomials");
  for (std::size_t a = 0; a < monos.size(); ++a)
    for (std::size_t b = a + 1; b < monos.size(); ++b)
      run({sys.hermitian_monomial(monos[a]) / std::sqrt(2.0), sys.hermitian_monomial(monos[b]) / std::sqrt(2.0)},
          label_of(monos[a]) + " " + label_of(monos[b]));
  return s;
}

Outcome majorana_ring_correctable() {
  const auto t0 = std::chrono::steady_clock::now();
  FermionSystem sys(6);
  const auto ring = majorana_ring(sys, {1, 4, 7, 10});
  const auto s = sweep_local_sets(sys, ring, 2);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = s.worst <= 1e-10 && secs <= 30.0;
  o.detail = "N=6, unpaired {1,4,7,10}, shortest interval " + std::to_string(ring.shortest_interval()) + ", " +
             std::to_string(s.sets) + " Kraus sets with support <= 2, worst residual " + fmt(s.worst) + " at " +
             s.worst_set + ", " + fmt(secs) + " s (budget 30 s)";
  // intervals of four Majoranas with a single logical fermion
  FermionSystem sys5(5);
  const auto ring5 = majorana_ring(sys5, {1, 6});
  const auto s5 = sweep_local_sets(sys5, ring5, 2);
  o.notes.push_back("N=5, unpaired {1,6}, shortest interval " + std::to_string(ring5.shortest_interval()) + ": " +
                    std::to_string(s5.sets) + " sets, worst residual " + fmt(s5.worst) +
                    (s5.worst <= 1e-10 ? " (correctable)" : " (not correctable)"));
  return o;
}

// 6. quasiparticle poisoning
Outcome poisoning() {
  FermionSystem sys(6);
  const auto ring = majorana_ring(sys, {1, 4, 7, 10});
  const auto par = global_parity(sys);
  const auto r = superselection_kl_check(ring.code, poisoning_noise(sys, 1, 4).kraus(), {par.plus, par.minus});
  const bool check_fails = !r.correctable() && r.residual >= 1e-3;

  FermionSystem small(3);
  const auto reduced = majorana_ring(small, {1, 3, 4, 6}, {{2, 5}});
  const Channel q = parity_dephasing(global_parity(small).charge);
  const auto d = verify_duality(poisoning_noise(small, 1, 3), Channel::identity(small.dim()),
                                reduced.code.maximally_mixed(), RecoveryConstraint::physical(q, q));
  const bool sdp_below = d.lhs.ok() && d.lhs.value <= 1 - 1e-3;
  Outcome o;
  o.pass = check_fails && sdp_below && d.pass;
  o.detail = "N=6 check " + std::string(to_string(r.verdict)) + " residual " + fmt(r.residual) +
             "; N=3 physical optimum " + fmt(d.lhs.value) + ", environment side " + fmt(d.rhs.value) +
             ", |diff| " + fmt(d.difference);
  return o;
}

// 7. definite-parity representation of physical channels
Outcome definite_parity() {
  Rng rng(1007);
  std::uniform_int_distribution<int> modes(1, 3);
  double worst_phys = 0, worst_parity = 0;
  int phys_ok = 0, unphys_caught = 0, phys_flagged = 0;
  const int cases = 20;
  for (int t = 0; t < cases; ++t) {
    FermionSystem sys(modes(rng));
    const auto d = static_cast<Eigen::Index>(sys.dim());
    const CMatrix c = global_parity(sys).charge;
    const Channel q = parity_dephasing(c);
    Channel n;
    if (t % 2 == 0) {
      // R∘Q for random R
      n = compose(random_channel(rng, d, d, 3), q, false);
    } else {
      // definite-parity Kraus operators, then a unitary mix of the Kraus set
      std::vector<CMatrix> defin;
      const Channel base = random_channel(rng, d, d, 2);
      for (const auto& e : base.kraus()) {
        defin.push_back(0.5 * (e + c * e * c));
        defin.push_back(0.5 * (e - c * e * c));
      }
      const CMatrix u = random_unitary(rng, Eigen::Index(defin.size()));
      std::vector<CMatrix> mixed;
      for (Eigen::Index k = 0; k < u.rows(); ++k) {
        CMatrix e = CMatrix::Zero(d, d);
        for (Eigen::Index i = 0; i < u.cols(); ++i) e += u(k, i) * defin[std::size_t(i)];
        mixed.push_back(e);
      }
      n = Channel(mixed);
    }
    if (is_physical(n, q, q).physical) ++phys_flagged;
    const auto s = definite_parity_split(n, c);
    const Channel qn = compose(q, n, false);
    const double res = s.already_definite ? choi_distance(compose(q, s.combined(), false), qn)
                                          : choi_distance(s.combined(), qn);
    worst_phys = std::max(worst_phys, res);
    for (const auto& e : s.even) worst_parity = std::max(worst_parity, max_abs(e * c - c * e));
    for (const auto& e : s.odd) worst_parity = std::max(worst_parity, max_abs(e * c + c * e));
    if (res <= 1e-9) ++phys_ok;
  }
  for (int t = 0; t < cases; ++t) {
    FermionSystem sys(modes(rng));
    const auto d = static_cast<Eigen::Index>(sys.dim());
    const Channel q = parity_dephasing(global_parity(sys).charge);
    const Channel n = crt::random_channel(rng, d, d, 1 + t % 3);
    if (!is_physical(n, q, q).physical) ++unphys_caught;
  }
  Outcome o;
  o.pass = phys_ok == cases && phys_flagged == cases && unphys_caught == cases && worst_parity <= 1e-10;
  o.detail = "physical: " + std::to_string(phys_ok) + "/" + std::to_string(cases) + " reconstruct QN (max Choi residual " +
             fmt(worst_phys) + ", parity defect " + fmt(worst_parity) + "); non-physical rejected " +
             std::to_string(unphys_caught) + "/" + std::to_string(cases);
  return o;
}

// 8. algebra engine
Outcome algebra_engine() {
  Rng rng(1008);
  const auto t0 = std::chrono::steady_clock::now();
  double dc = 0, cptp = 0, idem = 0, selfadj = 0, fixes = 0, roundtrip = 0;
  int failed = 0;
  const int cases = 50;
  std::size_t largest = 0;
  for (int t = 0; t < cases; ++t) {
    const auto known = crt::random_known_algebra(rng, 16);
    largest = std::max(largest, known.dim);
    const auto a = generate_algebra(known.generators, known.dim);
    bool ok = same_span(commutant(commutant(a)), a);
    dc = std::max(dc, max_principal_angle(commutant(commutant(a)), a));
    const Channel e = conditional_expectation(a);
    const auto rep = validate(e);
    cptp = std::max({cptp, rep.trace_preservation_residual, std::max(0.0, -rep.choi_min_eigenvalue)});
    const CMatrix s = e.superoperator();
    idem = std::max(idem, max_abs(s * s - s));
    selfadj = std::max(selfadj, max_abs(s - s.adjoint()));
    for (const auto& x : a.basis()) fixes = std::max(fixes, max_abs(e.apply(x) - x));
    roundtrip = std::max(roundtrip, factorization_residual(a, block_structure(a)));
    ok = ok && rep.valid && a.dim() == known.algebra_dim();
    if (!ok) ++failed;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && cptp <= 1e-9 && idem <= 1e-8 && selfadj <= 1e-8 && fixes <= 1e-8 && roundtrip <= 1e-8;
  o.detail = std::to_string(cases) + " algebras (dim <= " + std::to_string(largest) + "): double commutant angle " +
             fmt(dc) + ", CPTP " + fmt(cptp) + ", idempotence " + fmt(idem) + ", self-adjointness " + fmt(selfadj) +
             ", fixes basis " + fmt(fixes) + ", block round trip " + fmt(roundtrip) + ", " + fmt(secs) + " s";
  return o;
}

// 9. local complementary channel, definitional vs constructive
Outcome local_complement() {
  Rng rng(1009);
  std::uniform_int_distribution<Eigen::Index> dim(2, 4);
  double worst = 0;
  const int cases = 20;
  for (int t = 0; t < cases; ++t) {
    const auto known = crt::random_known_algebra(rng, 4);
    const auto b = generate_algebra(known.generators, known.dim);
    const Channel n = random_channel(rng, dim(rng), Eigen::Index(known.dim), 3);
    worst = std::max(worst, local_complementary_residual(n, b));
  }
  Outcome o;
  o.pass = worst <= 1e-8;
  o.detail = std::to_string(cases) + " pairs, max residual " + fmt(worst);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"duality over all channels", duality},
      {"duality with physical recoveries", constrained_duality},
      {"duality with a fixed algebra", fixed_algebra_duality},
      {"KL verdict vs SDP fidelity", kl_bridge},
      {"Majorana ring, local noise", majorana_ring_correctable},
      {"Majorana ring, poisoning", poisoning},
      {"definite-parity split", definite_parity},
      {"algebra engine", algebra_engine},
      {"local complement consistency", local_complement},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      const int n = std::atoi(argv[++i]);
      if (n < 1 || n > static_cast<int>(criteria.size())) {
        std::cerr << "criterion out of range\n";
        return 2;
      }
      selected.push_back(static_cast<std::size_t>(n - 1));
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (selected.empty())
    for (std::size_t i = 0; i < criteria.size(); ++i) selected.push_back(i);

  bool all = true;
  for (std::size_t i : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(t0)) << " s]\n";
    for (const auto& n : o.notes) std::cout << "    note: " << n << "\n";
    std::cout.flush();
  }
  return all ? 0 : 1;
}
