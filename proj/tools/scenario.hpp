#pragma once

// Scenario files: parsing and up-front validation. Every name and dimension is
// resolved here so that a bad file is rejected before any computation starts.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cr/algebra.hpp"
#include "cr/code.hpp"
#include "cr/fermion.hpp"
#include "cr/locality.hpp"

namespace crtool {

using json = nlohmann::ordered_json;
using cr::AlgebraBasis;
using cr::Channel;
using cr::CMatrix;
using cr::Complex;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kScenarioSchema = "constrained-recovery/scenario";
inline constexpr const char* kReportSchema = "constrained-recovery/report";

/// Malformed or inconsistent scenario (exit code 2).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ json <-> numbers

inline Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw SchemaError(where + ": expected a number or [re, im]");
}

inline CMatrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) throw SchemaError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError(where + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = parse_complex(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<int> parse_int_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw SchemaError(where + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

inline const json& require_field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require_field(j, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

// ---------------------------------------------------------------------- scenario

struct Scenario {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::size_t dim = 0;
  std::vector<std::size_t> qudits;
  std::optional<cr::FermionSystem> fermions;
  std::map<std::string, AlgebraBasis> algebras;
  std::map<std::string, Channel> channels;
  std::optional<cr::Code> code;
  std::optional<cr::MajoranaRingScenario> ring;
  json tasks = json::array();

  [[nodiscard]] const Channel& channel(const std::string& name, const std::string& where) const {
    const auto it = channels.find(name);
    if (it == channels.end()) throw SchemaError(where + ": unknown channel '" + name + "'");
    return it->second;
  }
  [[nodiscard]] const AlgebraBasis& algebra(const std::string& name, const std::string& where) const {
    const auto it = algebras.find(name);
    if (it == algebras.end()) throw SchemaError(where + ": unknown algebra '" + name + "'");
    return it->second;
  }
  [[nodiscard]] const cr::Code& require_code(const std::string& where) const {
    if (!code) throw SchemaError(where + ": the scenario defines no code");
    return *code;
  }
  [[nodiscard]] const cr::FermionSystem& require_fermions(const std::string& where) const {
    if (!fermions) throw SchemaError(where + ": requires a fermionic system");
    return *fermions;
  }
};

namespace detail {

inline cr::MajoranaIndices parse_region(const json& j, const cr::FermionSystem& sys, const std::string& where) {
  const auto v = parse_int_list(j, where);
  for (int k : v)
    if (k < 1 || k > sys.n_majoranas()) throw SchemaError(where + ": Majorana index " + std::to_string(k) + " out of range");
  return v;
}

inline CMatrix parse_monomial(const json& j, const cr::FermionSystem& sys, const std::string& where) {
  const auto idx = parse_region(require_field(j, "indices", where), sys, where + ".indices");
  const Complex coeff = j.contains("coeff") ? parse_complex(j.at("coeff"), where + ".coeff") : Complex(1.0);
  return coeff * sys.product(idx);
}

inline AlgebraBasis parse_algebra(const json& j, const Scenario& s, const std::string& where) {
  const std::string kind = require_string(j, "kind", where);
  const std::size_t d = s.dim;
  if (kind == "full") return AlgebraBasis::full(d);
  if (kind == "scalars") return AlgebraBasis::scalars(d);
  if (kind == "parity") {
    const auto& sys = s.require_fermions(where);
    const auto region = j.contains("region") ? parse_region(j.at("region"), sys, where + ".region") : sys.all_majoranas();
    if (region.size() % 2 != 0) throw SchemaError(where + ": parity region must have even size");
    return AlgebraBasis::from_span({cr::identity(d), cr::parity_operator(sys, region).charge}, d);
  }
  if (kind == "region") {
    const auto& sys = s.require_fermions(where);
    return cr::physical_algebra(sys, parse_region(require_field(j, "region", where), sys, where + ".region"));
  }
  if (kind == "generators") {
    std::vector<CMatrix> gens;
    if (j.contains("generators"))
      for (std::size_t i = 0; i < j.at("generators").size(); ++i) {
        CMatrix g = parse_matrix(j.at("generators")[i], where + ".generators[" + std::to_string(i) + "]");
        if (static_cast<std::size_t>(g.rows()) != d || g.rows() != g.cols())
          throw SchemaError(where + ".generators[" + std::to_string(i) + "]: must be " + std::to_string(d) + "x" + std::to_string(d));
        gens.push_back(std::move(g));
      }
    if (j.contains("monomials")) {
      const auto& sys = s.require_fermions(where);
      for (std::size_t i = 0; i < j.at("monomials").size(); ++i)
        gens.push_back(parse_monomial(j.at("monomials")[i], sys, where + ".monomials[" + std::to_string(i) + "]"));
    }
    return cr::generate_algebra(gens, d);
  }
  throw SchemaError(where + ": unknown algebra kind '" + kind + "'");
}

inline Channel parse_channel(const json& j, const Scenario& s, const std::string& where) {
  const std::size_t d = s.dim;
  Channel c;
  std::size_t din = d, dout = d;
  if (j.contains("dims")) {
    const auto dims = parse_int_list(j.at("dims"), where + ".dims");
    if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) throw SchemaError(where + ".dims: expected [in, out]");
    din = static_cast<std::size_t>(dims[0]);
    dout = static_cast<std::size_t>(dims[1]);
  }
  if (j.contains("kraus")) {
    const json& k = j.at("kraus");
    if (!k.is_array() || k.empty()) throw SchemaError(where + ".kraus: expected a non-empty array of matrices");
    std::vector<CMatrix> ops;
    for (std::size_t i = 0; i < k.size(); ++i) {
      CMatrix e = parse_matrix(k[i], where + ".kraus[" + std::to_string(i) + "]");
      if (static_cast<std::size_t>(e.rows()) != dout || static_cast<std::size_t>(e.cols()) != din)
        throw SchemaError(where + ".kraus[" + std::to_string(i) + "]: expected " + std::to_string(dout) + "x" + std::to_string(din));
      ops.push_back(std::move(e));
    }
    c = Channel(std::move(ops));
  } else {
    const std::string model = require_string(j, "model", where);
    if (j.contains("dims") && model != "identity" && model != "depolarizing")
      throw SchemaError(where + ": dims only apply to explicit Kraus sets, identity and depolarizing");
    if (model == "identity") {
      if (din != dout) throw SchemaError(where + ": identity needs equal dims");
      c = Channel::identity(din);
    } else if (model == "depolarizing") {
      c = Channel::constant_output(cr::identity(dout) / static_cast<double>(dout), din);
    } else if (model == "unitary") {
      const CMatrix u = parse_matrix(require_field(j, "matrix", where), where + ".matrix");
      if (static_cast<std::size_t>(u.rows()) != d || u.rows() != u.cols()) throw SchemaError(where + ".matrix: wrong size");
      c = Channel::unitary(u);
    } else if (model == "parity_dephasing") {
      const auto& sys = s.require_fermions(where);
      const auto region = j.contains("region") ? parse_region(j.at("region"), sys, where + ".region") : sys.all_majoranas();
      if (region.size() % 2 != 0) throw SchemaError(where + ": parity region must have even size");
      c = cr::parity_dephasing(cr::parity_operator(sys, region).charge);
    } else if (model == "geometric_noise") {
      const auto& sys = s.require_fermions(where);
      const json& ms = require_field(j, "max_support", where);
      if (!ms.is_number_integer() || ms.get<int>() < 2) throw SchemaError(where + ".max_support: integer >= 2 expected");
      std::vector<double> weights;
      if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
      const auto n_monos = cr::local_even_monomials(sys, ms.get<int>()).size();
      if (!weights.empty() && weights.size() != n_monos)
        throw SchemaError(where + ".weights: expected " + std::to_string(n_monos) + " weights");
      c = cr::geometric_noise(sys, ms.get<int>(), weights);
    } else if (model == "poisoning") {
      const auto& sys = s.require_fermions(where);
      const auto ab = parse_region(require_field(j, "majoranas", where), sys, where + ".majoranas");
      if (ab.size() != 2) throw SchemaError(where + ".majoranas: expected two indices");
      c = cr::poisoning_noise(sys, ab[0], ab[1]);
    } else if (model == "conditional_expectation") {
      c = cr::conditional_expectation(s.algebra(require_string(j, "algebra", where), where));
    } else {
      throw SchemaError(where + ": unknown channel model '" + model + "'");
    }
  }
  // Kraus form is completely positive already; only trace preservation can fail
  CMatrix s_tp = CMatrix::Zero(static_cast<Eigen::Index>(c.in_dim()), static_cast<Eigen::Index>(c.in_dim()));
  for (const auto& e : c.kraus()) s_tp += e.adjoint() * e;
  const double tp = cr::max_abs(s_tp - cr::identity(c.in_dim()));
  if (tp > 1e-9) throw SchemaError(where + ": not a channel (trace preservation residual " + std::to_string(tp) + ")");
  return c;
}

inline void parse_code(const json& j, Scenario& s, const std::string& where) {
  if (j.contains("isometry")) {
    const CMatrix w = parse_matrix(j.at("isometry"), where + ".isometry");
    if (static_cast<std::size_t>(w.rows()) != s.dim) throw SchemaError(where + ".isometry: expected " + std::to_string(s.dim) + " rows");
    if (w.cols() > w.rows() || cr::max_abs(w.adjoint() * w - cr::identity(static_cast<std::size_t>(w.cols()))) > 1e-8)
      throw SchemaError(where + ".isometry: columns are not orthonormal");
    s.code = cr::Code(w, 1e-8);
  } else if (j.contains("basis_states")) {
    std::vector<std::size_t> states;
    for (int v : parse_int_list(j.at("basis_states"), where + ".basis_states")) {
      if (v < 0 || static_cast<std::size_t>(v) >= s.dim) throw SchemaError(where + ".basis_states: index out of range");
      states.push_back(static_cast<std::size_t>(v));
    }
    if (states.empty()) throw SchemaError(where + ".basis_states: empty");
    s.code = cr::Code::from_basis_states(s.dim, states);
  } else if (j.contains("majorana_ring")) {
    const auto& sys = s.require_fermions(where);
    const json& r = j.at("majorana_ring");
    const auto unpaired = parse_region(require_field(r, "unpaired", where + ".majorana_ring"), sys, where + ".majorana_ring.unpaired");
    std::vector<std::pair<int, int>> pairing;
    if (r.contains("pairing"))
      for (const auto& p : r.at("pairing")) {
        const auto pq = parse_region(p, sys, where + ".majorana_ring.pairing");
        if (pq.size() != 2) throw SchemaError(where + ".majorana_ring.pairing: pairs of two indices expected");
        pairing.emplace_back(pq[0], pq[1]);
      }
    try {
      s.ring = cr::majorana_ring(sys, unpaired, pairing, Channel::identity(s.dim));
    } catch (const cr::PreconditionError& e) {
      throw SchemaError(where + ".majorana_ring: " + e.what());
    }
    s.ring->noise.reset();
    s.code = s.ring->code;
  } else {
    throw SchemaError(where + ": expected isometry, basis_states or majorana_ring");
  }
}

}  // namespace detail

inline Scenario parse_scenario(const json& j, const std::string& path = {}) {
  if (!j.is_object()) throw SchemaError("scenario: top level must be an object");
  if (j.contains("schema") && j.at("schema") != kScenarioSchema) throw SchemaError("scenario: unexpected schema name");
  if (j.contains("version") && (!j.at("version").is_number_integer() || j.at("version").get<int>() != kSchemaVersion))
    throw SchemaError("scenario: unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  Scenario s;
  s.path = path;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw SchemaError("scenario.seed: non-negative integer expected");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("tolerance")) {
    if (!j.at("tolerance").is_number() || j.at("tolerance").get<double>() <= 0) throw SchemaError("scenario.tolerance: positive number expected");
    s.tolerance = j.at("tolerance").get<double>();
  }

  const json& sys = require_field(j, "system", "scenario");
  if (sys.contains("fermion_modes")) {
    const json& n = sys.at("fermion_modes");
    if (!n.is_number_integer() || n.get<int>() < 1 || n.get<int>() > 7) throw SchemaError("scenario.system.fermion_modes: integer in [1, 7] expected");
    s.fermions.emplace(n.get<int>());
    s.dim = s.fermions->dim();
  } else if (sys.contains("qudits")) {
    s.dim = 1;
    for (int q : parse_int_list(sys.at("qudits"), "scenario.system.qudits")) {
      if (q < 2) throw SchemaError("scenario.system.qudits: dimensions must be >= 2");
      s.qudits.push_back(static_cast<std::size_t>(q));
      s.dim *= static_cast<std::size_t>(q);
    }
    if (s.qudits.empty() || s.dim > 256) throw SchemaError("scenario.system.qudits: total dimension must be in [2, 256]");
  } else {
    throw SchemaError("scenario.system: expected fermion_modes or qudits");
  }

  try {
    if (j.contains("algebras")) {
      if (!j.at("algebras").is_object()) throw SchemaError("scenario.algebras: expected an object");
      for (const auto& [name, spec] : j.at("algebras").items())
        s.algebras.emplace(name, detail::parse_algebra(spec, s, "algebras." + name));
    }
    if (j.contains("channels")) {
      if (!j.at("channels").is_object()) throw SchemaError("scenario.channels: expected an object");
      for (const auto& [name, spec] : j.at("channels").items())
        s.channels.emplace(name, detail::parse_channel(spec, s, "channels." + name));
    }
    if (!s.channels.count("identity")) s.channels.emplace("identity", Channel::identity(s.dim));
    if (j.contains("code")) detail::parse_code(j.at("code"), s, "code");
  } catch (const cr::DimensionError& e) {
    throw SchemaError(std::string("dimension mismatch: ") + e.what());
  } catch (const cr::PreconditionError& e) {
    throw SchemaError(std::string("invalid input: ") + e.what());
  }

  const json& tasks = require_field(j, "tasks", "scenario");
  if (!tasks.is_array() || tasks.empty()) throw SchemaError("scenario.tasks: expected a non-empty array");
  s.tasks = tasks;
  return s;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace crtool
