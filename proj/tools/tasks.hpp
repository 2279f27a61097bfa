#pragma once

// Task validation and execution. Each task is validated against the scenario
// (names, dimensions, required fields) before any task runs.

#include <chrono>
#include <functional>
#include <future>
#include <set>
#include <string>
#include <vector>

#include "cr/recovery.hpp"
#include "scenario.hpp"

namespace crtool {

inline const std::set<std::string>& task_types() {
  static const std::set<std::string> t{"algebra",          "channel",           "kl",
                                       "superselection_kl", "tensor_local",      "fermion_local",
                                       "fidelity_optimal",  "fidelity_environment", "duality",
                                       "seesaw"};
  return t;
}

/// Numerical failure inside a task (exit code 3).
class TaskNumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSettings {
  std::uint64_t seed = cr::kDefaultSeed;
  std::optional<double> tol;  // command-line override
};

struct TaskOutcome {
  json entry;
  bool numerical_failure = false;
};

// ----------------------------------------------------------------- serialization

inline json report_json(const cr::CorrectabilityReport& r) {
  json j;
  j["criterion"] = r.criterion;
  j["verdict"] = cr::to_string(r.verdict);
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["flags"] = json::object();
  for (const auto& [k, v] : r.flags) j["flags"][k] = v;
  j["diagnostics"] = json::object();
  for (const auto& [k, v] : r.diagnostics) j["diagnostics"][k] = v;
  j["coefficients"] = json::array();
  for (const auto& t : r.coefficients) {
    json values = json::array();
    for (const auto& v : t.values) values.push_back(complex_json(v));
    j["coefficients"].push_back({{"name", t.name}, {"shape", t.shape}, {"values", std::move(values)}});
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

inline json fidelity_json(const cr::FidelityResult& f, double tol, bool with_optimizer = true) {
  json j;
  j["value"] = f.value;
  j["tolerance"] = tol;
  j["status"] = cr::to_string(f.status);
  j["constraint"] = f.constraint;
  j["duality_gap"] = f.duality_gap;
  j["primal_residual"] = f.primal_residual;
  j["dual_residual"] = f.dual_residual;
  j["iterations"] = f.iterations;
  if (f.heuristic) {
    j["heuristic"] = true;
    j["converged"] = f.converged;
  }
  if (f.upper_bound) j["upper_bound"] = *f.upper_bound;
  if (with_optimizer && f.optimizer.size() > 0)
    j["optimizer"] = {{"in_dim", f.optimizer_in}, {"out_dim", f.optimizer_out}, {"choi", matrix_json(f.optimizer)}};
  return j;
}

// ------------------------------------------------------------------ task context

class TaskContext {
 public:
  TaskContext(const Scenario& s, const json& task, std::size_t index, const RunSettings& rs)
      : s_(s), t_(task), where_("tasks[" + std::to_string(index) + "]"), rs_(rs), index_(index) {
    if (!t_.is_object()) throw SchemaError(where_ + ": expected an object");
    type_ = require_string(t_, "type", where_);
    if (!task_types().count(type_)) throw SchemaError(where_ + ": unknown task type '" + type_ + "'");
    if (t_.contains("tol") && (!t_.at("tol").is_number() || t_.at("tol").get<double>() <= 0))
      throw SchemaError(where_ + ".tol: positive number expected");
  }

  [[nodiscard]] const std::string& type() const { return type_; }

  /// Override > task > scenario > per-type default.
  [[nodiscard]] double tol(double fallback) const {
    if (rs_.tol) return *rs_.tol;
    if (t_.contains("tol")) return t_.at("tol").get<double>();
    if (s_.tolerance) return *s_.tolerance;
    return fallback;
  }

  [[nodiscard]] std::string str(const char* key, const std::string& fallback = {}) const {
    if (!t_.contains(key)) {
      if (fallback.empty()) throw SchemaError(where_ + ": missing field '" + key + "'");
      return fallback;
    }
    if (!t_.at(key).is_string()) throw SchemaError(where_ + "." + key + ": expected a string");
    return t_.at(key).get<std::string>();
  }

  [[nodiscard]] const Channel& channel(const char* key, const std::string& fallback = {}) const {
    return s_.channel(str(key, fallback), where_ + "." + key);
  }

  [[nodiscard]] const Channel& noise() const {
    if (t_.contains("noise")) return channel("noise");
    if (s_.channels.count("noise")) return s_.channels.at("noise");
    throw SchemaError(where_ + ": missing field 'noise' and the scenario has no channel named 'noise'");
  }

  [[nodiscard]] const AlgebraBasis& algebra(const char* key) const { return s_.algebra(str(key), where_ + "." + key); }

  [[nodiscard]] const cr::Code& code() const { return s_.require_code(where_); }

  void require_square_on_system(const Channel& c, const std::string& what) const {
    if (c.in_dim() != s_.dim || c.out_dim() != s_.dim)
      throw SchemaError(where_ + ": " + what + " must act on the " + std::to_string(s_.dim) + "-dimensional system");
  }

  [[nodiscard]] std::vector<std::string> ops() const {
    std::vector<std::string> out;
    if (t_.contains("ops")) {
      for (const auto& o : t_.at("ops")) {
        if (!o.is_string()) throw SchemaError(where_ + ".ops: expected strings");
        out.push_back(o.get<std::string>());
      }
    } else if (t_.contains("op")) {
      out.push_back(str("op"));
    }
    if (out.empty()) throw SchemaError(where_ + ": missing field 'op'");
    return out;
  }

  [[nodiscard]] CMatrix state() const {
    const json fallback = s_.code ? json("code") : json("maximally_mixed");
    const json& st = t_.contains("state") ? t_.at("state") : fallback;
    if (st.is_string()) {
      const std::string name = st.get<std::string>();
      if (name == "code") return code().maximally_mixed();
      if (name == "maximally_mixed") return cr::identity(s_.dim) / static_cast<double>(s_.dim);
      throw SchemaError(where_ + ".state: expected \"code\", \"maximally_mixed\" or a matrix");
    }
    const CMatrix rho = parse_matrix(st, where_ + ".state");
    if (static_cast<std::size_t>(rho.rows()) != s_.dim || rho.rows() != rho.cols())
      throw SchemaError(where_ + ".state: expected a " + std::to_string(s_.dim) + "x" + std::to_string(s_.dim) + " matrix");
    if (!cr::is_psd(rho, 1e-10) || std::abs(rho.trace() - 1.0) > 1e-8) throw SchemaError(where_ + ".state: not a density matrix");
    return rho;
  }

  [[nodiscard]] cr::RecoveryConstraint constraint() const {
    if (!t_.contains("constraint")) return cr::RecoveryConstraint::unconstrained();
    const json& c = t_.at("constraint");
    const std::string w = where_ + ".constraint";
    const std::string kind = c.is_string() ? c.get<std::string>() : require_string(c, "kind", w);
    if (kind == "none") return cr::RecoveryConstraint::unconstrained();
    if (kind == "physical") {
      const Channel& p = s_.channel(c.is_object() && c.contains("p") ? c.at("p").get<std::string>() : "parity_dephasing", w + ".p");
      const Channel& q = s_.channel(c.is_object() && c.contains("q") ? c.at("q").get<std::string>() : "parity_dephasing", w + ".q");
      return cr::RecoveryConstraint::physical(p, q);
    }
    if (kind == "fixes") {
      if (!c.is_object()) throw SchemaError(w + ": fixes needs an algebra");
      return cr::RecoveryConstraint::fixes(s_.algebra(require_string(c, "algebra", w), w + ".algebra"));
    }
    throw SchemaError(w + ": unknown constraint kind '" + kind + "'");
  }

  [[nodiscard]] cr::MajoranaIndices region() const {
    const auto& sys = s_.require_fermions(where_);
    if (!t_.contains("region")) return sys.all_majoranas();
    return detail::parse_region(t_.at("region"), sys, where_ + ".region");
  }

  [[nodiscard]] std::vector<CMatrix> sector_projectors() const {
    if (t_.contains("charge_algebra")) return cr::minimal_central_projectors(algebra("charge_algebra"));
    const auto& sys = s_.require_fermions(where_ + " (no charge_algebra given)");
    const auto p = cr::global_parity(sys);
    return {p.plus, p.minus};
  }

  [[nodiscard]] std::pair<std::size_t, std::size_t> bipartition() const {
    const auto dims = parse_int_list(t_.contains("dims") ? t_.at("dims") : json(), where_ + ".dims");
    if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) throw SchemaError(where_ + ".dims: expected [dim_a, dim_b]");
    const auto da = static_cast<std::size_t>(dims[0]), db = static_cast<std::size_t>(dims[1]);
    if (da * db != s_.dim) throw SchemaError(where_ + ".dims: product must equal the system dimension");
    return {da, db};
  }

  [[nodiscard]] int rounds() const {
    if (!t_.contains("rounds")) return 8;
    if (!t_.at("rounds").is_number_integer() || t_.at("rounds").get<int>() < 1) throw SchemaError(where_ + ".rounds: positive integer expected");
    return t_.at("rounds").get<int>();
  }

  [[nodiscard]] std::uint64_t seed() const { return rs_.seed + index_; }
  [[nodiscard]] const Scenario& scenario() const { return s_; }
  [[nodiscard]] const std::string& where() const { return where_; }

 private:
  const Scenario& s_;
  const json& t_;
  std::string where_;
  const RunSettings& rs_;
  std::size_t index_;
  std::string type_;
};

// ------------------------------------------------------------------------ tasks

inline constexpr std::size_t kMaxChoiDim = 256;

namespace detail {

inline json algebra_task(const TaskContext& c, bool dry) {
  const AlgebraBasis& a = c.algebra("algebra");
  const auto ops = c.ops();
  for (const auto& op : ops)
    if (op != "commutant" && op != "center" && op != "blocks") throw SchemaError(c.where() + ": unknown algebra op '" + op + "'");
  if (dry) return {};
  const double tol = c.tol(1e-8);
  json j;
  j["dim"] = a.dim();
  j["tolerance"] = tol;
  for (const auto& op : ops) {
    if (op == "commutant") {
      const auto cm = cr::commutant(a);
      j["commutant"] = {{"dim", cm.dim()}, {"double_commutant_angle", cr::max_principal_angle(cr::commutant(cm), a)}};
    } else if (op == "center") {
      const auto z = cr::center(a);
      j["center"] = {{"dim", z.dim()}, {"minimal_projectors", cr::minimal_central_projectors(a).size()}};
    } else {
      const auto bs = cr::block_structure(a);
      json sectors = json::array();
      for (const auto& sec : bs.sectors)
        sectors.push_back({{"rank", sec.left_dim * sec.right_dim}, {"left_dim", sec.left_dim}, {"right_dim", sec.right_dim}});
      const double res = cr::factorization_residual(a, bs);
      j["blocks"] = {{"sectors", sectors}, {"factorization_residual", res}};
      if (res > tol) throw TaskNumericalError("block structure does not reproduce the algebra");
    }
  }
  return j;
}

inline json channel_task(const TaskContext& c, bool dry) {
  const Channel& n = c.channel("channel");
  const auto ops = c.ops();
  for (const auto& op : ops) {
    if (op == "complement") continue;
    if (op == "local_complement") {
      if (c.algebra("algebra").ambient_dim() != n.out_dim()) throw SchemaError(c.where() + ": algebra must live on the channel output");
    } else if (op == "physical") {
      const Channel& p = c.channel("p", "parity_dephasing");
      const Channel& q = c.channel("q", "parity_dephasing");
      if (p.in_dim() != n.in_dim() || q.in_dim() != n.out_dim()) throw SchemaError(c.where() + ": p/q dimensions do not match the channel");
    } else if (op == "local") {
      if (c.algebra("algebra").ambient_dim() != n.out_dim() || n.in_dim() != n.out_dim())
        throw SchemaError(c.where() + ": locality needs a square channel on the algebra's space");
    } else {
      throw SchemaError(c.where() + ": unknown channel op '" + op + "'");
    }
  }
  if (dry) return {};
  const double tol = c.tol(1e-8);
  json j;
  j["tolerance"] = tol;
  for (const auto& op : ops) {
    if (op == "complement") {
      const Channel k = cr::complementary(n);
      j["complement"] = {{"in_dim", k.in_dim()}, {"out_dim", k.out_dim()}, {"kraus_rank", k.kraus_rank()}};
    } else if (op == "local_complement") {
      const AlgebraBasis& b = c.algebra("algebra");
      const Channel k = cr::local_complementary(n, b);
      j["local_complement"] = {{"in_dim", k.in_dim()},
                               {"out_dim", k.out_dim()},
                               {"kraus_rank", k.kraus_rank()},
                               {"consistency_residual", cr::local_complementary_residual(n, b)}};
    } else if (op == "physical") {
      const auto r = cr::is_physical(n, c.channel("p", "parity_dephasing"), c.channel("q", "parity_dephasing"), tol);
      j["physical"] = {{"physical", r.physical}, {"residual", r.residual}};
    } else {
      const AlgebraBasis& a = c.algebra("algebra");
      const AlgebraBasis b = c.scenario().algebras.count(c.str("complement_algebra", "-")) ? c.algebra("complement_algebra")
                                                                                          : cr::commutant(a);
      const auto r = cr::is_local(n, a, b, tol);
      j["local"] = {{"local", r.local},
                    {"strong", r.strong},
                    {"maps_into_residual", r.maps_into_residual},
                    {"adjoint_residual", r.fixes.adjoint_residual},
                    {"commutation_residual", r.fixes.commutation_residual}};
    }
  }
  return j;
}

inline json check_task(const TaskContext& c, bool dry) {
  const std::string& type = c.type();
  if (type == "tensor_local") {
    const auto [da, db] = c.bipartition();
    const Channel& na = c.noise();
    if (na.in_dim() != da || na.out_dim() != da) throw SchemaError(c.where() + ": noise must act on the first factor");
    const auto& code = c.code();
    (void)db;
    if (dry) return {};
    return report_json(cr::tensor_local_check(code, da, c.scenario().dim / da, na.kraus(), c.tol(1e-8)));
  }
  const Channel& n = c.noise();
  c.require_square_on_system(n, "noise");
  const auto& code = c.code();
  if (type == "kl") {
    if (dry) return {};
    return report_json(cr::kl_check(code, n.kraus(), c.tol(1e-8)));
  }
  if (type == "superselection_kl") {
    const auto projectors = c.sector_projectors();
    if (dry) return {};
    return report_json(cr::superselection_kl_check(code, n.kraus(), projectors, c.tol(1e-8)));
  }
  const auto region = c.region();
  const auto& sys = c.scenario().require_fermions(c.where());
  if (dry) {
    // parity and region membership of every Kraus operator are preconditions
    for (const auto& e : n.kraus())
      if (cr::region_membership_residual(sys, region, e) > 1e-8)
        throw SchemaError(c.where() + ": noise Kraus operators must be even and supported on the region");
    return {};
  }
  return report_json(cr::fermion_local_check(code, n.kraus(), sys, region, c.tol(1e-8)));
}

inline json fidelity_task(const TaskContext& c, bool dry) {
  const Channel& n = c.noise();
  const Channel& m = c.channel("target", "identity");
  if (n.in_dim() != c.scenario().dim || m.in_dim() != n.in_dim())
    throw SchemaError(c.where() + ": noise and target must share the system as input");
  const CMatrix rho = c.state();
  const auto con = c.constraint();
  if (con.kind == cr::RecoveryConstraint::Kind::physical && (con.p->in_dim() != m.out_dim() || con.q->in_dim() != n.out_dim()))
    throw SchemaError(c.where() + ".constraint: projectors do not match the channel outputs");
  if (con.kind == cr::RecoveryConstraint::Kind::fixes && (con.b->ambient_dim() != n.out_dim() || n.out_dim() != m.out_dim()))
    throw SchemaError(c.where() + ".constraint: algebra must live on both outputs");
  const std::string& type = c.type();
  // the dense solver holds the recovery's Choi matrix and its Schur complement
  const std::size_t choi = type == "fidelity_environment" ? n.kraus_rank() * m.kraus_rank() : n.out_dim() * m.out_dim();
  const std::size_t choi_both = std::max(n.out_dim() * m.out_dim(), n.kraus_rank() * m.kraus_rank());
  if ((type == "duality" ? choi_both : choi) > kMaxChoiDim)
    throw SchemaError(c.where() + ": recovery Choi dimension exceeds " + std::to_string(kMaxChoiDim) + " for the dense SDP solver");
  if (type == "seesaw") (void)c.code(), (void)c.rounds();
  if (dry) return {};

  if (type == "fidelity_optimal" || type == "fidelity_environment") {
    const double tol = c.tol(1e-7);
    const auto f = type == "fidelity_optimal" ? cr::optimal_recovery_fidelity(n, m, rho, con, tol)
                                              : cr::environment_side_fidelity(n, m, rho, con, tol);
    if (!f.ok()) throw TaskNumericalError(std::string("SDP ended with status ") + cr::to_string(f.status));
    return fidelity_json(f, tol);
  }
  if (type == "duality") {
    const double tol = c.tol(1e-5);
    const auto d = cr::verify_duality(n, m, rho, con, tol);
    if (!d.determinate) throw TaskNumericalError("one side of the duality did not solve to optimality");
    return {{"lhs", fidelity_json(d.lhs, 1e-7, false)},
            {"rhs", fidelity_json(d.rhs, 1e-7, false)},
            {"difference", d.difference},
            {"tolerance", tol},
            {"pass", d.pass}};
  }
  const double tol = c.tol(1e-6);
  const auto f = cr::worst_case_fidelity_seesaw(n, m, c.code(), c.rounds(), tol, c.seed());
  if (!f.ok()) throw TaskNumericalError(std::string("SDP ended with status ") + cr::to_string(f.status));
  json j = fidelity_json(f, tol);
  j["seed"] = c.seed();
  return j;
}

inline json dispatch(const TaskContext& c, bool dry) {
  const std::string& t = c.type();
  if (t == "algebra") return algebra_task(c, dry);
  if (t == "channel") return channel_task(c, dry);
  if (t == "kl" || t == "superselection_kl" || t == "tensor_local" || t == "fermion_local") return check_task(c, dry);
  return fidelity_task(c, dry);
}

}  // namespace detail

/// Validate every task, then run them concurrently; entries keep task order.
inline std::vector<TaskOutcome> run_tasks(const Scenario& s, const RunSettings& rs) {
  std::vector<TaskContext> contexts;
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    contexts.emplace_back(s, s.tasks[i], i, rs);
    try {
      detail::dispatch(contexts.back(), true);
    } catch (const cr::DimensionError& e) {
      throw SchemaError(contexts.back().where() + ": dimension mismatch: " + e.what());
    } catch (const cr::PreconditionError& e) {
      throw SchemaError(contexts.back().where() + ": " + e.what());
    }
  }

  std::vector<std::future<TaskOutcome>> futures;
  for (std::size_t i = 0; i < contexts.size(); ++i)
    futures.push_back(std::async(std::launch::async, [&c = contexts[i], i]() {
      TaskOutcome out;
      out.entry["index"] = i;
      out.entry["type"] = c.type();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        out.entry["result"] = detail::dispatch(c, false);
        out.entry["status"] = "ok";
      } catch (const TaskNumericalError& e) {
        out.numerical_failure = true;
        out.entry["status"] = "numerical_error";
        out.entry["error"] = e.what();
      } catch (const cr::NumericalError& e) {
        out.numerical_failure = true;
        out.entry["status"] = "numerical_error";
        out.entry["error"] = e.what();
      }
      out.entry["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return out;
    }));
  std::vector<TaskOutcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());
  return outcomes;
}

}  // namespace crtool
