// crtool: scenario runner and thin front end over the recovery library.
//
// Exit codes: 0 all tasks completed, 1 usage error, 2 schema error,
// 3 numerical failure (or a reproduction mismatch).

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scenario.hpp"
#include "tasks.hpp"

namespace {

using crtool::json;

constexpr const char* kToolVersion = "1.0.0";
constexpr double kReproduceTol = 1e-10;

struct Globals {
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  std::string output;
};

std::uint64_t resolve_seed(const Globals& g, const crtool::Scenario& s, std::optional<std::uint64_t> recorded = {}) {
  if (g.seed) return *g.seed;
  if (recorded) return *recorded;
  if (std::getenv("CONSTRAINED_RECOVERY_SEED")) return cr::default_seed();
  if (s.seed) return *s.seed;
  return cr::kDefaultSeed;
}

json build_report(const crtool::Scenario& s, const crtool::RunSettings& rs, const std::vector<crtool::TaskOutcome>& outcomes,
                  double seconds) {
  json r;
  r["schema"] = crtool::kReportSchema;
  r["version"] = crtool::kSchemaVersion;
  json prov;
  prov["tool_version"] = kToolVersion;
  prov["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION);
  prov["scenario"] = s.path;
  prov["seed"] = rs.seed;
  if (rs.tol) prov["tolerance_override"] = *rs.tol;
  if (s.tolerance) prov["scenario_tolerance"] = *s.tolerance;
  if (s.ring) prov["parity_sign_convention"] = s.ring->logical_parity_sign;
  r["provenance"] = prov;
  r["tasks"] = json::array();
  for (const auto& o : outcomes) r["tasks"].push_back(o.entry);
  r["total_seconds"] = seconds;
  return r;
}

// Flat rows task,type,quantity,value,tolerance. Matrices and coefficient
// tables are left to the JSON report.
void csv_rows(const json& j, const std::string& prefix, double tol, std::ostream& os, std::size_t task, const std::string& type) {
  if (j.is_object()) {
    const double t = j.contains("tolerance") && j.at("tolerance").is_number() ? j.at("tolerance").get<double>() : tol;
    for (const auto& [k, v] : j.items()) {
      if (k == "optimizer" || k == "coefficients" || k == "tolerance") continue;
      csv_rows(v, prefix.empty() ? k : prefix + "." + k, t, os, task, type);
    }
  } else if (j.is_number() || j.is_boolean()) {
    os << task << ',' << type << ',' << prefix << ',';
    if (j.is_boolean())
      os << (j.get<bool>() ? 1 : 0);
    else
      os << j.dump();
    os << ',' << tol << '\n';
  } else if (j.is_string()) {
    os << task << ',' << type << ',' << prefix << ',' << j.get<std::string>() << ',' << tol << '\n';
  }
}

std::string render(const json& report, const std::string& format) {
  if (format == "json") return report.dump(2) + "\n";
  std::ostringstream os;
  os.precision(17);
  os << "task,type,quantity,value,tolerance\n";
  for (const auto& t : report.at("tasks")) {
    const auto idx = t.at("index").get<std::size_t>();
    const auto type = t.at("type").get<std::string>();
    os << idx << ',' << type << ",status," << t.at("status").get<std::string>() << ",\n";
    if (t.contains("result")) csv_rows(t.at("result"), "", 0.0, os, idx, type);
  }
  return os.str();
}

// Every number outside provenance and timings must agree.
void compare_numerics(const json& a, const json& b, const std::string& path, std::vector<std::string>& diffs) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) > kReproduceTol * std::max(1.0, std::abs(x))) diffs.push_back(path);
    return;
  }
  if (a.type() != b.type()) {
    diffs.push_back(path);
    return;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (k == "seconds" || k == "total_seconds" || k == "provenance") continue;
      if (!b.contains(k)) {
        diffs.push_back(path + "." + k);
        continue;
      }
      compare_numerics(v, b.at(k), path + "." + k, diffs);
    }
    for (const auto& [k, v] : b.items())
      if (!a.contains(k)) diffs.push_back(path + "." + k);
  } else if (a.is_array()) {
    if (a.size() != b.size()) {
      diffs.push_back(path);
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i) compare_numerics(a[i], b[i], path + "[" + std::to_string(i) + "]", diffs);
  } else if (a != b) {
    diffs.push_back(path);
  }
}

void emit(const std::string& text, const Globals& g) {
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output);
  if (!out) throw crtool::SchemaError("cannot write '" + g.output + "'");
  out << text;
}

/// Parse, run, write. Returns the process exit code.
int execute(const json& scenario_json, const std::string& path, const Globals& g, const std::string& reproduce = {}) {
  std::optional<json> previous;
  std::optional<std::uint64_t> recorded;
  if (!reproduce.empty()) {
    previous = crtool::read_json_file(reproduce);
    if (!previous->is_object() || previous->value("schema", "") != crtool::kReportSchema)
      throw crtool::SchemaError("'" + reproduce + "' is not a report");
    const json& p = previous->at("provenance");
    if (p.contains("seed")) recorded = p.at("seed").get<std::uint64_t>();
  }
  const auto scenario = crtool::parse_scenario(scenario_json, path);
  crtool::RunSettings rs;
  rs.tol = g.tol;
  if (!rs.tol && previous && previous->at("provenance").contains("tolerance_override"))
    rs.tol = previous->at("provenance").at("tolerance_override").get<double>();
  rs.seed = resolve_seed(g, scenario, recorded);

  const auto t0 = std::chrono::steady_clock::now();
  const auto outcomes = crtool::run_tasks(scenario, rs);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json report = build_report(scenario, rs, outcomes, seconds);
  emit(render(report, g.format), g);

  bool failed = false;
  for (const auto& o : outcomes) failed = failed || o.numerical_failure;
  if (previous) {
    std::vector<std::string> diffs;
    compare_numerics(report.at("tasks"), previous->at("tasks"), "tasks", diffs);
    if (!diffs.empty()) {
      std::cerr << "reproduction mismatch in " << diffs.size() << " value(s), first: " << diffs.front() << '\n';
      return 3;
    }
    std::cerr << "reproduced " << report.at("tasks").size() << " task(s) within " << kReproduceTol << '\n';
  }
  return failed ? 3 : 0;
}

std::string kebab_to_snake(std::string s) {
  for (auto& c : s)
    if (c == '-') c = '_';
  return s;
}

json load_with_task(const std::string& path, json task) {
  json j = crtool::read_json_file(path);
  if (!j.is_object()) throw crtool::SchemaError("scenario: top level must be an object");
  j["tasks"] = json::array({std::move(task)});
  return j;
}

std::vector<int> parse_csv_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "expected a comma-separated list of integers");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained quantum-channel recovery: correctability checks and optimal recovery fidelities"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.tol, "Tolerance override for every task")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "PRNG seed (default: $CONSTRAINED_RECOVERY_SEED, then scenario seed)");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("-o,--output", g.output, "Write the report here instead of stdout");
  app.set_version_flag("--version", kToolVersion);

  std::function<int()> action;

  // run
  auto* run = app.add_subcommand("run", "Run every task of a scenario file");
  std::string run_path, reproduce;
  run->add_option("scenario", run_path, "Scenario JSON")->required();
  run->add_option("--reproduce", reproduce, "Earlier report; re-run with its seed and compare numerics");
  run->callback([&] { action = [&] { return execute(crtool::read_json_file(run_path), run_path, g, reproduce); }; });

  // algebra
  auto* alg = app.add_subcommand("algebra", "Commutant, center or block structure of a named algebra");
  alg->require_subcommand(1);
  std::string alg_scenario, alg_name;
  for (const char* op : {"commutant", "center", "blocks"}) {
    auto* sc = alg->add_subcommand(op);
    sc->add_option("--scenario", alg_scenario)->required();
    sc->add_option("--algebra", alg_name)->required();
    sc->callback([&, op = std::string(op)] {
      action = [&, op] {
        return execute(load_with_task(alg_scenario, {{"type", "algebra"}, {"op", op}, {"algebra", alg_name}}), alg_scenario, g);
      };
    });
  }

  // channel
  auto* chan = app.add_subcommand("channel", "Complements, physicality and locality of a named channel");
  chan->require_subcommand(1);
  std::string ch_scenario, ch_name, ch_alg, ch_comp, ch_p = "parity_dephasing", ch_q = "parity_dephasing";
  for (const char* op : {"complement", "local-complement", "physical", "local"}) {
    auto* sc = chan->add_subcommand(op);
    sc->add_option("--scenario", ch_scenario)->required();
    sc->add_option("--channel", ch_name)->required();
    const std::string o = op;
    if (o == "local-complement" || o == "local") sc->add_option("--algebra", ch_alg)->required();
    if (o == "local") sc->add_option("--complement-algebra", ch_comp, "Defaults to the commutant of --algebra");
    if (o == "physical") {
      sc->add_option("--p", ch_p, "Projector channel on the output");
      sc->add_option("--q", ch_q, "Projector channel on the input");
    }
    sc->callback([&, o] {
      action = [&, o] {
        json t{{"type", "channel"}, {"op", kebab_to_snake(o)}, {"channel", ch_name}};
        if (!ch_alg.empty()) t["algebra"] = ch_alg;
        if (!ch_comp.empty()) t["complement_algebra"] = ch_comp;
        if (o == "physical") {
          t["p"] = ch_p;
          t["q"] = ch_q;
        }
        return execute(load_with_task(ch_scenario, t), ch_scenario, g);
      };
    });
  }

  // check
  auto* chk = app.add_subcommand("check", "Exact correctability conditions");
  chk->require_subcommand(1);
  std::string ck_scenario, ck_noise, ck_charge, ck_region, ck_dims;
  for (const char* op : {"kl", "superselection-kl", "tensor-local", "fermion-local"}) {
    auto* sc = chk->add_subcommand(op);
    sc->add_option("--scenario", ck_scenario)->required();
    sc->add_option("--noise", ck_noise, "Noise channel name (default: 'noise')");
    const std::string o = op;
    if (o == "superselection-kl") sc->add_option("--charge", ck_charge, "Charge algebra whose minimal central projectors give the sectors");
    if (o == "fermion-local") sc->add_option("--region", ck_region, "Majorana indices, comma separated");
    if (o == "tensor-local") sc->add_option("--dims", ck_dims, "dim_a,dim_b")->required();
    sc->callback([&, o] {
      action = [&, o] {
        json t{{"type", kebab_to_snake(o)}};
        if (!ck_noise.empty()) t["noise"] = ck_noise;
        if (!ck_charge.empty()) t["charge_algebra"] = ck_charge;
        if (!ck_region.empty()) t["region"] = parse_csv_ints(ck_region, "--region");
        if (!ck_dims.empty()) t["dims"] = parse_csv_ints(ck_dims, "--dims");
        return execute(load_with_task(ck_scenario, t), ck_scenario, g);
      };
    });
  }

  // fidelity
  auto* fid = app.add_subcommand("fidelity", "Optimal recovery fidelities and duality");
  fid->require_subcommand(1);
  std::string fd_scenario, fd_noise, fd_target, fd_constraint = "none", fd_p = "parity_dephasing", fd_q = "parity_dephasing",
                                                fd_alg, fd_state;
  int fd_rounds = 8;
  for (const char* op : {"optimal", "environment", "duality", "seesaw"}) {
    auto* sc = fid->add_subcommand(op);
    sc->add_option("--scenario", fd_scenario)->required();
    sc->add_option("--noise", fd_noise, "Noise channel name (default: 'noise')");
    sc->add_option("--target", fd_target, "Target channel name (default: identity)");
    const std::string o = op;
    if (o == "seesaw") {
      sc->add_option("--rounds", fd_rounds)->check(CLI::PositiveNumber);
    } else {
      sc->add_option("--state", fd_state, "'code' or 'maximally_mixed'")->check(CLI::IsMember({"code", "maximally_mixed"}));
      sc->add_option("--constraint", fd_constraint)->check(CLI::IsMember({"none", "physical", "fixes"}));
      sc->add_option("--p", fd_p, "Projector channel on the target output");
      sc->add_option("--q", fd_q, "Projector channel on the noise output");
      sc->add_option("--algebra", fd_alg, "Algebra a 'fixes' recovery must fix");
    }
    sc->callback([&, o] {
      action = [&, o] {
        const std::string type = o == "optimal" ? "fidelity_optimal" : o == "environment" ? "fidelity_environment" : o;
        json t{{"type", type}};
        if (!fd_noise.empty()) t["noise"] = fd_noise;
        if (!fd_target.empty()) t["target"] = fd_target;
        if (!fd_state.empty()) t["state"] = fd_state;
        if (o == "seesaw") t["rounds"] = fd_rounds;
        if (fd_constraint == "physical") t["constraint"] = {{"kind", "physical"}, {"p", fd_p}, {"q", fd_q}};
        if (fd_constraint == "fixes") {
          if (fd_alg.empty()) throw CLI::ValidationError("--algebra", "required with --constraint fixes");
          t["constraint"] = {{"kind", "fixes"}, {"algebra", fd_alg}};
        }
        return execute(load_with_task(fd_scenario, t), fd_scenario, g);
      };
    });
  }

  // demo
  auto* demo = app.add_subcommand("demo", "Built-in examples");
  demo->require_subcommand(1);
  auto* ring = demo->add_subcommand("majorana-ring", "Majorana ring code under geometrically local and poisoning noise");
  int dm_modes = 6, dm_support = 0;
  std::string dm_unpaired, dm_pairing, dm_poison;
  ring->add_option("--modes", dm_modes)->check(CLI::Range(1, 7));
  ring->add_option("--unpaired", dm_unpaired, "Unpaired Majorana indices, comma separated")->required();
  ring->add_option("--pairing", dm_pairing, "Extra pairs a-b,c-d (default: neighbours along the ring)");
  ring->add_option("--support", dm_support, "Noise support (default: max(2, shortest interval / 2))");
  ring->add_option("--poison", dm_poison, "Majorana pair a,b for a poisoning channel");
  ring->callback([&] {
    action = [&] {
      json code{{"unpaired", parse_csv_ints(dm_unpaired, "--unpaired")}};
      if (!dm_pairing.empty()) {
        json pairs = json::array();
        std::stringstream ss(dm_pairing);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto dash = item.find('-');
          if (dash == std::string::npos) throw CLI::ValidationError("--pairing", "expected a-b pairs");
          pairs.push_back(parse_csv_ints(item.substr(0, dash) + "," + item.substr(dash + 1), "--pairing"));
        }
        code["pairing"] = pairs;
      }
      int support = dm_support;
      if (support == 0) {
        // the ring shape decides the default support; build it once to read it
        json probe{{"system", {{"fermion_modes", dm_modes}}}, {"code", {{"majorana_ring", code}}}, {"tasks", json::array({json::object()})}};
        const auto s = crtool::parse_scenario(probe);
        support = std::max(2, static_cast<int>(s.ring->shortest_interval() / 2));
      }
      json scenario{{"schema", crtool::kScenarioSchema},
                    {"version", crtool::kSchemaVersion},
                    {"system", {{"fermion_modes", dm_modes}}},
                    {"channels", {{"noise", {{"model", "geometric_noise"}, {"max_support", support}}}}},
                    {"code", {{"majorana_ring", code}}}};
      json tasks = json::array({{{"type", "superselection_kl"}}, {{"type", "kl"}}});
      if (!dm_poison.empty()) {
        scenario["channels"]["poisoning"] = {{"model", "poisoning"}, {"majoranas", parse_csv_ints(dm_poison, "--poison")}};
        tasks.push_back({{"type", "superselection_kl"}, {"noise", "poisoning"}});
      }
      scenario["tasks"] = tasks;
      return execute(scenario, "demo:majorana-ring", g);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return action ? action() : 1;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const crtool::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const cr::DimensionError& e) {
    std::cerr << "schema error: dimension mismatch: " << e.what() << '\n';
    return 2;
  } catch (const cr::PreconditionError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const cr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
}
