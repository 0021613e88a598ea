#include "mrws/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>

#include "mrws/analysis.hpp"
#include "mrws/calculus.hpp"
#include "mrws/elliptic.hpp"
#include "mrws/evolution.hpp"
#include "mrws/io.hpp"
#include "mrws/kernels.hpp"

namespace mrws::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

// A property failed; the report has already been printed.
struct PropertyViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  json doc;
  std::optional<Space> space;
  std::optional<Domain> domain;
  std::optional<LerayLionsMap> map;
  std::optional<Counterexample> builtin;
  Variant variant = Variant::gl;

  const Space& sp() const { return *space; }
  const Domain& dom() const {
    if (!domain) throw InvalidInput("scenario needs 'omega'");
    return *domain;
  }
  const LerayLionsMap& ap() const {
    if (!map) throw InvalidInput("scenario needs 'ap'");
    return *map;
  }
  bool has(const char* key) const { return doc.contains(key); }
  double number(const char* key) const {
    if (!doc.contains(key)) throw InvalidInput(std::string("scenario needs '") + key + "'");
    if (!doc.at(key).is_number()) throw InvalidInput(std::string(key) + " must be a number");
    return doc.at(key).get<double>();
  }
  std::uint64_t seed() const {
    if (!doc.contains("seed")) throw InvalidInput("randomized checks need 'seed' in the scenario");
    return doc.at("seed").get<std::uint64_t>();
  }
  Field field(const char* key, std::span<const NodeId> support, bool required) const {
    if (!doc.contains(key)) {
      if (required) throw InvalidInput(std::string("scenario needs '") + key + "'");
      return Field::zeros(support);
    }
    return io::field_from_json(doc.at(key), support, key);
  }
  SolveOptions solver() const {
    SolveOptions o;
    if (!doc.contains("solver")) return o;
    const auto& s = doc.at("solver");
    io::require_known_keys(s, {"tol", "max_iter"}, "solver");
    if (s.contains("tol")) o.tol = s.at("tol").get<double>();
    if (s.contains("max_iter")) o.max_iter = s.at("max_iter").get<int>();
    if (!(o.tol > 0.0) || o.max_iter < 1) throw InvalidInput("solver.tol must be > 0 and max_iter >= 1");
    return o;
  }
};

Scenario load_scenario(const fs::path& path, const std::string& mode) {
  Scenario sc;
  sc.doc = io::read_json(path);
  const json& doc = sc.doc;
  if (doc.is_object() && (doc.contains("edges") || doc.contains("grid"))) {
    // A bare space file.
    sc.space = io::space_from_json(doc);
    sc.doc = json::object();
    return sc;
  }
  io::require_known_keys(doc, {"mode", "space", "omega", "ap", "variant", "lambda", "z", "flux", "u0",
                               "dt", "T", "solver", "seed", "p", "iterations"},
                         "scenario");
  if (doc.contains("mode") && doc.at("mode") != mode)
    throw InvalidInput("scenario mode '" + doc.at("mode").get<std::string>() + "' does not match '" + mode + "'");
  if (!doc.contains("space")) throw InvalidInput("scenario needs 'space'");

  const json& s = doc.at("space");
  if (s.is_string()) {
    fs::path file = s.get<std::string>();
    if (file.is_relative()) file = path.parent_path() / file;
    sc.space = io::load_space(file);
  } else if (s.is_object()) {
    io::require_known_keys(s, {"builtin", "levels"}, "space");
    if (s.value("builtin", "") != "counterexample") throw InvalidInput("unknown builtin space");
    const double p = doc.contains("ap") ? doc.at("ap").value("p", 2.0) : 2.0;
    sc.builtin = build_counterexample(s.at("levels").get<int>(), p);
    sc.space = sc.builtin->space;
  } else {
    throw InvalidInput("space must be a file path or a builtin object");
  }

  if (doc.contains("omega")) {
    const auto omega = doc.at("omega").get<std::vector<std::int64_t>>();
    std::vector<NodeId> nodes;
    for (auto x : omega) {
      if (x < 0 || static_cast<std::size_t>(x) >= sc.space->node_count())
        throw InvalidInput("omega node " + std::to_string(x) + " is out of range");
      nodes.push_back(static_cast<NodeId>(x));
    }
    if (nodes.empty()) throw InvalidInput("omega must be nonempty");
    sc.domain = m_boundary(*sc.space, nodes);
  } else if (sc.builtin) {
    sc.domain = sc.builtin->domain;
  }
  if (doc.contains("ap")) sc.map = io::map_from_json(doc.at("ap"), sc.space->node_count());
  if (doc.contains("variant")) sc.variant = io::variant_from_string(doc.at("variant").get<std::string>());
  return sc;
}

EllipticProblem elliptic_problem(const Scenario& sc) {
  EllipticProblem pb;
  pb.space = &sc.sp();
  pb.domain = &sc.dom();
  pb.map = sc.ap();
  pb.variant = sc.variant;
  pb.lambda = sc.number("lambda");
  pb.z = sc.field("z", sc.dom().omega(), true);
  pb.flux = sc.field("flux", sc.dom().boundary(), false);
  return pb;
}

double nu_total(const Space& space, std::span<const NodeId> nodes) {
  double s = 0.0;
  for (NodeId x : nodes) s += space.nu(x);
  return s;
}

std::ofstream open_out(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw InvalidInput("cannot write " + (dir / name).string());
  return f;
}

json domain_summary(const Domain& d) {
  return {{"omega", std::vector<NodeId>(d.omega().begin(), d.omega().end())},
          {"boundary", std::vector<NodeId>(d.boundary().begin(), d.boundary().end())},
          {"closure_size", d.size()},
          {"interior_leak", d.interior_leak()}};
}

int cmd_check(const Scenario& sc, std::ostream& out) {
  const auto balance = check_balance(sc.sp());
  json report = {{"nodes", sc.sp().node_count()},
                 {"entries", sc.sp().entry_count()},
                 {"max_reversibility_violation", balance.max_reversibility_violation},
                 {"max_invariance_violation", balance.max_invariance_violation}};
  bool ok = balance.max_reversibility_violation <= 1e-12 && balance.max_invariance_violation <= 1e-12;
  if (sc.domain) report["domain"] = domain_summary(*sc.domain);
  if (sc.map && sc.has("seed")) {
    const auto s = verify_structure(*sc.map, sc.sp(), 10000, sc.seed());
    report["structure"] = {{"antisymmetry", s.antisymmetry_violation},
                           {"monotonicity", s.monotonicity_violation},
                           {"growth", s.growth_violation},
                           {"coercivity", s.coercivity_violation}};
    ok = ok && s.clean();
  }
  out << report.dump(2) << '\n';
  if (!ok) throw PropertyViolation("balance or structure check failed");
  return ExitCode::ok;
}

int cmd_solve(const Scenario& sc, const fs::path& out_dir, std::ostream& out) {
  const auto pb = elliptic_problem(sc);
  const auto rep = solve_resolvent(pb, sc.solver());
  json report = {{"residual_inf", rep.residual_inf},
                 {"iterations", rep.iterations},
                 {"converged", rep.converged},
                 {"mass_identity_gap", rep.mass_identity_gap}};
  if (!rep.diagnostics.empty()) report["diagnostics"] = rep.diagnostics;
  {
    auto f = open_out(out_dir, "solution.csv");
    io::write_field_csv(f, sc.sp(), rep.u);
    auto r = open_out(out_dir, "report.json");
    r << report.dump(2) << '\n';
  }
  out << report.dump(2) << '\n';
  if (!rep.converged) throw NumericalFailure("solver did not converge: " + rep.diagnostics);
  const double scale = (1.0 + sup_norm(pb.z) + pb.lambda * sup_norm(pb.flux)) *
                       nu_total(sc.sp(), sc.dom().closure());
  if (rep.mass_identity_gap > 1e-10 * scale) throw PropertyViolation("mass identity violated");
  return ExitCode::ok;
}

int cmd_evolve(const Scenario& sc, const fs::path& out_dir, std::ostream& out) {
  EvolutionProblem pb;
  pb.space = &sc.sp();
  pb.domain = &sc.dom();
  pb.map = sc.ap();
  pb.variant = sc.variant;
  pb.u0 = sc.field("u0", sc.dom().omega(), true);
  pb.flux = sc.field("flux", sc.dom().boundary(), false);
  pb.dt = sc.number("dt");
  pb.horizon = sc.number("T");

  auto write = [&](const Trajectory& traj) {
    const auto ledger = mass_ledger(traj, pb.flux, sc.sp(), sc.dom());
    auto t = open_out(out_dir, "trajectory.csv");
    io::write_trajectory_csv(t, traj);
    auto l = open_out(out_dir, "ledger.csv");
    io::write_ledger_csv(l, traj, ledger);
    return ledger;
  };
  Trajectory traj;
  try {
    traj = evolve(pb, sc.solver());
  } catch (const EvolutionFailure& e) {
    write(e.partial());
    throw;
  }
  const auto ledger = write(traj);
  const double scale = (1.0 + sup_norm(pb.u0) + pb.horizon * sup_norm(pb.flux)) *
                       nu_total(sc.sp(), sc.dom().closure());
  json report = {{"steps", traj.times.size() - 1},
                 {"final_time", traj.times.back()},
                 {"final_mass", traj.masses.back()},
                 {"max_drift_gap", ledger.max_gap}};
  out << report.dump(2) << '\n';
  if (ledger.max_gap > 1e-10 * scale) throw PropertyViolation("mass ledger drift exceeds tolerance");
  return ExitCode::ok;
}

int cmd_poincare(const Scenario& sc, std::ostream& out) {
  double p = 2.0;
  if (sc.has("p")) p = sc.number("p");
  else if (sc.map) p = sc.map->p;
  PoincareReport rep;
  if (p == 2.0) {
    rep = poincare_p2(sc.sp(), sc.dom());
  } else {
    const int iterations = sc.has("iterations") ? sc.doc.at("iterations").get<int>() : 500;
    rep = poincare_probe(sc.sp(), sc.dom(), p, iterations, sc.seed());
  }
  out << json{{"p", rep.p}, {"lambda_best", rep.lambda_best}, {"exact", rep.exact}}.dump(2) << '\n';
  return ExitCode::ok;
}

int cmd_counterexample(int levels, double p, bool verify, std::ostream& out) {
  const auto ce = build_counterexample(levels, p);
  const auto map = make_plaplacian(p);
  const Domain& d = ce.domain;
  EllipticProblem pb{&ce.space, &d, map, Variant::gl, 1.0, ce.v, ce.flux};
  const auto residual = resolvent_residual(pb, ce.u);

  const double v_closed = counterexample_v_closed_form(levels);
  const double interior = ce.u.at(0) - m_divergence(ce.space, d, map, ce.u, d.omega()).at(0);
  const double interior_gap = std::abs(interior - v_closed) / std::abs(v_closed);

  std::optional<SolveReport> solved;
  if (verify) {
    EllipticProblem target = pb;
    target.z = Field({0}, {v_closed});
    solved = solve_resolvent(target);
  }

  out << "n,u,u_expected,boundary_residual_rel" << (verify ? ",u_solved_rel_err" : "") << '\n';
  double worst_boundary = 0.0, worst_solved = 0.0;
  for (int n = 0; n <= levels; ++n) {
    const auto x = static_cast<NodeId>(n);
    const double expected = n == 0 ? 0.0 : std::pow(2.0, n / (p - 1.0));
    double rel = 0.0;
    if (n > 0) {
      rel = std::abs(residual.at(x)) / std::abs(ce.flux.at(x));
      worst_boundary = std::max(worst_boundary, rel);
    }
    out << n << ',' << io::format_double(ce.u.at(x)) << ',' << io::format_double(expected) << ','
        << io::format_double(rel);
    if (solved) {
      const double err = std::abs(solved->u.at(x) - expected) / std::max(1.0, std::abs(expected));
      worst_solved = std::max(worst_solved, err);
      out << ',' << io::format_double(err);
    }
    out << '\n';
  }
  out << "interior," << io::format_double(interior) << ',' << io::format_double(v_closed) << ','
      << io::format_double(interior_gap) << '\n';
  out << "lm_infinity_norm," << io::format_double(lm_infinity_norm(ce.space, d, ce.flux)) << '\n';

  if (!verify) return ExitCode::ok;
  if (!solved->converged) throw NumericalFailure("resolvent solve did not converge: " + solved->diagnostics);
  const bool ok = worst_boundary <= 1e-12 && interior_gap <= 1e-12 && worst_solved <= 1e-9;
  out << (ok ? "PASS" : "FAIL") << " boundary_residual=" << io::format_double(worst_boundary)
      << " interior_gap=" << io::format_double(interior_gap)
      << " recovery_error=" << io::format_double(worst_solved) << '\n';
  if (!ok) throw PropertyViolation("counterexample residuals out of tolerance");
  return ExitCode::ok;
}

int cmd_verify(const Scenario& sc, std::ostream& out) {
  const auto pb = elliptic_problem(sc);
  const Space& space = sc.sp();
  const Domain& d = sc.dom();
  const auto& map = sc.ap();
  std::mt19937_64 rng(sc.seed());
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_field = [&](std::span<const NodeId> nodes) {
    std::vector<double> v(nodes.size());
    for (double& x : v) x = uni(rng);
    return Field({nodes.begin(), nodes.end()}, std::move(v));
  };

  bool all_ok = true;
  auto line = [&](const char* name, bool ok, double value) {
    all_ok = all_ok && ok;
    out << (ok ? "PASS " : "FAIL ") << name << ' ' << io::format_double(value) << '\n';
  };

  const auto balance = check_balance(space);
  line("balance", std::max(balance.max_reversibility_violation, balance.max_invariance_violation) <= 1e-12,
       std::max(balance.max_reversibility_violation, balance.max_invariance_violation));
  const auto structure = verify_structure(map, space, 10000, rng());
  line("structure", structure.clean(),
       std::max({structure.antisymmetry_violation, structure.monotonicity_violation,
                 structure.growth_violation, structure.coercivity_violation}));

  double green = 0.0;
  for (int k = 0; k < 5; ++k) {
    const auto g = check_greens_identities(space, d, map, random_field(d.closure()), random_field(d.closure()),
                                           sc.variant);
    green = std::max({green, g.ibp.abs_gap / (1.0 + std::abs(g.ibp.lhs)),
                      g.divergence.abs_gap / (1.0 + std::abs(g.divergence.lhs))});
  }
  line("green_identities", green <= 1e-12, green);

  const auto rep = solve_resolvent(pb, sc.solver());
  line("solver_converged", rep.converged, rep.residual_inf);
  if (!rep.converged) throw NumericalFailure("solver did not converge: " + rep.diagnostics);
  const double scale = (1.0 + sup_norm(pb.z) + pb.lambda * sup_norm(pb.flux)) * nu_total(space, d.closure());
  line("mass_identity", rep.mass_identity_gap <= 1e-10 * scale, rep.mass_identity_gap);

  const auto flux = neumann_flux(space, d, map, rep.u, sc.variant);
  double flux_err = 0.0;
  for (NodeId x : d.boundary()) flux_err = std::max(flux_err, std::abs(flux.at(x) - pb.flux.at(x)));
  const double tol = sc.solver().tol * (1.0 + sup_norm(pb.z) + sup_norm(pb.flux));
  line("flux_consistency", flux_err <= tol, flux_err);

  if (map.is_potential()) {
    const auto oracle = oracle_solve(pb);
    double diff = 0.0;
    for (NodeId x : d.closure()) diff = std::max(diff, std::abs(oracle.at(x) - rep.u.at(x)));
    line("oracle_agreement", diff <= 1e-6, diff);
  }

  std::vector<ProbePair> pairs;
  for (int k = 0; k < 5; ++k) pairs.push_back({random_field(d.omega()), random_field(d.omega())});
  const double pairing = accretivity_probe(space, d, map, pb.flux, sc.variant, pairs);
  line("accretivity", pairing >= -1e-12 * scale, pairing);

  if (sc.variant == Variant::drov) {
    const double margin = check_linf_boundary_bound(space, d, map, rep, pb.flux);
    line("drov_linf_bound", margin >= -1e-10, margin);
  }
  if (!all_ok) throw PropertyViolation("one or more properties failed");
  return ExitCode::ok;
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlocal p-Laplacian Neumann problems on metric random walk spaces", "mrws"};
  app.require_subcommand(1);
  int threads = 0;
  std::string out_dir = ".";
  app.add_option("--threads", threads, "OpenMP threads (falls back to MRWS_THREADS)");
  app.add_option("--out", out_dir, "Directory for CSV and report files");

  std::string config;
  auto* check = app.add_subcommand("check", "Balance and domain summary of a space or scenario");
  check->add_option("config", config, "Space file or scenario JSON")->required();
  auto* solve = app.add_subcommand("solve", "Solve the resolvent problem of a scenario");
  solve->add_option("config", config)->required();
  auto* evolve_cmd = app.add_subcommand("evolve", "Implicit Euler evolution of a scenario");
  evolve_cmd->add_option("config", config)->required();
  auto* poincare = app.add_subcommand("poincare", "Poincare constant of a scenario domain");
  poincare->add_option("config", config)->required();
  auto* verify = app.add_subcommand("verify", "Run the identity and property suite on a scenario");
  verify->add_option("config", config)->required();
  int levels = 20;
  double p = 3.0;
  bool do_verify = false;
  auto* counter = app.add_subcommand("counterexample", "Residual table of the truncated star example");
  counter->add_option("--levels", levels, "Truncation depth N")->check(CLI::Range(1, 40));
  counter->add_option("-p", p, "Exponent p > 1");
  counter->add_flag("--verify", do_verify, "Also solve the problem and check the tolerances");
  for (auto* sub : {check, solve, evolve_cmd, poincare, verify, counter}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitCode::ok;
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", e.what());
    return ExitCode::config_error;
  }

  if (threads <= 0)
    if (const char* env = std::getenv("MRWS_THREADS")) threads = std::atoi(env);
  if (threads > 0) kernels::set_threads(threads);

  try {
    if (*counter) return cmd_counterexample(levels, p, do_verify, out);
    const std::string mode = app.get_subcommands().front()->get_name();
    const Scenario sc = load_scenario(config, mode);
    if (*check) return cmd_check(sc, out);
    if (*solve) return cmd_solve(sc, out_dir, out);
    if (*evolve_cmd) return cmd_evolve(sc, out_dir, out);
    if (*poincare) return cmd_poincare(sc, out);
    if (*verify) return cmd_verify(sc, out);
  } catch (const PropertyViolation& e) {
    report_error(err, "property", e.what());
    return ExitCode::property_violation;
  } catch (const InvalidInput& e) {
    report_error(err, "config", e.what());
    return ExitCode::config_error;
  } catch (const json::exception& e) {
    report_error(err, "config", e.what());
    return ExitCode::config_error;
  } catch (const NumericalFailure& e) {
    report_error(err, "convergence", e.what());
    return ExitCode::no_convergence;
  } catch (const std::out_of_range& e) {
    report_error(err, "config", e.what());
    return ExitCode::config_error;
  }
  return ExitCode::config_error;
}

}  // namespace mrws::cli
