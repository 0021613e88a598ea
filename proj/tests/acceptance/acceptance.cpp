// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mrws/analysis.hpp"
#include "mrws/calculus.hpp"
#include "mrws/cli.hpp"
#include "mrws/elliptic.hpp"
#include "mrws/evolution.hpp"
#include "support/oracles.hpp"

using namespace mrws;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// A random graph instance with a stable address, so problems may point at it.
struct Instance {
  Space space;
  Domain domain;
};

std::unique_ptr<Instance> make_instance(oracle::Rng& rng, std::size_t n_min, std::size_t n_max,
                                        double loop_prob = 0.2) {
  const auto n = std::uniform_int_distribution<std::size_t>(n_min, n_max)(rng);
  const auto extra = std::uniform_int_distribution<std::size_t>(0, n)(rng);
  Space s = oracle::random_graph(rng, n, extra, loop_prob);
  Domain d = oracle::random_domain(rng, s, oracle::uniform(rng, 0.3, 0.7));
  return std::make_unique<Instance>(Instance{std::move(s), std::move(d)});
}

// True when the walk restricted to the closure connects every closure node.
bool closure_connected(const Space& s, const Domain& d) {
  const auto closure = d.closure();
  std::vector<char> seen(s.node_count(), 0);
  std::vector<NodeId> stack{closure[0]};
  seen[closure[0]] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    for (const auto& t : s.row(x))
      if (d.membership(t.target) != Membership::outside && !seen[t.target]) {
        seen[t.target] = 1;
        ++reached;
        stack.push_back(t.target);
      }
  }
  return reached == closure.size();
}

LerayLionsMap random_map(oracle::Rng& rng, const Space& space, double p, bool weighted) {
  if (!weighted) return make_plaplacian(p);
  std::vector<double> phi(space.node_count());
  for (double& v : phi) v = oracle::uniform(rng, 0.5, 2.0);
  return make_weighted_plaplacian(p, std::move(phi));
}

// Raw evaluation of a_p(x, y, r) for the built-in maps, independent of the
// library's closures.
double raw_a(const LerayLionsMap& map, NodeId x, NodeId y, double r) {
  const double w = map.kind == ApKind::weighted ? 0.5 * (map.phi[x] + map.phi[y]) : 1.0;
  return r == 0.0 ? 0.0 : w * std::pow(std::abs(r), map.p - 2.0) * r;
}

bool in_closure(const Domain& d, NodeId y) { return d.membership(y) != Membership::outside; }
bool in_omega(const Domain& d, NodeId y) { return d.membership(y) == Membership::omega; }

double oracle_div(const Space& s, const Domain& d, const LerayLionsMap& map, const Field& u, NodeId x) {
  double acc = 0.0;
  for (const auto& t : s.row(x))
    if (in_closure(d, t.target)) acc += raw_a(map, x, t.target, u.at(t.target) - u.at(x)) * t.prob;
  return acc;
}

double oracle_flux(const Space& s, const Domain& d, const LerayLionsMap& map, const Field& u, NodeId x,
                   Variant variant) {
  double acc = 0.0;
  for (const auto& t : s.row(x)) {
    const bool keep = variant == Variant::gl ? in_closure(d, t.target) : in_omega(d, t.target);
    if (keep) acc -= raw_a(map, x, t.target, u.at(t.target) - u.at(x)) * t.prob;
  }
  return acc;
}

double omega_mass(const Space& s, const Domain& d, NodeId x) {
  double m = 0.0;
  for (const auto& t : s.row(x))
    if (in_omega(d, t.target)) m += t.prob;
  return m;
}

double lq_norm_omega(const Space& s, const Domain& d, const std::function<double(NodeId)>& f, double q) {
  double acc = 0.0;
  for (NodeId x : d.omega()) {
    const double v = std::abs(f(x));
    if (std::isinf(q))
      acc = std::max(acc, v);
    else
      acc += std::pow(v, q) * s.nu(x);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

double nu_sum(const Space& s, std::span<const NodeId> nodes) {
  double a = 0.0;
  for (NodeId x : nodes) a += s.nu(x);
  return a;
}

const double kExponents[] = {1.5, 2.0, 3.0, 4.0};

// 1 ---------------------------------------------------------------------------

Outcome counterexample_reproduction() {
  Outcome o;
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int code = cli::run({"counterexample", "--levels", "20", "-p", "3", "--verify"}, out, err);
  const double runtime = seconds_since(t0);
  const std::string text = out.str();
  const bool cli_pass = code == 0 && text.find("\nPASS") != std::string::npos;

  const int N = 20;
  const double p = 3.0;
  const Counterexample ce = build_counterexample(N, p);
  double u_err = 0.0, bnd_res = 0.0;
  LerayLionsMap map = make_plaplacian(p);
  for (int n = 0; n <= N; ++n) {
    const double expected = std::pow(2.0, n / 2.0);
    const double got = n == 0 ? ce.u.at(0) : ce.u.at(static_cast<NodeId>(n));
    u_err = std::max(u_err, n == 0 ? std::abs(got) : std::abs(got - expected) / expected);
    if (n == 0) continue;
    // Hand-derived flux u(x_n)^{p-1} (3/7)^n and the residual of the drov boundary equation.
    const double phi = std::pow(expected, p - 1.0) * std::pow(3.0 / 7.0, n);
    const NodeId x = static_cast<NodeId>(n);
    const double res = oracle_flux(ce.space, ce.domain, map, ce.u, x, Variant::drov) - ce.flux.at(x);
    bnd_res = std::max({bnd_res, std::abs(res) / phi, std::abs(ce.flux.at(x) - phi) / phi});
  }
  // Interior value from the raw star weights 7^-n.
  double num = 0.0, den = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double w = std::pow(7.0, -n);
    num += w * std::pow(2.0, n);  // a(u(x_n) - 0) = u^2 = 2^n
    den += w;
  }
  const double v_direct = -num / den;
  const double v_closed = -(12.0 / 5.0) * (1.0 - std::pow(2.0 / 7.0, N)) / (1.0 - std::pow(7.0, -N));
  const double v_lib = ce.v.at(0);
  const double v_gap = std::max({std::abs(v_direct - v_closed), std::abs(v_lib - v_closed)}) / std::abs(v_closed);
  const double v_cf = std::abs(counterexample_v_closed_form(N) - v_closed) / std::abs(v_closed);

  o.pass = cli_pass && runtime < 1.0 && u_err <= 1e-12 && bnd_res <= 1e-12 && v_gap <= 1e-12 && v_cf <= 1e-12;
  o.detail = "cli_exit=" + std::to_string(code) + fmt(" runtime=%.3fs", runtime) + fmt(" u_rel=%.2e", u_err) +
             fmt(" boundary_rel=%.2e", bnd_res) + fmt(" interior_rel=%.2e", v_gap);
  return o;
}

// 2 ---------------------------------------------------------------------------

Outcome green_identities() {
  Outcome o;
  oracle::Rng rng(2002);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto inst = make_instance(rng, 4, 40);
    const auto& s = inst->space;
    const auto& d = inst->domain;
    const double p = kExponents[i % 4];
    const Variant variant = (i / 4) % 2 ? Variant::drov : Variant::gl;
    const auto map = random_map(rng, s, p, i % 3 == 0);
    const Field u = oracle::random_field(rng, d.closure(), -2.0, 2.0);
    const Field w = oracle::random_field(rng, d.closure(), -2.0, 2.0);
    const auto rep = check_greens_identities(s, d, map, u, w, variant);

    // Test-side evaluation of both sides.
    double lhs = 0.0, div_lhs = 0.0, div_rhs = 0.0, rhs = 0.0;
    for (NodeId x : d.omega()) {
      const double dv = oracle_div(s, d, map, u, x);
      lhs -= dv * w.at(x) * s.nu(x);
      div_lhs += dv * s.nu(x);
    }
    for (NodeId x : d.boundary()) {
      const double f = oracle_flux(s, d, map, u, x, variant);
      lhs += f * w.at(x) * s.nu(x);
      div_rhs += f * s.nu(x);
    }
    for (NodeId x : d.closure())
      for (const auto& t : s.row(x)) {
        if (!in_closure(d, t.target)) continue;
        if (variant == Variant::drov && !in_omega(d, x) && !in_omega(d, t.target)) continue;
        rhs += 0.5 * raw_a(map, x, t.target, u.at(t.target) - u.at(x)) * (w.at(t.target) - w.at(x)) * s.nu(x) * t.prob;
      }
    const double g1 = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
    const double g2 = std::abs(div_lhs - div_rhs) / (1.0 + std::abs(div_lhs));
    const double g3 = rep.ibp.abs_gap / (1.0 + std::abs(rep.ibp.lhs));
    const double g4 = rep.divergence.abs_gap / (1.0 + std::abs(rep.divergence.lhs));
    const double g5 = std::abs(rep.ibp.lhs - lhs) / (1.0 + std::abs(lhs));
    worst = std::max({worst, g1, g2, g3, g4, g5});
  }
  const double runtime = seconds_since(t0);
  o.pass = worst <= 1e-12 && runtime < 10.0;
  o.detail = fmt("max_scaled_gap=%.2e", worst) + fmt(" runtime=%.2fs", runtime);
  return o;
}

// 3 ---------------------------------------------------------------------------

Outcome solver_cross_validation() {
  Outcome o;
  oracle::Rng rng(3003);
  double worst_oracle = 0.0, worst_dense = 0.0, worst_oracle_dense = 0.0;
  int unconverged = 0, dense_cases = 0;
  for (int i = 0; i < 40; ++i) {
    auto inst = make_instance(rng, 3, 20);
    const double p = kExponents[i % 4];
    const Variant variant = (i / 4) % 2 ? Variant::drov : Variant::gl;
    EllipticProblem pb;
    pb.space = &inst->space;
    pb.domain = &inst->domain;
    pb.map = random_map(rng, inst->space, p, i % 5 == 0 && p != 2.0);
    pb.variant = variant;
    pb.lambda = oracle::uniform(rng, 0.2, 2.0);
    pb.z = oracle::random_field(rng, inst->domain.omega());
    pb.flux = oracle::random_field(rng, inst->domain.boundary(), -0.5, 0.5);
    const auto rep = solve_resolvent(pb);
    if (!rep.converged) ++unconverged;
    const Field ref = oracle_solve(pb);
    worst_oracle = std::max(worst_oracle, oracle::max_abs_diff(rep.u, ref, inst->domain.closure()));
    if (p == 2.0 && pb.map.kind == ApKind::plaplacian) {
      const Field dense = oracle::dense_p2_solve(inst->space, inst->domain, pb.lambda, pb.z, pb.flux,
                                                 variant == Variant::drov);
      ++dense_cases;
      worst_dense = std::max(worst_dense, oracle::max_abs_diff(rep.u, dense, inst->domain.closure()));
      if (variant == Variant::gl)
        worst_oracle_dense = std::max(worst_oracle_dense, oracle::max_abs_diff(ref, dense, inst->domain.closure()));
    }
  }
  o.pass = unconverged == 0 && worst_oracle <= 1e-6 && worst_dense <= 1e-10 && worst_oracle_dense <= 1e-10 &&
           dense_cases > 0;
  o.detail = fmt("newton_vs_oracle=%.2e", worst_oracle) + fmt(" p2_newton_vs_dense=%.2e", worst_dense) +
             fmt(" p2_oracle_vs_dense=%.2e", worst_oracle_dense) +
             " unconverged=" + std::to_string(unconverged);
  return o;
}

// 4 ---------------------------------------------------------------------------

Outcome penalized_consistency() {
  Outcome o;
  oracle::Rng rng(4004);
  const double levels[] = {10.0, 100.0, 1000.0};
  double mono_n = 0.0, mono_k = 0.0, limit_gap = 0.0;
  for (int i = 0; i < 10; ++i) {
    auto inst = make_instance(rng, 3, 12);
    EllipticProblem pb;
    pb.space = &inst->space;
    pb.domain = &inst->domain;
    pb.map = make_plaplacian(kExponents[i % 4]);
    pb.variant = i % 2 ? Variant::drov : Variant::gl;
    pb.lambda = oracle::uniform(rng, 0.2, 2.0);
    pb.z = oracle::random_field(rng, inst->domain.omega());
    pb.flux = oracle::random_field(rng, inst->domain.boundary(), -0.5, 0.5);
    const double K = 1.0 + penalized_bound(pb, 1e6, 1e6);
    std::vector<std::vector<Field>> grid(3, std::vector<Field>(3));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) grid[a][b] = solve_penalized(pb, levels[a], levels[b], K);
    const auto closure = inst->domain.closure();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (NodeId x : closure) {
          if (a + 1 < 3) mono_n = std::max(mono_n, grid[a][b].at(x) - grid[a + 1][b].at(x));
          if (b + 1 < 3) mono_k = std::max(mono_k, grid[a][b + 1].at(x) - grid[a][b].at(x));
        }
    const Field far = solve_penalized(pb, 1e6, 1e6, K);
    const auto rep = solve_resolvent(pb);
    limit_gap = std::max(limit_gap, oracle::max_abs_diff(far, rep.u, closure));
  }
  o.pass = mono_n <= 1e-12 && mono_k <= 1e-12 && limit_gap <= 1e-4;
  o.detail = fmt("max_decrease_in_n=%.2e", mono_n) + fmt(" max_increase_in_k=%.2e", mono_k) +
             fmt(" gap_at_1e6=%.2e", limit_gap);
  return o;
}

// 5 ---------------------------------------------------------------------------

Outcome mass_ledger_check() {
  Outcome o;
  oracle::Rng rng(5005);
  double worst = 0.0, worst_free = 0.0;
  for (int i = 0; i < 60; ++i) {
    const bool flux_free = i >= 50;
    auto inst = make_instance(rng, 4, 20);
    EvolutionProblem pb;
    pb.space = &inst->space;
    pb.domain = &inst->domain;
    pb.map = random_map(rng, inst->space, kExponents[i % 4], i % 3 == 0);
    pb.variant = (i / 4) % 2 ? Variant::drov : Variant::gl;
    pb.u0 = oracle::random_field(rng, inst->domain.omega());
    pb.flux = flux_free ? Field::zeros(inst->domain.boundary())
                        : oracle::random_field(rng, inst->domain.boundary(), -0.5, 0.5);
    pb.dt = 0.05;
    pb.horizon = 1.0;
    const auto traj = evolve(pb);
    if (traj.times.size() != 21) return {false, "expected 20 steps"};
    double scale = 1.0;
    for (NodeId x : inst->domain.omega()) scale += std::abs(pb.u0.at(x)) * inst->space.nu(x);
    for (NodeId x : inst->domain.boundary()) scale += pb.horizon * std::abs(pb.flux.at(x)) * inst->space.nu(x);
    // Test-side ledger from the stored fields.
    double drift = 0.0;
    for (NodeId x : inst->domain.boundary()) drift += pb.flux.at(x) * inst->space.nu(x);
    double m0 = 0.0;
    for (NodeId x : inst->domain.omega()) m0 += traj.fields[0].at(x) * inst->space.nu(x);
    double gap = mass_ledger(traj, pb.flux, inst->space, inst->domain).max_gap;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      double m = 0.0;
      for (NodeId x : inst->domain.omega()) m += traj.fields[k].at(x) * inst->space.nu(x);
      gap = std::max(gap, std::abs((m - m0) - traj.times[k] * drift));
    }
    (flux_free ? worst_free : worst) = std::max(flux_free ? worst_free : worst, gap / scale);
  }
  o.pass = worst <= 1e-10 && worst_free <= 1e-12;
  o.detail = fmt("max_gap/scale=%.2e", worst) + fmt(" flux_free=%.2e", worst_free);
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome contraction() {
  Outcome o;
  oracle::Rng rng(6006);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    auto inst = make_instance(rng, 4, 16);
    const double p = kExponents[i % 4];
    EvolutionProblem pa;
    pa.space = &inst->space;
    pa.domain = &inst->domain;
    pa.map = random_map(rng, inst->space, p, i % 3 == 0);
    pa.variant = (i / 4) % 2 ? Variant::drov : Variant::gl;
    pa.flux = oracle::random_field(rng, inst->domain.boundary(), -0.5, 0.5);
    pa.u0 = oracle::random_field(rng, inst->domain.omega(), -2.0, 2.0);
    pa.dt = 0.1;
    pa.horizon = 1.0;
    EvolutionProblem pb = pa;
    pb.u0 = oracle::random_field(rng, inst->domain.omega(), -2.0, 2.0);
    const auto ta = evolve(pa);
    const auto tb = evolve(pb);
    for (double q : {p / (p - 1.0), 2.0, kInfinityExponent}) {
      for (int dir = 0; dir < 2; ++dir) {
        const auto& A = dir ? tb : ta;
        const auto& B = dir ? ta : tb;
        std::vector<double> norms;
        for (std::size_t k = 0; k < A.fields.size(); ++k)
          norms.push_back(lq_norm_omega(inst->space, inst->domain,
                                        [&](NodeId x) { return std::max(0.0, A.fields[k].at(x) - B.fields[k].at(x)); }, q));
        const auto rep = contraction_gap(A, B, q);
        double inc = rep.max_increase;
        for (std::size_t k = 1; k < norms.size(); ++k) inc = std::max(inc, norms[k] - norms[k - 1]);
        worst = std::max(worst, inc / (1.0 + norms[0]));
      }
    }
  }
  o.pass = worst <= 1e-9;
  o.detail = fmt("max_increase/(1+n0)=%.2e", worst);
  return o;
}

// 7 ---------------------------------------------------------------------------

Outcome accretivity() {
  Outcome o;
  oracle::Rng rng(7007);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    auto inst = make_instance(rng, 3, 16);
    const double p = kExponents[i % 4];
    const auto map = random_map(rng, inst->space, p, i % 3 == 0);
    const Field flux = oracle::random_field(rng, inst->domain.boundary(), -0.5, 0.5);
    ProbePair pair{oracle::random_field(rng, inst->domain.omega(), -2.0, 2.0),
                   oracle::random_field(rng, inst->domain.omega(), -2.0, 2.0)};
    const double scale = (1.0 + nu_sum(inst->space, inst->domain.closure())) * std::pow(1.0 + 4.0, p - 1.0) * 10.0;
    for (Variant v : {Variant::gl, Variant::drov}) {
      const double m = accretivity_probe(inst->space, inst->domain, map, flux, v, {pair});
      worst = std::min(worst, m / scale);
    }
  }
  o.pass = worst >= -1e-12;
  o.detail = fmt("min_pairing/scale=%.2e", worst);
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome drov_linf_bound() {
  Outcome o;
  oracle::Rng rng(8008);
  double worst = std::numeric_limits<double>::infinity(), mismatch = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto inst = make_instance(rng, 3, 20);
    EllipticProblem pb;
    pb.space = &inst->space;
    pb.domain = &inst->domain;
    pb.map = random_map(rng, inst->space, kExponents[i % 4], i % 2 == 0);
    pb.variant = Variant::drov;
    pb.lambda = oracle::uniform(rng, 0.2, 2.0);
    pb.z = oracle::random_field(rng, inst->domain.omega());
    pb.flux = oracle::random_field(rng, inst->domain.boundary(), -1.0, 1.0);
    const auto rep = solve_resolvent(pb);
    if (!rep.converged) return {false, "drov solve did not converge"};
    const double margin = check_linf_boundary_bound(inst->space, inst->domain, pb.map, rep, pb.flux);
    double ui = 0.0, ub = 0.0, fm = 0.0;
    for (NodeId x : inst->domain.omega()) ui = std::max(ui, std::abs(rep.u.at(x)));
    for (NodeId x : inst->domain.boundary()) {
      ub = std::max(ub, std::abs(rep.u.at(x)));
      fm = std::max(fm, std::abs(pb.flux.at(x)) / omega_mass(inst->space, inst->domain, x));
    }
    const double e = 1.0 / (pb.map.p - 1.0);
    const double mine = ui + std::pow(1.0 / pb.map.c, e) * std::pow(fm, e) - ub;
    mismatch = std::max(mismatch, std::abs(mine - margin) / (1.0 + std::abs(mine)));
    worst = std::min({worst, margin, mine});
  }
  o.pass = worst >= -1e-10 && mismatch <= 1e-12;
  o.detail = fmt("min_margin=%.3e", worst) + fmt(" library_vs_oracle=%.1e", mismatch);
  return o;
}

// 9 ---------------------------------------------------------------------------

Outcome poincare_exactness() {
  Outcome o;
  oracle::Rng rng(9009);
  double worst_slack = std::numeric_limits<double>::infinity(), worst_dense = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto inst = make_instance(rng, 3, 25);
    while (!closure_connected(inst->space, inst->domain)) inst = make_instance(rng, 3, 25);
    const auto& s = inst->space;
    const auto& d = inst->domain;
    const auto rep = poincare_p2(s, d);
    const std::vector<NodeId> closure(d.closure().begin(), d.closure().end());
    const std::vector<NodeId> omega(d.omega().begin(), d.omega().end());
    worst_dense = std::max(worst_dense, std::abs(rep.lambda_best - oracle::dense_poincare(s, closure, omega)));
    for (int k = 0; k < 50; ++k) {
      const Field u = oracle::random_field(rng, d.closure(), -1.0, 1.0);
      double mean = 0.0, mass = 0.0;
      for (NodeId x : d.omega()) {
        mean += u.at(x) * s.nu(x);
        mass += s.nu(x);
      }
      mean /= mass;
      double num = 0.0, semi = 0.0;
      for (NodeId x : d.closure()) {
        num += (u.at(x) - mean) * (u.at(x) - mean) * s.nu(x);
        for (const auto& t : s.row(x))
          if (in_closure(d, t.target)) semi += std::pow(u.at(t.target) - u.at(x), 2) * s.nu(x) * t.prob;
      }
      worst_slack = std::min(worst_slack, rep.lambda_best - std::sqrt(num / semi));
    }
  }
  const Space two = build_graph_space(std::vector<Edge>{{0, 1, 1.7}});
  const std::vector<NodeId> om{0};
  const double two_gap = std::abs(poincare_p2(two, m_boundary(two, om)).lambda_best - 1.0 / std::sqrt(2.0));
  o.pass = worst_slack >= -1e-10 && worst_dense <= 1e-10 && two_gap <= 1e-12;
  o.detail = fmt("min_slack=%.2e", worst_slack) + fmt(" dense_gap=%.2e", worst_dense) +
             fmt(" two_node_gap=%.2e", two_gap);
  return o;
}

// 10 --------------------------------------------------------------------------

Outcome poincare_breakdown() {
  Outcome o;
  std::vector<double> bounds;
  for (int N : {5, 10, 20}) {
    const auto ce = build_counterexample(N, 1.5);
    bounds.push_back(poincare_probe(ce.space, ce.domain, 1.5, 500, 1234).lambda_best);
  }
  const bool increasing = bounds[0] < bounds[1] && bounds[1] < bounds[2];
  double ratio_err = 0.0;
  for (int N = 1; N < 40; ++N) {
    const auto a = build_counterexample(N, 1.5);
    const auto b = build_counterexample(N + 1, 1.5);
    const double r = lm_infinity_norm(b.space, b.domain, b.flux) / lm_infinity_norm(a.space, a.domain, a.flux);
    ratio_err = std::max(ratio_err, std::abs(r - 2.0));
  }
  o.pass = increasing && ratio_err <= 1e-12;
  o.detail = fmt("bounds=[%.4g", bounds[0]) + fmt(", %.4g", bounds[1]) + fmt(", %.4g]", bounds[2]) +
             fmt(" lm_ratio_err=%.2e", ratio_err);
  return o;
}

// 11 --------------------------------------------------------------------------

Outcome euler_order() {
  Outcome o;
  oracle::Rng rng(1111);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const double ps[] = {2.0, 3.0, 2.0, 4.0, 3.0};
  for (int i = 0; i < 5; ++i) {
    auto inst = make_instance(rng, 5, 15);
    EvolutionProblem pb;
    pb.space = &inst->space;
    pb.domain = &inst->domain;
    pb.map = make_plaplacian(ps[i]);
    pb.variant = i % 2 ? Variant::drov : Variant::gl;
    pb.u0 = oracle::random_field(rng, inst->domain.omega());
    pb.flux = oracle::random_field(rng, inst->domain.boundary(), -0.3, 0.3);
    pb.horizon = 0.5;
    const double dt = 0.05;
    auto final_field = [&](double step) {
      EvolutionProblem q = pb;
      q.dt = step;
      return evolve(q).fields.back();
    };
    const Field ref = final_field(dt / 64.0);
    const double e1 = oracle::max_abs_diff(final_field(dt), ref, inst->domain.omega());
    const double e2 = oracle::max_abs_diff(final_field(dt / 2.0), ref, inst->domain.omega());
    const double r = e1 / e2;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  o.pass = lo >= 1.6 && hi <= 2.4;
  o.detail = fmt("ratio_range=[%.3f", lo) + fmt(", %.3f]", hi);
  return o;
}

// 12 --------------------------------------------------------------------------

Outcome subdifferential() {
  Outcome o;
  oracle::Rng rng(1212);
  const auto p2 = make_plaplacian(2.0);
  double worst_gap = std::numeric_limits<double>::infinity();
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10; ++i) {
    auto inst = make_instance(rng, 4, 20);
    const auto& s = inst->space;
    const auto& d = inst->domain;
    const Field zero = Field::zeros(d.boundary());
    auto admissible = [&] {
      const Field ui = oracle::random_field(rng, d.omega(), -1.0, 1.0);
      const Field ub = extend_boundary_gl(s, d, p2, ui, zero);
      return closure_field(d, closure_values(d, ui, ub));
    };
    // (u, v) from a homogeneous p = 2 gl resolvent solve, v = (z - u) / lambda.
    EllipticProblem pb;
    pb.space = &s;
    pb.domain = &d;
    pb.map = p2;
    pb.lambda = oracle::uniform(rng, 0.2, 2.0);
    pb.z = oracle::random_field(rng, d.omega());
    pb.flux = zero;
    const Field u = solve_resolvent(pb).u;
    std::vector<double> vv;
    for (NodeId x : d.omega()) vv.push_back((pb.z.at(x) - u.at(x)) / pb.lambda);
    const Field v({d.omega().begin(), d.omega().end()}, vv);
    std::vector<Field> ws;
    for (int k = 0; k < 5; ++k) ws.push_back(oracle::random_field(rng, d.omega(), -1.0, 1.0));
    const double scale = 1.0 + nu_sum(s, d.closure()) * 4.0;
    worst_gap = std::min(worst_gap, subdifferential_gap_p2(s, d, u, v, ws) / scale);
    for (int k = 0; k < 5; ++k) {
      const Field a = admissible();
      const Field b = admissible();
      double dd = 0.0;
      for (NodeId x : d.omega()) dd += std::pow(a.at(x) - b.at(x), 2) * s.nu(x);
      worst_slack = std::min(worst_slack, boundary_contraction_check(s, d, a, b) / (1.0 + dd));
    }
  }
  o.pass = worst_gap >= -1e-10 && worst_slack >= -1e-10;
  o.detail = fmt("min_gap/scale=%.2e", worst_gap) + fmt(" min_contraction_slack/scale=%.2e", worst_slack);
  return o;
}

// 13 --------------------------------------------------------------------------

// Random kernel instance: 1D grid on [0, 1], box or tent kernel spanning a
// few cells, Omega an interior window, smooth random data.
std::unique_ptr<Instance> make_kernel_instance(oracle::Rng& rng, std::vector<double>& coords) {
  GridSpec g;
  g.dim = 1;
  g.shape = {std::uniform_int_distribution<std::size_t>(30, 60)(rng), 1};
  g.h = 1.0 / static_cast<double>(g.shape[0] - 1);
  KernelSpec k;
  k.type = oracle::uniform(rng, 0.0, 1.0) < 0.5 ? KernelType::box : KernelType::tent;
  k.radius = g.h * oracle::uniform(rng, 2.5, 5.0);
  Space s = build_kernel_space(g, make_radial_profile(k, 1), k.radius);
  std::vector<NodeId> omega;
  const auto lo = g.shape[0] / 6, hi = g.shape[0] - g.shape[0] / 6;
  for (auto i = lo; i < hi; ++i) omega.push_back(static_cast<NodeId>(i));
  Domain d = m_boundary(s, omega);
  coords.resize(g.shape[0]);
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = g.h * static_cast<double>(i);
  return std::make_unique<Instance>(Instance{std::move(s), std::move(d)});
}

Outcome resolvent_to_data() {
  Outcome o;
  oracle::Rng rng(1313);
  bool monotone = true;
  double worst_ratio = 0.0, graph_ratio = 0.0;
  const double lambdas[] = {1.0, 1e-1, 1e-2, 1e-3};
  // Returns ||u - z||_{p'} at each lambda.
  auto sweep = [&](const Instance& inst, double p, Variant variant, const Field& z) {
    EllipticProblem pb;
    pb.space = &inst.space;
    pb.domain = &inst.domain;
    pb.map = make_plaplacian(p);
    pb.variant = variant;
    pb.z = z;
    pb.flux = Field::zeros(inst.domain.boundary());
    std::vector<double> errs;
    for (double lambda : lambdas) {
      pb.lambda = lambda;
      const auto rep = solve_resolvent(pb);
      if (!rep.converged) monotone = false;
      errs.push_back(lq_norm_omega(inst.space, inst.domain,
                                   [&](NodeId x) { return rep.u.at(x) - z.at(x); }, p / (p - 1.0)));
    }
    for (std::size_t k = 1; k < errs.size(); ++k) monotone = monotone && errs[k] < errs[k - 1];
    return errs.back() /
           lq_norm_omega(inst.space, inst.domain, [&](NodeId x) { return z.at(x); }, p / (p - 1.0));
  };
  for (int i = 0; i < 10; ++i) {
    const double p = kExponents[i % 4];
    const Variant variant = i % 2 ? Variant::drov : Variant::gl;
    std::vector<double> xs;
    auto inst = make_kernel_instance(rng, xs);
    double c[3], th[3];
    for (int k = 0; k < 3; ++k) {
      c[k] = oracle::uniform(rng, -1.0, 1.0);
      th[k] = oracle::uniform(rng, 0.0, 6.283185307179586);
    }
    std::vector<double> zv;
    for (NodeId x : inst->domain.omega()) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += c[k] * std::sin((k + 1) * 3.141592653589793 * xs[x] + th[k]);
      zv.push_back(v);
    }
    const Field z({inst->domain.omega().begin(), inst->domain.omega().end()}, zv);
    worst_ratio = std::max(worst_ratio, sweep(*inst, p, variant, z));

    // Rough data on a random graph: monotonicity only.
    auto g = make_instance(rng, 4, 20);
    graph_ratio = std::max(graph_ratio, sweep(*g, p, variant, oracle::random_field(rng, g->domain.omega())));
  }
  o.pass = monotone && worst_ratio <= 1e-3;
  o.detail = std::string("monotone=") + (monotone ? "yes" : "no") + fmt(" max_ratio_at_1e-3=%.3e", worst_ratio) +
             fmt(" rough_graph_data_ratio=%.3e", graph_ratio);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"counterexample_reproduction", counterexample_reproduction},
      {"green_identities", green_identities},
      {"solver_cross_validation", solver_cross_validation},
      {"penalized_consistency", penalized_consistency},
      {"mass_ledger", mass_ledger_check},
      {"contraction_maximum_principle", contraction},
      {"complete_accretivity", accretivity},
      {"drov_linf_boundary_bound", drov_linf_bound},
      {"poincare_exactness", poincare_exactness},
      {"counterexample_poincare_breakdown", poincare_breakdown},
      {"implicit_euler_order", euler_order},
      {"subdifferential_identification", subdifferential},
      {"resolvent_to_data", resolvent_to_data},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("%-4s %2d %-34s (%.2fs) %s\n", out.pass ? "PASS" : "FAIL", index, c.name, seconds_since(t0),
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
