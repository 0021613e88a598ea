#include "mrws/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "mrws/calculus.hpp"
#include "mrws/kernels.hpp"

namespace mrws {

namespace {

double omega_mass(const Space& space, const Domain& domain, const Field& u) {
  kernels::CompensatedSum acc;
  for (NodeId x : domain.omega()) acc.add(u.at(x) * space.nu(x));
  return acc.value();
}

double boundary_flux_mass(const Space& space, const Domain& domain, const Field& flux) {
  kernels::CompensatedSum acc;
  for (NodeId x : domain.boundary()) acc.add(flux.at(x) * space.nu(x));
  return acc.value();
}

}  // namespace

void EvolutionProblem::validate() const {
  if (space == nullptr || domain == nullptr) throw InvalidInput("problem needs a space and a domain");
  if (!(dt > 0.0) || !(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("dt and T must be > 0");
  if (dt > horizon) throw InvalidInput("dt must not exceed T");
  if (!std::equal(u0.support().begin(), u0.support().end(), domain->omega().begin(), domain->omega().end()))
    throw InvalidInput("u0 must be defined exactly on Omega");
}

Trajectory evolve(const EvolutionProblem& problem, const SolveOptions& options) {
  problem.validate();
  const Space& space = *problem.space;
  const Domain& domain = *problem.domain;

  Trajectory traj;
  for (NodeId x : domain.omega()) traj.omega_nu.push_back(space.nu(x));
  traj.times.push_back(0.0);
  traj.fields.push_back(problem.u0);
  traj.boundary_traces.emplace_back();
  traj.masses.push_back(omega_mass(space, domain, problem.u0));

  EllipticProblem step{problem.space, problem.domain, problem.map, problem.variant, problem.dt,
                       problem.u0, problem.flux};
  step.validate();

  const auto steps = static_cast<long>(std::ceil(problem.horizon / problem.dt - 1e-9));
  Field closure;
  for (long k = 1; k <= steps; ++k) {
    const double t_prev = traj.times.back();
    const double t = k == steps ? problem.horizon : std::min(problem.horizon, k * problem.dt);
    step.lambda = t - t_prev;
    step.z = traj.fields.back();
    SolveReport report = closure.empty() ? solve_resolvent(step, options)
                                         : solve_resolvent(step, closure, options);
    if (!report.converged) {
      traj.step_reports.push_back(report);
      throw EvolutionFailure("step " + std::to_string(k) + " at t=" + std::to_string(t) +
                                 " did not converge: " + report.diagnostics,
                             std::move(traj));
    }
    closure = report.u;
    traj.times.push_back(t);
    traj.fields.push_back(report.u.restrict_to(domain.omega()));
    traj.boundary_traces.push_back(report.u.restrict_to(domain.boundary()));
    traj.masses.push_back(omega_mass(space, domain, traj.fields.back()));
    traj.step_reports.push_back(std::move(report));
  }
  return traj;
}

LedgerReport mass_ledger(const Trajectory& trajectory, const Field& flux, const Space& space,
                         const Domain& domain) {
  LedgerReport out;
  if (trajectory.masses.empty()) return out;
  const double rate = boundary_flux_mass(space, domain, flux);
  const double m0 = trajectory.masses.front();
  for (std::size_t k = 0; k < trajectory.masses.size(); ++k) {
    const double gap = std::abs((trajectory.masses[k] - m0) - trajectory.times[k] * rate);
    out.gaps.push_back(gap);
    out.max_gap = std::max(out.max_gap, gap);
  }
  return out;
}

ContractionReport contraction_gap(const Trajectory& a, const Trajectory& b, double q) {
  if (!(q >= 1.0)) throw InvalidInput("contraction exponent must be >= 1");
  if (a.times != b.times) throw InvalidInput("trajectories use different time grids");
  if (a.omega_nu != b.omega_nu) throw InvalidInput("trajectories live on different domains");
  ContractionReport out;
  for (std::size_t k = 0; k < a.fields.size(); ++k) {
    const auto ua = a.fields[k].values();
    const auto ub = b.fields[k].values();
    if (ua.size() != ub.size() || ua.size() != a.omega_nu.size())
      throw InvalidInput("trajectory fields do not match");
    double norm = 0.0;
    if (std::isinf(q)) {
      for (std::size_t i = 0; i < ua.size(); ++i) norm = std::max(norm, std::max(ua[i] - ub[i], 0.0));
    } else {
      kernels::CompensatedSum acc;
      for (std::size_t i = 0; i < ua.size(); ++i)
        acc.add(std::pow(std::max(ua[i] - ub[i], 0.0), q) * a.omega_nu[i]);
      norm = std::pow(acc.value(), 1.0 / q);
    }
    if (!out.norms.empty()) out.max_increase = std::max(out.max_increase, norm - out.norms.back());
    out.norms.push_back(norm);
  }
  return out;
}

std::function<double(double)> probe_function(double eps, double M) {
  if (!(eps > 0.0) || !(M > eps)) throw InvalidInput("probe needs 0 < eps < M");
  const double w = std::min(eps, 0.25 * (M - eps));
  // I(s) = s^3 - s^4 / 2 has I' = 3s^2 - 2s^3, rising from 0 to 1 on [0, 1].
  auto ramp = [](double s) { return s * s * s - 0.5 * s * s * s * s; };
  return [=](double r) {
    const double a = std::abs(r);
    double q;
    if (a <= eps) q = 0.0;
    else if (a <= eps + w) q = w * ramp((a - eps) / w);
    else if (a <= M - w) q = 0.5 * w + (a - eps - w);
    else if (a <= M) q = (M - w - eps) - w * ramp((M - a) / w);
    else q = M - eps - w;
    return r < 0 ? -q : q;
  };
}

double accretivity_probe(const Space& space, const Domain& domain, const LerayLionsMap& map,
                         const Field& flux, Variant variant, const std::vector<ProbePair>& pairs,
                         const std::vector<double>& eps_values, const std::vector<double>& M_values) {
  std::vector<std::function<double(double)>> probes;
  for (double e : eps_values)
    for (double M : M_values) probes.push_back(probe_function(e, M));

  auto extended = [&](const Field& u) {
    const Field interior = u.restrict_to(domain.omega());
    const Field boundary = extend_boundary(space, domain, map, interior, flux, variant);
    return closure_values(domain, interior, boundary);
  };

  double best = HUGE_VAL;
  const auto orows = domain.omega_rows();
  for (const auto& pair : pairs) {
    const auto u1 = extended(pair.u1);
    const auto u2 = extended(pair.u2);
    const auto d1 = local::divergence(domain, map, u1);
    const auto d2 = local::divergence(domain, map, u2);
    for (const auto& q : probes) {
      kernels::CompensatedSum acc;
      for (std::size_t k = 0; k < orows.size(); ++k) {
        const std::size_t i = orows[k];
        // v = -div, so v1 - v2 = d2 - d1.
        acc.add((d2[k] - d1[k]) * q(u1[i] - u2[i]) * space.nu(domain.global(i)));
      }
      best = std::min(best, acc.value());
    }
  }
  return pairs.empty() ? 0.0 : best;
}

}  // namespace mrws
