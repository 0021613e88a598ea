#include "mrws/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "mrws/calculus.hpp"
#include "mrws/kernels.hpp"
#include "mrws/newton.hpp"

namespace mrws {

namespace {

struct Penalty {
  double inv_n = 0.0;
  double inv_k = 0.0;
  double K = 0.0;
};

double power_term(double u, double p) { return std::pow(std::abs(u), p - 1.0) * (u < 0 ? -1.0 : 1.0); }

double power_slope(double u, double p) {
  if (p < 2.0) return (p - 1.0) * std::pow(u * u + kDerivativeDelta * kDerivativeDelta, 0.5 * (p - 2.0));
  return (p - 1.0) * std::pow(std::abs(u), p - 2.0);
}

kernels::Targets boundary_targets(Variant v) {
  return v == Variant::gl ? kernels::Targets::closure : kernels::Targets::omega;
}

// The closure system F(u) in closure-local indexing, with its Jacobian.
class System {
 public:
  System(const Domain& domain, const LerayLionsMap& map, Variant variant, double lambda,
         std::vector<double> z, std::vector<double> phi, std::optional<Penalty> penalty = {})
      : domain_(domain), map_(map), variant_(variant), lambda_(lambda), z_(std::move(z)),
        phi_(std::move(phi)), penalty_(penalty), div_(z_.size()), flux_(phi_.size()),
        diag_o_(z_.size()), diag_b_(phi_.size()), off_(domain.targets().size()) {}

  void residual(std::span<const double> u, std::span<double> f) const {
    const auto orows = domain_.omega_rows();
    const auto brows = domain_.boundary_rows();
    kernels::row_sums(domain_, map_, u, orows, kernels::Targets::closure, div_);
    kernels::row_sums(domain_, map_, u, brows, boundary_targets(variant_), flux_);
    for (std::size_t k = 0; k < orows.size(); ++k) {
      const std::size_t i = orows[k];
      f[i] = zeroth(u[i]) - lambda_ * div_[k] - z_[k];
    }
    for (std::size_t k = 0; k < brows.size(); ++k) f[brows[k]] = -flux_[k] - phi_[k];
    if (penalty_)
      for (std::size_t i = 0; i < u.size(); ++i) f[i] += penalty(u[i]);
  }

  void jacobian(std::span<const double> u, Eigen::SparseMatrix<double>& jac) const {
    const auto orows = domain_.omega_rows();
    const auto brows = domain_.boundary_rows();
    const auto off = domain_.offsets();
    const auto tgt = domain_.targets();
    kernels::row_jacobian(domain_, map_, u, orows, kernels::Targets::closure, diag_o_, off_);
    kernels::row_jacobian(domain_, map_, u, brows, boundary_targets(variant_), diag_b_, off_);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(u.size() + tgt.size());
    auto add_row = [&](std::size_t i, double diag, double scale) {
      double d = diag;
      if (penalty_) d += penalty_slope(u[i]);
      trips.emplace_back(static_cast<int>(i), static_cast<int>(i), d);
      for (std::size_t e = off[i]; e < off[i + 1]; ++e)
        if (off_[e] != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(tgt[e]), scale * off_[e]);
    };
    for (std::size_t k = 0; k < orows.size(); ++k)
      add_row(orows[k], zeroth_slope(u[orows[k]]) - lambda_ * diag_o_[k], -lambda_);
    for (std::size_t k = 0; k < brows.size(); ++k) add_row(brows[k], -diag_b_[k], -1.0);
    jac.resize(static_cast<Eigen::Index>(u.size()), static_cast<Eigen::Index>(u.size()));
    jac.setFromTriplets(trips.begin(), trips.end());
  }

 private:
  double zeroth(double u) const { return penalty_ ? std::clamp(u, -penalty_->K, penalty_->K) : u; }
  double zeroth_slope(double u) const {
    return penalty_ && std::abs(u) > penalty_->K ? 0.0 : 1.0;
  }
  double penalty(double u) const {
    return (u > 0 ? penalty_->inv_n : penalty_->inv_k) * power_term(u, map_.p);
  }
  double penalty_slope(double u) const {
    return (u > 0 ? penalty_->inv_n : penalty_->inv_k) * power_slope(u, map_.p);
  }

  const Domain& domain_;
  const LerayLionsMap& map_;
  Variant variant_;
  double lambda_;
  std::vector<double> z_;
  std::vector<double> phi_;
  std::optional<Penalty> penalty_;
  mutable std::vector<double> div_, flux_, diag_o_, diag_b_, off_;
};

double abs_tolerance(const EllipticProblem& problem, double tol) {
  return tol * (1.0 + sup_norm(problem.z) + sup_norm(problem.flux));
}

NewtonOptions newton_options(const SolveOptions& o, double abs_tol) {
  NewtonOptions n;
  n.abs_tol = abs_tol;
  n.max_iter = o.max_iter;
  n.armijo = o.armijo;
  n.min_step = o.min_step;
  return n;
}

std::vector<double> default_start(const EllipticProblem& problem) {
  const auto zv = problem.z.values();
  const double mean = zv.empty() ? 0.0 : std::accumulate(zv.begin(), zv.end(), 0.0) / zv.size();
  return closure_values(*problem.domain, problem.z,
                        Field::constant(problem.domain->boundary(), mean));
}

double mass_gap(const EllipticProblem& problem, std::span<const double> u) {
  const Domain& d = *problem.domain;
  const auto orows = d.omega_rows();
  std::vector<double> diff(orows.size());
  const auto zv = problem.z.values();
  for (std::size_t k = 0; k < orows.size(); ++k) diff[k] = u[orows[k]] - zv[k];
  const double lhs = local::weighted_sum(*problem.space, d, orows, diff);
  const double rhs = problem.lambda * local::weighted_sum(*problem.space, d, d.boundary_rows(),
                                                          problem.flux.values());
  return std::abs(lhs - rhs);
}

void require_support(const Field& f, std::span<const NodeId> nodes, const char* what) {
  if (!std::equal(f.support().begin(), f.support().end(), nodes.begin(), nodes.end()))
    throw InvalidInput(std::string(what) + " must be defined exactly on its node set");
}

}  // namespace

void EllipticProblem::validate() const {
  if (space == nullptr || domain == nullptr) throw InvalidInput("problem needs a space and a domain");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be > 0");
  if (!map.eval) throw InvalidInput("Leray-Lions map has no evaluator");
  require_support(z, domain->omega(), "z");
  require_support(flux, domain->boundary(), "flux");
  if (variant == Variant::drov) {
    const auto brows = domain->boundary_rows();
    const auto fv = flux.values();
    for (std::size_t k = 0; k < brows.size(); ++k)
      if (fv[k] != 0.0 && domain->mass_in_omega(brows[k]) < domain->epsilon())
        throw InvalidInput("drov flux on a node with m_x(Omega) below the boundary threshold");
  }
}

Field resolvent_residual(const EllipticProblem& problem, const Field& u) {
  problem.validate();
  System sys(*problem.domain, problem.map, problem.variant, problem.lambda,
             {problem.z.values().begin(), problem.z.values().end()},
             {problem.flux.values().begin(), problem.flux.values().end()});
  const auto uv = closure_values(*problem.domain, u);
  std::vector<double> f(uv.size());
  sys.residual(uv, f);
  return closure_field(*problem.domain, f);
}

Field extend_boundary_drov(const Space&, const Domain& domain, const LerayLionsMap& map,
                           const Field& u_interior, const Field& flux) {
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  const auto brows = domain.boundary_rows();
  require_support(flux, domain.boundary(), "flux");
  std::vector<double> u(domain.size(), 0.0);
  for (std::size_t i : domain.omega_rows()) u[i] = u_interior.at(domain.global(i));

  std::vector<double> out(brows.size());
  for (std::size_t k = 0; k < brows.size(); ++k) {
    const std::size_t i = brows[k];
    const NodeId x = domain.global(i);
    const double mass = domain.mass_in_omega(i);
    if (!(mass >= domain.epsilon()))
      throw InvalidInput("m_x(Omega) below the boundary threshold at node " + std::to_string(x));
    const double phi = flux.values()[k];

    auto g = [&](double r) {
      double acc = 0.0;
      for (std::size_t e = off[i]; e < off[i + 1]; ++e)
        if (domain.local_in_omega(tgt[e])) acc += map.eval(x, domain.global(tgt[e]), u[tgt[e]] - r) * prob[e];
      return -acc - phi;
    };
    auto dg = [&](double r) {
      double acc = 0.0;
      for (std::size_t e = off[i]; e < off[i + 1]; ++e)
        if (domain.local_in_omega(tgt[e])) acc += map.derivative(x, domain.global(tgt[e]), u[tgt[e]] - r) * prob[e];
      return acc;
    };

    double start = 0.0;
    for (std::size_t e = off[i]; e < off[i + 1]; ++e)
      if (domain.local_in_omega(tgt[e])) start += u[tgt[e]] * prob[e];
    start /= mass;

    double lo = start, hi = start;
    double glo = g(lo), ghi = glo;
    double step = 1.0 + std::abs(start);
    int doublings = 0;
    // g is nondecreasing in r.
    while (glo > 0.0) {
      if (++doublings > 200) throw NumericalFailure("drov boundary bracket not found at node " + std::to_string(x));
      hi = lo;
      ghi = glo;
      lo -= step;
      step *= 2.0;
      glo = g(lo);
    }
    while (ghi < 0.0) {
      if (++doublings > 200) throw NumericalFailure("drov boundary bracket not found at node " + std::to_string(x));
      lo = hi;
      glo = ghi;
      hi += step;
      step *= 2.0;
      ghi = g(hi);
    }
    double r = 0.5 * (lo + hi);
    if (glo == 0.0) r = lo;
    else if (ghi == 0.0) r = hi;
    else {
      for (int it = 0; it < 400 && hi - lo > 1e-14 * (1.0 + std::abs(r)); ++it) {
        r = 0.5 * (lo + hi);
        const double gr = g(r);
        if (gr == 0.0) { lo = hi = r; break; }
        (gr < 0.0 ? lo : hi) = r;
      }
      r = 0.5 * (lo + hi);
    }
    if (map.deriv_r) {
      const double slope = dg(r);
      if (slope > 0.0) {
        const double polished = r - g(r) / slope;
        if (std::isfinite(polished) && std::abs(g(polished)) < std::abs(g(r))) r = polished;
      }
    }
    out[k] = r;
  }
  return Field({domain.boundary().begin(), domain.boundary().end()}, std::move(out));
}

Field extend_boundary_gl(const Space&, const Domain& domain, const LerayLionsMap& map,
                         const Field& u_interior, const Field& flux) {
  require_support(flux, domain.boundary(), "flux");
  const auto brows = domain.boundary_rows();
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  std::vector<double> u(domain.size(), 0.0);
  for (std::size_t i : domain.omega_rows()) u[i] = u_interior.at(domain.global(i));
  if (brows.empty()) return Field{};

  // Boundary position of each closure node (-1 for Omega).
  std::vector<std::int64_t> bpos(domain.size(), -1);
  for (std::size_t k = 0; k < brows.size(); ++k) bpos[brows[k]] = static_cast<std::int64_t>(k);

  std::vector<double> start(brows.size());
  for (std::size_t k = 0; k < brows.size(); ++k) {
    const std::size_t i = brows[k];
    double acc = 0.0;
    for (std::size_t e = off[i]; e < off[i + 1]; ++e)
      if (domain.local_in_omega(tgt[e])) acc += u[tgt[e]] * prob[e];
    start[k] = acc / domain.mass_in_omega(i);
  }

  const auto phi = flux.values();
  std::vector<double> sums(brows.size()), diag(brows.size()), offd(tgt.size());
  auto scatter = [&](std::span<const double> b) {
    for (std::size_t k = 0; k < brows.size(); ++k) u[brows[k]] = b[k];
  };
  auto residual = [&](std::span<const double> b, std::span<double> f) {
    scatter(b);
    kernels::row_sums(domain, map, u, brows, kernels::Targets::closure, sums);
    for (std::size_t k = 0; k < brows.size(); ++k) f[k] = -sums[k] - phi[k];
  };
  auto jacobian = [&](std::span<const double> b, Eigen::SparseMatrix<double>& jac) {
    scatter(b);
    kernels::row_jacobian(domain, map, u, brows, kernels::Targets::closure, diag, offd);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t k = 0; k < brows.size(); ++k) {
      const std::size_t i = brows[k];
      trips.emplace_back(static_cast<int>(k), static_cast<int>(k), -diag[k]);
      for (std::size_t e = off[i]; e < off[i + 1]; ++e)
        if (offd[e] != 0.0 && bpos[tgt[e]] >= 0)
          trips.emplace_back(static_cast<int>(k), static_cast<int>(bpos[tgt[e]]), -offd[e]);
    }
    jac.resize(static_cast<Eigen::Index>(brows.size()), static_cast<Eigen::Index>(brows.size()));
    jac.setFromTriplets(trips.begin(), trips.end());
  };

  NewtonOptions opts;
  opts.abs_tol = 1e-13 * (1.0 + sup_norm(u_interior) + sup_norm(flux));
  opts.max_iter = 200;
  auto result = newton_solve(residual, jacobian, std::move(start), opts);
  if (!result.converged) throw NumericalFailure("gl boundary extension failed: " + result.diagnostics);
  return Field({domain.boundary().begin(), domain.boundary().end()}, std::move(result.x));
}

Field extend_boundary(const Space& space, const Domain& domain, const LerayLionsMap& map,
                      const Field& u_interior, const Field& flux, Variant variant) {
  return variant == Variant::gl ? extend_boundary_gl(space, domain, map, u_interior, flux)
                                : extend_boundary_drov(space, domain, map, u_interior, flux);
}

SolveReport solve_resolvent(const EllipticProblem& problem, const SolveOptions& options) {
  problem.validate();
  return solve_resolvent(problem, closure_field(*problem.domain, default_start(problem)), options);
}

SolveReport solve_resolvent(const EllipticProblem& problem, const Field& initial,
                            const SolveOptions& options) {
  problem.validate();
  const Domain& domain = *problem.domain;
  System sys(domain, problem.map, problem.variant, problem.lambda,
             {problem.z.values().begin(), problem.z.values().end()},
             {problem.flux.values().begin(), problem.flux.values().end()});
  auto result = newton_solve([&](auto u, auto f) { sys.residual(u, f); },
                             [&](auto u, auto& j) { sys.jacobian(u, j); },
                             closure_values(domain, initial),
                             newton_options(options, abs_tolerance(problem, options.tol)));
  SolveReport report;
  report.mass_identity_gap = mass_gap(problem, result.x);
  report.u = closure_field(domain, result.x);
  report.residual_inf = result.residual_inf;
  report.iterations = result.iterations;
  report.converged = result.converged;
  report.diagnostics = std::move(result.diagnostics);
  return report;
}

double penalized_bound(const EllipticProblem& problem, double n, double k) {
  double zmax = 0.0, fmax = 0.0;
  for (double v : problem.z.values()) zmax = std::max(zmax, std::abs(std::clamp(v, -k, n)));
  for (double v : problem.flux.values()) fmax = std::max(fmax, std::abs(std::clamp(v, -k, n)));
  const double e = 1.0 / (problem.map.p - 1.0);
  return std::max({zmax, std::pow(n * fmax, e), std::pow(k * fmax, e)});
}

Field solve_penalized(const EllipticProblem& problem, double n, double k, double K,
                      const SolveOptions& options) {
  problem.validate();
  if (!(n > 0.0) || !(k > 0.0) || !(K > 0.0)) throw InvalidInput("penalization needs n, k, K > 0");
  const Domain& domain = *problem.domain;
  std::vector<double> z(problem.z.values().begin(), problem.z.values().end());
  std::vector<double> phi(problem.flux.values().begin(), problem.flux.values().end());
  for (double& v : z) v = std::clamp(v, -k, n);
  for (double& v : phi) v = std::clamp(v, -k, n);
  System sys(domain, problem.map, problem.variant, problem.lambda, z, phi,
             Penalty{1.0 / n, 1.0 / k, K});

  EllipticProblem clipped = problem;
  clipped.z = Field({problem.z.support().begin(), problem.z.support().end()}, z);
  clipped.flux = Field({problem.flux.support().begin(), problem.flux.support().end()}, phi);
  auto result = newton_solve([&](auto u, auto f) { sys.residual(u, f); },
                             [&](auto u, auto& j) { sys.jacobian(u, j); }, default_start(clipped),
                             newton_options(options, abs_tolerance(clipped, options.tol)));
  if (!result.converged) throw NumericalFailure("penalized solve did not converge: " + result.diagnostics);
  return closure_field(domain, result.x);
}

Field oracle_solve(const EllipticProblem& problem, const OracleOptions& options) {
  problem.validate();
  if (!problem.map.is_potential()) throw InvalidInput("oracle_solve needs a built-in potential map");
  const Space& space = *problem.space;
  const Domain& domain = *problem.domain;
  const auto& map = problem.map;
  const double p = map.p;
  const double lambda = problem.lambda;
  const std::size_t n = domain.size();
  const auto orows = domain.omega_rows();
  const auto brows = domain.boundary_rows();
  const auto zv = problem.z.values();
  const auto fv = problem.flux.values();
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  const bool q2 = problem.variant == Variant::drov;

  std::vector<double> nu(n);
  for (std::size_t i = 0; i < n; ++i) nu[i] = space.nu(domain.global(i));

  // Pair weights along the closure CSR, zero outside the energy region.
  std::vector<double> pair_w(tgt.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
      const std::size_t j = tgt[e];
      if (q2 && !domain.local_in_omega(i) && !domain.local_in_omega(j)) continue;
      pair_w[e] = map.pair_weight(domain.global(i), domain.global(j)) * nu[i] * prob[e];
    }

  // nu-scaled gradient: the residual rows, with boundary rows times lambda.
  auto gradient = [&](std::span<const double> u, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
        if (pair_w[e] == 0.0) continue;
        // d/du_i of (1/(2p)) w |u_j - u_i|^p, counted once from each side.
        const double a = pair_w[e] * power_term(u[tgt[e]] - u[i], p);
        g[i] -= a;
        g[tgt[e]] += a;
      }
    for (std::size_t i = 0; i < n; ++i) g[i] *= 0.5 * lambda / nu[i];
    for (std::size_t k = 0; k < orows.size(); ++k) g[orows[k]] += u[orows[k]] - zv[k];
    for (std::size_t k = 0; k < brows.size(); ++k) g[brows[k]] -= lambda * fv[k];
  };
  auto nu_norm = [&](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i] * nu[i];
    return std::sqrt(s);
  };
  auto inf_norm = [](std::span<const double> v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
  };

  const double tol = options.grad_tol * (1.0 + sup_norm(problem.z) + sup_norm(problem.flux));
  std::vector<double> x = default_start(problem), x_prev = x, y = x, gy(n), xn(n), gx(n), diff(n);
  gradient(x, gx);
  if (inf_norm(gx) <= tol) return closure_field(domain, x);

  double L = 1.0;
  double t = 1.0;
  for (long it = 0; it < options.max_iter; ++it) {
    gradient(y, gy);
    L *= 0.8;
    for (int bt = 0; bt < 200; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = y[i] - gy[i] / L;
      gradient(xn, gx);
      for (std::size_t i = 0; i < n; ++i) diff[i] = gx[i] - gy[i];
      const double dg = nu_norm(diff);
      for (std::size_t i = 0; i < n; ++i) diff[i] = xn[i] - y[i];
      const double dx = nu_norm(diff);
      if (dx == 0.0 || dg <= L * dx) break;
      L *= 2.0;
    }
    if (inf_norm(gx) <= tol) return closure_field(domain, xn);

    // Adaptive restart when the momentum points uphill.
    double uphill = 0.0;
    for (std::size_t i = 0; i < n; ++i) uphill += gy[i] * (xn[i] - x[i]) * nu[i];
    const double t_next = uphill > 0.0 ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = uphill > 0.0 ? 0.0 : (t - 1.0) / t_next;
    x_prev.swap(x);
    x = xn;
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
    t = t_next;
  }
  return closure_field(domain, x);
}

double check_linf_boundary_bound(const Space&, const Domain& domain, const LerayLionsMap& map,
                                 const SolveReport& report, const Field& flux) {
  double u_omega = 0.0, u_boundary = 0.0, ratio = 0.0;
  for (NodeId x : domain.omega()) u_omega = std::max(u_omega, std::abs(report.u.at(x)));
  for (NodeId x : domain.boundary()) u_boundary = std::max(u_boundary, std::abs(report.u.at(x)));
  const auto brows = domain.boundary_rows();
  for (std::size_t k = 0; k < brows.size(); ++k) {
    const double f = flux.at(domain.global(brows[k]));
    if (f != 0.0) ratio = std::max(ratio, std::abs(f) / domain.mass_in_omega(brows[k]));
  }
  const double e = 1.0 / (map.p - 1.0);
  return u_omega + std::pow(1.0 / map.c, e) * std::pow(ratio, e) - u_boundary;
}

}  // namespace mrws
