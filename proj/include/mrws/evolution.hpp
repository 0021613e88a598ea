#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "mrws/elliptic.hpp"

namespace mrws {

/// du/dt = div_m a_p u in Omega, N_j u = flux on the boundary, u(0) = u0.
struct EvolutionProblem {
  const Space* space = nullptr;
  const Domain* domain = nullptr;
  LerayLionsMap map;
  Variant variant = Variant::gl;
  Field u0;    // on Omega
  Field flux;  // on the boundary, time independent
  double dt = 0.1;
  double horizon = 1.0;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;             // times[0] = 0
  std::vector<Field> fields;             // on Omega
  std::vector<Field> boundary_traces;    // on the boundary; empty at t = 0
  std::vector<double> masses;            // sum_Omega u nu
  std::vector<SolveReport> step_reports; // one per step (times.size() - 1)
  std::vector<double> omega_nu;          // nu on Omega, for the L^q norms
};

/// Thrown by evolve when a step fails; carries the steps completed so far.
class EvolutionFailure : public NumericalFailure {
 public:
  EvolutionFailure(const std::string& what, Trajectory partial)
      : NumericalFailure(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Implicit Euler: u^k = (I + dt_k B)^{-1} u^{k-1}, each step warm-started
/// from the previous closure field. Uniform dt with a short final step.
Trajectory evolve(const EvolutionProblem& problem, const SolveOptions& options = {});

struct LedgerReport {
  std::vector<double> gaps;  // |(mass_k - mass_0) - t_k sum_boundary flux nu|
  double max_gap = 0.0;
};

LedgerReport mass_ledger(const Trajectory& trajectory, const Field& flux, const Space& space,
                         const Domain& domain);

struct ContractionReport {
  std::vector<double> norms;  // ||(uA - uB)^+||_{L^q(Omega, nu)} per step
  double max_increase = 0.0;
};

inline constexpr double kInfinityExponent = std::numeric_limits<double>::infinity();

/// Throws InvalidInput when the time grids or supports differ, or q < 1.
ContractionReport contraction_gap(const Trajectory& a, const Trajectory& b, double q);

/// C^1 member of the probe family: odd, 0 on [-eps, eps], slope in [0, 1]
/// with the slope rising and falling along quartic Hermite ramps, constant
/// beyond M. Needs 0 < eps < M.
std::function<double(double)> probe_function(double eps, double M);

struct ProbePair {
  Field u1;  // on Omega (at least)
  Field u2;
};

/// min over pairs and over q_{eps,M} (eps in eps_values, M in M_values) of
/// sum_Omega (v1 - v2) q(u1 - u2) nu with v = -div_m a_p u, after extending
/// each u to the boundary with the shared flux.
double accretivity_probe(const Space& space, const Domain& domain, const LerayLionsMap& map,
                         const Field& flux, Variant variant, const std::vector<ProbePair>& pairs,
                         const std::vector<double>& eps_values = {1e-3, 1e-1},
                         const std::vector<double>& M_values = {1.0, 10.0});

}  // namespace mrws
