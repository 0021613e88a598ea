#include "mrws/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mrws/calculus.hpp"
#include "mrws/elliptic.hpp"
#include "mrws/kernels.hpp"

namespace mrws {

namespace {

double signed_pow(double r, double e) {
  return r == 0.0 ? 0.0 : std::pow(std::abs(r), e) * (r > 0 ? 1.0 : -1.0);
}

// sup of ||u - mean_M u||_{L^2(S, nu)}^2 / sum_{S x S} (grad u)^2 over u not
// constant on S. `nodes` are closure-local indices of S, `in_mean` marks
// which of them define the mean.
PoincareReport eigen_poincare(const Space& space, const Domain& domain,
                              const std::vector<std::size_t>& nodes,
                              const std::vector<bool>& in_mean) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  PoincareReport report;
  report.p = 2.0;
  report.exact = true;
  std::vector<NodeId> support;
  for (std::size_t i : nodes) support.push_back(domain.global(i));
  if (n <= 1) {
    report.extremal = Field::zeros(support);
    return report;
  }

  std::vector<std::int64_t> pos(domain.size(), -1);
  for (Eigen::Index a = 0; a < n; ++a) pos[nodes[a]] = a;
  Eigen::VectorXd nu(n), w_mean = Eigen::VectorXd::Zero(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    nu[a] = space.nu(domain.global(nodes[a]));
    if (in_mean[a]) w_mean[a] = nu[a];
  }
  w_mean /= w_mean.sum();

  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - Eigen::VectorXd::Ones(n) * w_mean.transpose();
  const Eigen::MatrixXd A = P.transpose() * nu.asDiagonal() * P;

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t i = nodes[a];
    for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
      const std::int64_t b = pos[tgt[e]];
      if (b < 0 || b == a) continue;
      const double w = nu[a] * prob[e];
      L(a, a) += 2.0 * w;
      L(a, b) -= 2.0 * w;
    }
  }
  L = 0.5 * (L + L.transpose());

  // Orthonormal basis of the complement of the constants.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(n, 1));
  const Eigen::MatrixXd Qfull = qr.householderQ();
  const Eigen::MatrixXd Q = Qfull.rightCols(n - 1);
  Eigen::MatrixXd Ar = Q.transpose() * A * Q;
  Eigen::MatrixXd Lr = Q.transpose() * L * Q;
  Ar = 0.5 * (Ar + Ar.transpose());
  Lr = 0.5 * (Lr + Lr.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lcheck(Lr, Eigen::EigenvaluesOnly);
  if (lcheck.eigenvalues().minCoeff() <= 1e-13 * lcheck.eigenvalues().maxCoeff())
    throw InvalidInput("degenerate seminorm: the node set is disconnected under the walk");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ar, Lr);
  if (ges.info() != Eigen::Success) throw NumericalFailure("generalized eigen-solve failed");
  Eigen::Index top = 0;
  ges.eigenvalues().maxCoeff(&top);
  const double mu = std::max(ges.eigenvalues()[top], 0.0);
  Eigen::VectorXd vec = Q * ges.eigenvectors().col(top);
  vec /= vec.cwiseAbs().maxCoeff();

  report.lambda_best = std::sqrt(mu);
  report.extremal = Field(support, std::vector<double>(vec.data(), vec.data() + n));
  return report;
}

struct RatioParts {
  double norm = 0.0;  // sum nu |u - mean|^p
  double semi = 0.0;  // sum_{Q1} |grad u|^p nu m
};

// Closure-local evaluation of the Poincare ratio pieces, optionally with
// gradients of both sums.
class RatioEvaluator {
 public:
  RatioEvaluator(const Space& space, const Domain& domain, double p)
      : domain_(domain), p_(p), nu_(domain.size()), omega_(domain.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      nu_[i] = space.nu(domain.global(i));
      omega_[i] = domain.local_in_omega(i);
      if (omega_[i]) total += nu_[i];
    }
    omega_nu_ = total;
  }

  double mean(std::span<const double> u) const {
    kernels::CompensatedSum acc;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (omega_[i]) acc.add(u[i] * nu_[i]);
    return acc.value() / omega_nu_;
  }

  RatioParts parts(std::span<const double> u) const {
    const double m = mean(u);
    kernels::CompensatedSum norm, semi;
    const auto off = domain_.offsets();
    const auto tgt = domain_.targets();
    const auto prob = domain_.probs();
    for (std::size_t i = 0; i < u.size(); ++i) {
      norm.add(nu_[i] * std::pow(std::abs(u[i] - m), p_));
      for (std::size_t e = off[i]; e < off[i + 1]; ++e)
        semi.add(nu_[i] * prob[e] * std::pow(std::abs(u[tgt[e]] - u[i]), p_));
    }
    return {norm.value(), semi.value()};
  }

  double log_ratio(std::span<const double> u) const {
    const auto r = parts(u);
    if (r.semi <= 0.0 || r.norm <= 0.0) return -HUGE_VAL;
    return (std::log(r.norm) - std::log(r.semi)) / p_;
  }

  // nu-preconditioned ascent direction of log_ratio.
  void direction(std::span<const double> u, std::span<double> d) const {
    const auto r = parts(u);
    const double m = mean(u);
    const auto off = domain_.offsets();
    const auto tgt = domain_.targets();
    const auto prob = domain_.probs();
    std::vector<double> gn(u.size()), gs(u.size(), 0.0);
    double pull = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      gn[i] = p_ * nu_[i] * signed_pow(u[i] - m, p_ - 1.0);
      pull += gn[i];
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (omega_[i]) gn[i] -= nu_[i] / omega_nu_ * pull;
      for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
        const double a = p_ * nu_[i] * prob[e] * signed_pow(u[tgt[e]] - u[i], p_ - 1.0);
        gs[i] -= a;
        gs[tgt[e]] += a;
      }
    }
    for (std::size_t i = 0; i < u.size(); ++i)
      d[i] = (gn[i] / r.norm - gs[i] / r.semi) / (p_ * nu_[i]);
  }

  // Shift to zero Omega-mean and scale to unit sup norm.
  void normalize(std::span<double> u) const {
    const double m = mean(u);
    double big = 0.0;
    for (double& v : u) {
      v -= m;
      big = std::max(big, std::abs(v));
    }
    if (big > 0.0)
      for (double& v : u) v /= big;
  }

 private:
  const Domain& domain_;
  double p_;
  std::vector<double> nu_;
  std::vector<bool> omega_;
  double omega_nu_ = 0.0;
};

void require_homogeneous_p2(const Domain& domain, std::span<const double> u, const char* what) {
  const auto map = make_plaplacian(2.0);
  const auto flux = local::neumann_flux(domain, map, u, Variant::gl);
  double scale = 1.0;
  for (double v : u) scale = std::max(scale, std::abs(v));
  for (double f : flux)
    if (std::abs(f) > 1e-10 * scale)
      throw InvalidInput(std::string(what) + " violates the homogeneous boundary relation");
}

}  // namespace

PoincareReport poincare_p2(const Space& space, const Domain& domain) {
  std::vector<std::size_t> nodes(domain.size());
  std::vector<bool> in_mean(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    nodes[i] = i;
    in_mean[i] = domain.local_in_omega(i);
  }
  return eigen_poincare(space, domain, nodes, in_mean);
}

double poincare_ratio(const Space& space, const Domain& domain, const Field& u, double p) {
  if (!(p > 1.0)) throw InvalidInput("p must be > 1");
  RatioEvaluator eval(space, domain, p);
  const auto parts = eval.parts(closure_values(domain, u));
  if (parts.norm == 0.0) return 0.0;
  if (parts.semi == 0.0) return HUGE_VAL;
  return std::pow(parts.norm / parts.semi, 1.0 / p);
}

PoincareReport poincare_probe(const Space& space, const Domain& domain, double p, int iterations,
                              std::uint64_t seed) {
  if (!(p > 1.0)) throw InvalidInput("p must be > 1");
  constexpr std::size_t kRestarts = 20;
  RatioEvaluator eval(space, domain, p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t n = domain.size();

  PoincareReport report;
  report.p = p;
  report.exact = false;
  // Besides the random starts, ascend from the node indicators whose walk
  // leaves the node least often: 1 / m_x(closure \ {x}) ranks them.
  constexpr std::size_t kIndicatorStarts = 5;
  std::vector<std::pair<double, std::size_t>> escape(n);
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0;
    for (std::size_t e = off[i]; e < off[i + 1]; ++e)
      if (tgt[e] != i) out += prob[e];
    escape[i] = {out, i};
  }
  const std::size_t n_ind = std::min(kIndicatorStarts, n);
  std::partial_sort(escape.begin(), escape.begin() + static_cast<std::ptrdiff_t>(n_ind), escape.end());

  double best = -HUGE_VAL;
  std::vector<double> best_u(n, 0.0), u(n), d(n), trial(n);
  for (std::size_t start = 0; start < kRestarts + n_ind; ++start) {
    if (start < kRestarts) {
      for (double& v : u) v = uni(rng);
    } else {
      std::fill(u.begin(), u.end(), 0.0);
      u[escape[start - kRestarts].second] = 1.0;
    }
    eval.normalize(u);
    double f = eval.log_ratio(u);
    double step = 0.5;
    for (int it = 0; it < iterations; ++it) {
      eval.direction(u, d);
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (!(dmax > 0.0) || !std::isfinite(dmax)) break;
      bool moved = false;
      for (; step > 1e-14; step *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + step * d[i] / dmax;
        eval.normalize(trial);
        const double ft = eval.log_ratio(trial);
        if (ft > f) {
          u.swap(trial);
          f = ft;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      step = std::min(1.0, 2.0 * step);
    }
    if (f > best) {
      best = f;
      best_u = u;
    }
  }
  const Field witness = closure_field(domain, best_u);
  report.extremal = witness;
  report.lambda_best = poincare_ratio(space, domain, witness, p);
  return report;
}

PoincareReport boundary_poincare_p2(const Space& space, const Domain& domain) {
  const auto brows = domain.boundary_rows();
  if (brows.empty()) throw InvalidInput("empty boundary");
  std::vector<std::size_t> nodes(brows.begin(), brows.end());
  return eigen_poincare(space, domain, nodes, std::vector<bool>(nodes.size(), true));
}

double boundary_poincare_ratio(const Space& space, const Domain& domain, const Field& u) {
  const auto brows = domain.boundary_rows();
  std::vector<std::int64_t> pos(domain.size(), -1);
  std::vector<double> vals(brows.size());
  kernels::CompensatedSum mass, total;
  for (std::size_t k = 0; k < brows.size(); ++k) {
    pos[brows[k]] = static_cast<std::int64_t>(k);
    const NodeId x = domain.global(brows[k]);
    vals[k] = u.at(x);
    mass.add(space.nu(x));
    total.add(space.nu(x) * vals[k]);
  }
  const double m = total.value() / mass.value();
  kernels::CompensatedSum norm, semi;
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  for (std::size_t k = 0; k < brows.size(); ++k) {
    const std::size_t i = brows[k];
    const double nu = space.nu(domain.global(i));
    norm.add(nu * (vals[k] - m) * (vals[k] - m));
    for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
      if (pos[tgt[e]] < 0) continue;
      const double g = vals[static_cast<std::size_t>(pos[tgt[e]])] - vals[k];
      semi.add(nu * prob[e] * g * g);
    }
  }
  if (norm.value() == 0.0) return 0.0;
  if (semi.value() == 0.0) return HUGE_VAL;
  return std::sqrt(norm.value() / semi.value());
}

double counterexample_v_closed_form(int levels) {
  const double N = levels;
  return -(12.0 / 5.0) * (1.0 - std::pow(2.0 / 7.0, N)) / (1.0 - std::pow(7.0, -N));
}

Counterexample build_counterexample(int levels, double p) {
  if (levels < 1 || levels > 40) throw InvalidInput("counterexample levels must lie in [1, 40]");
  if (!(p > 1.0)) throw InvalidInput("p must be > 1");
  std::vector<Edge> edges;
  std::vector<std::string> labels{"x0"};
  for (int n = 1; n <= levels; ++n) {
    const double to_root = std::pow(7.0, -n);
    edges.push_back({0, static_cast<NodeId>(n), to_root});
    edges.push_back({static_cast<NodeId>(n), static_cast<NodeId>(n), std::pow(3.0, -n) - to_root});
    labels.push_back("x" + std::to_string(n));
  }
  Space space = build_graph_space(edges, static_cast<std::size_t>(levels) + 1, labels);
  std::vector<NodeId> omega{0};
  Domain domain = m_boundary(space, omega);
  if (domain.boundary().size() != static_cast<std::size_t>(levels))
    throw NumericalFailure("counterexample boundary lost levels to the threshold");

  std::vector<double> u(static_cast<std::size_t>(levels) + 1, 0.0);
  std::vector<double> flux(static_cast<std::size_t>(levels));
  kernels::CompensatedSum v;
  for (int n = 1; n <= levels; ++n) {
    u[n] = std::pow(2.0, n / (p - 1.0));
    const double a = std::pow(u[n], p - 1.0);
    flux[n - 1] = a * space.prob(static_cast<NodeId>(n), 0);
    v.add(-a * space.prob(0, static_cast<NodeId>(n)));
  }
  Field uf(std::vector<NodeId>(domain.closure().begin(), domain.closure().end()), u);
  Field vf({0}, {v.value()});
  Field ff(std::vector<NodeId>(domain.boundary().begin(), domain.boundary().end()), flux);
  return Counterexample{std::move(space), omega, std::move(domain), std::move(uf), std::move(vf), std::move(ff)};
}

double subdifferential_gap_p2(const Space& space, const Domain& domain, const Field& u,
                              const Field& v, const std::vector<Field>& w_samples) {
  const auto map = make_plaplacian(2.0);
  const auto uv = closure_values(domain, u);
  require_homogeneous_p2(domain, uv, "u");
  const auto div = local::divergence(domain, map, uv);
  const auto orows = domain.omega_rows();
  double scale = 1.0;
  for (double x : uv) scale = std::max(scale, std::abs(x));
  for (std::size_t k = 0; k < orows.size(); ++k)
    if (std::abs(v.at(domain.global(orows[k])) + div[k]) > 1e-10 * scale)
      throw InvalidInput("v is not -div_m u on Omega");

  const double Fu = dirichlet_energy(space, domain, u, 2.0, Variant::gl);
  const Field zero_flux = Field::zeros(domain.boundary());
  double best = HUGE_VAL;
  for (const Field& w : w_samples) {
    const Field interior = w.restrict_to(domain.omega());
    const Field boundary = extend_boundary_gl(space, domain, map, interior, zero_flux);
    const Field wc = closure_field(domain, closure_values(domain, interior, boundary));
    kernels::CompensatedSum pairing;
    for (NodeId x : domain.omega()) pairing.add(v.at(x) * (wc.at(x) - u.at(x)) * space.nu(x));
    const double gap = dirichlet_energy(space, domain, wc, 2.0, Variant::gl) - Fu - pairing.value();
    best = std::min(best, gap);
  }
  return w_samples.empty() ? 0.0 : best;
}

double boundary_contraction_check(const Space& space, const Domain& domain, const Field& u1,
                                  const Field& u2) {
  const auto a = closure_values(domain, u1);
  const auto b = closure_values(domain, u2);
  require_homogeneous_p2(domain, a, "u1");
  require_homogeneous_p2(domain, b, "u2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  kernels::CompensatedSum interior, boundary;
  for (std::size_t i : domain.omega_rows()) interior.add(d[i] * d[i] * space.nu(domain.global(i)));
  for (std::size_t i : domain.boundary_rows())
    boundary.add(domain.mass_in_omega(i) * d[i] * d[i] * space.nu(domain.global(i)));
  const double bb = pair_integral(space, domain, Region::boundary_boundary, [&](NodeId x, NodeId y) {
    const double g = d[static_cast<std::size_t>(domain.local(y))] - d[static_cast<std::size_t>(domain.local(x))];
    return g * g;
  });
  return interior.value() - (boundary.value() + bb);
}

double lm_infinity_norm(const Space&, const Domain& domain, const Field& flux) {
  double out = 0.0;
  const auto brows = domain.boundary_rows();
  for (std::size_t k = 0; k < brows.size(); ++k) {
    const double f = flux.at(domain.global(brows[k]));
    if (f == 0.0) continue;
    const double mass = domain.mass_in_omega(brows[k]);
    if (mass <= domain.epsilon()) return std::numeric_limits<double>::infinity();
    out = std::max(out, std::abs(f) / mass);
  }
  return out;
}

}  // namespace mrws
