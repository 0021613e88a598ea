#include <doctest.h>

#include <cmath>

#include "mrws/analysis.hpp"
#include "mrws/calculus.hpp"
#include "mrws/elliptic.hpp"
#include "support/oracles.hpp"

using namespace mrws;

namespace {

std::vector<NodeId> nodes_of(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

Field admissible(oracle::Rng& rng, const Space& s, const Domain& d) {
  const Field ui = oracle::random_field(rng, d.omega());
  const Field ub = extend_boundary_gl(s, d, make_plaplacian(2.0), ui, Field::zeros(d.boundary()));
  return closure_field(d, closure_values(d, ui, ub));
}

Field shifted(const Field& u, double c) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x += c;
  return Field({u.support().begin(), u.support().end()}, v);
}

}  // namespace

TEST_CASE("two-node and path Poincare constants") {
  const Space two = build_graph_space(std::vector<Edge>{{0, 1, 1.0}});
  const std::vector<NodeId> first{0};
  const Domain d2 = m_boundary(two, first);
  const auto r2 = poincare_p2(two, d2);
  CHECK(r2.exact);
  CHECK(r2.p == 2.0);
  CHECK(r2.lambda_best == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

  const Space path = build_graph_space(std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}});
  const std::vector<NodeId> middle{1};
  const Domain dp = m_boundary(path, middle);
  const auto rp = poincare_p2(path, dp);
  CHECK(std::abs(rp.lambda_best - oracle::dense_poincare(path, nodes_of(dp.closure()), middle)) <= 1e-10);
  CHECK(poincare_ratio(path, dp, rp.extremal, 2.0) == doctest::Approx(rp.lambda_best).epsilon(1e-8));
}

TEST_CASE("Poincare constant bounds random fields and is attained") {
  oracle::Rng rng(41);
  int checked = 0;
  while (checked < 8) {
    const Space s = oracle::random_graph(rng, 14, 10, 0.2);
    const Domain d = oracle::random_domain(rng, s);
    PoincareReport rep;
    try {
      rep = poincare_p2(s, d);
    } catch (const InvalidInput&) {
      continue;  // disconnected closure
    }
    ++checked;
    CHECK(std::abs(rep.lambda_best - oracle::dense_poincare(s, nodes_of(d.closure()), nodes_of(d.omega()))) <= 1e-10);
    CHECK(poincare_ratio(s, d, rep.extremal, 2.0) == doctest::Approx(rep.lambda_best).epsilon(1e-8));
    for (int k = 0; k < 100; ++k)
      CHECK(rep.lambda_best - poincare_ratio(s, d, oracle::random_field(rng, d.closure()), 2.0) >= -1e-10);

    const auto probe = poincare_probe(s, d, 2.0, 500, 7);
    CHECK_FALSE(probe.exact);
    CHECK(probe.lambda_best <= rep.lambda_best + 1e-6);
    CHECK(probe.lambda_best >= rep.lambda_best - 1e-3);
    const auto cold = poincare_probe(s, d, 2.0, 0, 7);
    CHECK(cold.lambda_best <= rep.lambda_best + 1e-6);
    CHECK(poincare_ratio(s, d, cold.extremal, 2.0) == doctest::Approx(cold.lambda_best).epsilon(1e-12));
    CHECK(poincare_probe(s, d, 2.0, 50, 7).lambda_best == poincare_probe(s, d, 2.0, 50, 7).lambda_best);
  }
}

TEST_CASE("disconnected closures are rejected") {
  // Omega = {0, 3} on the path 0-1-2-3-4-5-6: two separate closure blocks.
  const Space s = build_graph_space(
      std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {5, 6, 1.0}});
  const std::vector<NodeId> omega{0, 5};
  const Domain d = m_boundary(s, omega);
  CHECK_THROWS_AS(poincare_p2(s, d), InvalidInput);
  CHECK_THROWS_AS(poincare_probe(s, d, 1.0, 10, 1), InvalidInput);
}

TEST_CASE("boundary Poincare constant") {
  const Space two = build_graph_space(std::vector<Edge>{{0, 1, 1.0}});
  const std::vector<NodeId> first{0};
  const auto single = boundary_poincare_p2(two, m_boundary(two, first));
  CHECK(single.exact);
  CHECK(single.lambda_best == 0.0);

  std::vector<Edge> k4;
  for (NodeId a = 0; a < 4; ++a)
    for (NodeId b = a + 1; b < 4; ++b) k4.push_back({a, b, 1.0 + a + 2.0 * b});
  const Space s = build_graph_space(k4);
  const Domain d = m_boundary(s, first);
  const auto rep = boundary_poincare_p2(s, d);
  const auto bnd = nodes_of(d.boundary());
  CHECK(std::abs(rep.lambda_best - oracle::dense_poincare(s, bnd, bnd)) <= 1e-10);
  oracle::Rng rng(42);
  for (int k = 0; k < 100; ++k)
    CHECK(rep.lambda_best - boundary_poincare_ratio(s, d, oracle::random_field(rng, d.boundary())) >= -1e-10);

  const std::vector<NodeId> all{0, 1};
  CHECK_THROWS_AS(boundary_poincare_p2(two, m_boundary(two, all)), InvalidInput);
}

TEST_CASE("counterexample star") {
  const auto one = build_counterexample(1, 2.5);
  CHECK(one.space.nu(0) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(one.space.nu(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(one.u.at(1) == doctest::Approx(std::pow(2.0, 1.0 / 1.5)).epsilon(1e-15));
  CHECK(one.flux.at(1) == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
  CHECK(one.v.at(0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(counterexample_v_closed_form(1) == doctest::Approx(-2.0).epsilon(1e-15));
  const auto map = make_plaplacian(2.5);
  const std::vector<NodeId> root{0};
  CHECK(one.u.at(0) - m_divergence(one.space, one.domain, map, one.u, root).at(0) ==
        doctest::Approx(one.v.at(0)).epsilon(1e-15));
  CHECK(neumann_flux(one.space, one.domain, map, one.u, Variant::gl).at(1) ==
        doctest::Approx(one.flux.at(1)).epsilon(1e-15));

  for (int N = 1; N <= 40; ++N) {
    const auto ce = build_counterexample(N, 3.0);
    CHECK(ce.domain.boundary().size() == static_cast<std::size_t>(N));
    CHECK(ce.v.at(0) == doctest::Approx(counterexample_v_closed_form(N)).epsilon(1e-12));
    CHECK(lm_infinity_norm(ce.space, ce.domain, ce.flux) == doctest::Approx(std::pow(2.0, N)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(build_counterexample(0, 2.0), InvalidInput);
  CHECK_THROWS_AS(build_counterexample(41, 2.0), InvalidInput);
  CHECK_THROWS_AS(build_counterexample(5, 1.0), InvalidInput);

  std::vector<double> bounds;
  for (int N : {5, 10, 20}) {
    const auto ce = build_counterexample(N, 1.5);
    bounds.push_back(poincare_probe(ce.space, ce.domain, 1.5, 200, 3).lambda_best);
  }
  CHECK(bounds[0] < bounds[1]);
  CHECK(bounds[1] < bounds[2]);
}

TEST_CASE("subdifferential and boundary contraction") {
  oracle::Rng rng(43);
  for (int i = 0; i < 10; ++i) {
    const Space s = oracle::random_graph(rng, 15, 10, 0.2);
    const Domain d = oracle::random_domain(rng, s);
    const Field c = Field::constant(d.closure(), 0.4);
    std::vector<Field> ws;
    for (int k = 0; k < 5; ++k) ws.push_back(oracle::random_field(rng, d.closure()));
    CHECK(subdifferential_gap_p2(s, d, c, Field::zeros(d.omega()), ws) >= 0.0);

    const Field u = admissible(rng, s, d);
    std::vector<double> vv;
    const Field div = m_divergence(s, d, make_plaplacian(2.0), u, d.omega());
    for (NodeId x : d.omega()) vv.push_back(-div.at(x));
    const Field v(nodes_of(d.omega()), vv);
    CHECK(std::abs(subdifferential_gap_p2(s, d, u, v, {u})) <= 1e-12);
    CHECK(subdifferential_gap_p2(s, d, u, v, ws) >= -1e-10);
    CHECK_THROWS_AS(subdifferential_gap_p2(s, d, u, Field::zeros(d.omega()), ws), InvalidInput);

    CHECK(boundary_contraction_check(s, d, u, u) == 0.0);
    const Field w = admissible(rng, s, d);
    CHECK(boundary_contraction_check(s, d, u, w) >= -1e-10);
    // A constant difference leaves c^2 (nu(Omega) - sum_boundary m_x(Omega) nu(x)).
    double expected = 0.0;
    for (NodeId x : d.omega()) expected += 0.09 * s.nu(x);
    for (NodeId x : d.boundary())
      for (const auto& t : s.row(x))
        if (d.membership(t.target) == Membership::omega) expected -= 0.09 * t.prob * s.nu(x);
    const double slack = boundary_contraction_check(s, d, shifted(u, 0.3), u);
    CHECK(slack == doctest::Approx(expected).scale(1.0).epsilon(1e-12));
    CHECK(slack >= -1e-12);
    CHECK_THROWS_AS(boundary_contraction_check(s, d, oracle::random_field(rng, d.closure(), 5.0, 9.0), u),
                    InvalidInput);
  }
}

TEST_CASE("L^{m,infinity} norm") {
  const Space s = build_graph_space(std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}});
  const std::vector<NodeId> omega{0};
  const Domain d = m_boundary(s, omega);
  CHECK(lm_infinity_norm(s, d, Field::zeros(d.boundary())) == 0.0);
  CHECK(lm_infinity_norm(s, d, Field({1}, {1.0})) == 2.0);
}
