#include <cmath>

#include <doctest.h>

#include "stargraph/limit_spectrum.hpp"
#include "test_helpers.hpp"

using namespace stargraph;
using testing::incommensurate_graph;
using testing::symmetric_graph;

namespace {

// Kirchhoff residual |sum h_i^2 w'(0) + beta lambda w(0)|
double kirchhoff_residual(const EigenPair& p, const StarGraph& g, double beta) {
  const auto h2 = g.h0_squared();
  double s = beta * p.lambda * p.vertex_value;
  for (int i = 0; i < 3; ++i) s += h2[i] * p.w[i].deriv0;
  return std::abs(s);
}

}  // namespace

TEST_CASE("symmetric star fundamental eigenvalue is (pi/2)^2") {
  const auto g = symmetric_graph();
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 1);
  CHECK(std::abs(pairs[0].lambda - M_PI * M_PI / 4.0) < 1e-12);
  CHECK_FALSE(pairs[0].degenerate);
  CHECK(std::abs(secular_eval_checked(SecularEquation::from(g, AlphaRegime::zero()),
                                      M_PI * M_PI / 4.0)) < 1e-12);
}

TEST_CASE("symmetric star has the degenerate pole-type pair at pi^2") {
  const auto g = symmetric_graph();
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 4);
  CHECK(pairs[1].lambda == doctest::Approx(M_PI * M_PI).epsilon(1e-12));
  CHECK(pairs[2].lambda == doctest::Approx(M_PI * M_PI).epsilon(1e-12));
  CHECK(pairs[1].degenerate);
  CHECK(pairs[2].degenerate);
  CHECK(pairs[1].pole_type);
  CHECK(std::abs(pairs[1].vertex_value) < 1e-12);

  // twin eigenvalues confirmed by the discrete eigensolve
  auto sys = assemble_discrete(g, AlphaRegime::zero(), 400);
  auto sol = solve_discrete_eigen(sys, 3);
  CHECK(std::abs(sol.lambda[1] - sol.lambda[2]) < 1e-4 * sol.lambda[1]);
  CHECK(sol.lambda[1] == doctest::Approx(M_PI * M_PI).epsilon(1e-4));
}

TEST_CASE("secular roots match the discrete eigensolve on an incommensurate star") {
  const auto g = incommensurate_graph();
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 5);
  auto sys = assemble_discrete(g, AlphaRegime::zero(), 4000);
  auto sol = solve_discrete_eigen(sys, 5);
  for (int k = 0; k < 5; ++k)
    CHECK(std::abs(pairs[size_t(k)].lambda - sol.lambda[size_t(k)]) <
          1e-6 * sol.lambda[size_t(k)]);
}

TEST_CASE("mass-modified secular problem matches the vertex-mass eigensolve") {
  auto g = symmetric_graph();  // beta = m/pi = 1
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::one(), 3);
  // root of 3 cot(sqrt(mu)) = sqrt(mu)
  auto f = [](double s) { return 3.0 * std::cos(s) / std::sin(s) - s; };
  double a = 1e-3, b = M_PI - 1e-6;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    (f(a) * f(m) <= 0 ? b : a) = m;
  }
  CHECK(pairs[0].lambda == doctest::Approx(a * a).epsilon(1e-12));

  auto sys = assemble_discrete(g, AlphaRegime::one(), 2000);
  auto sol = solve_discrete_eigen(sys, 3);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(pairs[size_t(k)].lambda - sol.lambda[size_t(k)]) <
          1e-6 * sol.lambda[size_t(k)]);
}

TEST_CASE("per-edge constant radii agree between secular and discrete routes") {
  auto g = incommensurate_graph();
  g.edges[1].radius = ConstantRadius{0.8};
  g.edges[2].radius = ConstantRadius{1.2};
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 3);
  auto sys = assemble_discrete(g, AlphaRegime::zero(), 4000);
  auto sol = solve_discrete_eigen(sys, 3);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(pairs[size_t(k)].lambda - sol.lambda[size_t(k)]) <
          1e-6 * sol.lambda[size_t(k)]);
}

TEST_CASE("eigenpair invariants hold for the first eight pairs") {
  const auto g = incommensurate_graph();
  const auto eq = SecularEquation::from(g, AlphaRegime::zero());
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 8);
  for (const auto& p : pairs) {
    // energy normalization and vertex continuity
    CHECK(energy_inner(p, p, g) == doctest::Approx(1.0).epsilon(1e-10));
    for (int i = 1; i < 3; ++i)
      CHECK(std::abs(p.w[i].value0 - p.w[0].value0) < 1e-10);
    CHECK(p.w[0].derivL > 0.0);
    CHECK(kirchhoff_residual(p, g, 0.0) < 1e-8);
    if (!p.pole_type) CHECK(std::abs(secular_eval_checked(eq, p.lambda)) < 1e-8);
  }
  for (size_t a = 0; a < pairs.size(); ++a)
    for (size_t b = 0; b < a; ++b)
      CHECK(std::abs(energy_inner(pairs[a], pairs[b], g)) < 1e-6);
}

TEST_CASE("regime-one pairs satisfy the mass-modified Kirchhoff condition") {
  const auto g = symmetric_graph();
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::one(), 4);
  for (const auto& p : pairs)
    CHECK(kirchhoff_residual(p, g, g.node.mass_integral / M_PI) < 1e-8);
}

TEST_CASE("eigenvalues are nonincreasing in the vertex mass") {
  auto g = symmetric_graph();
  std::vector<double> prev;
  for (double beta : {0.0, 0.5, 1.0}) {
    auto sys = assemble_discrete_beta(g, beta, 600);
    auto sol = solve_discrete_eigen(sys, 5);
    if (!prev.empty())
      for (int k = 0; k < 5; ++k) CHECK(sol.lambda[size_t(k)] <= prev[size_t(k)] + 1e-12);
    prev = sol.lambda;
  }
}

TEST_CASE("discrete solver converges at second order") {
  const auto g = symmetric_graph();
  const double exact = M_PI * M_PI / 4.0;
  auto sys = assemble_discrete(g, AlphaRegime::zero(), 1000);
  auto sol = solve_discrete_eigen(sys, 1);
  CHECK(std::abs(sol.lambda[0] - exact) < 1e-5);
  // Richardson check at N and 2N
  auto sys2 = assemble_discrete(g, AlphaRegime::zero(), 2000);
  auto sol2 = solve_discrete_eigen(sys2, 1);
  const double r = std::abs(sol.lambda[0] - exact) / std::abs(sol2.lambda[0] - exact);
  CHECK(r == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("sampled radius eigenvalue converges at rate two") {
  auto g = symmetric_graph();
  // smooth bump with flat 10% margins
  std::vector<double> s;
  const int ns = 101;
  for (int j = 0; j < ns; ++j) {
    const double t = double(j) / double(ns - 1);
    double b = 0.0;
    if (t > 0.1 && t < 0.9) {
      const double u = (t - 0.1) / 0.8;
      const double q = u * (1.0 - u);
      b = 0.1 * 16.0 * q * q;
    }
    s.push_back(1.0 + b);
  }
  g.edges[0].radius = SampledRadius{s};
  auto ref = solve_discrete_eigen(assemble_discrete(g, AlphaRegime::zero(), 8000), 1);
  std::vector<double> eps, err;
  for (int N : {250, 500, 1000, 2000}) {
    auto sol = solve_discrete_eigen(assemble_discrete(g, AlphaRegime::zero(), N), 1);
    eps.push_back(1.0 / N);
    err.push_back(std::abs(sol.lambda[0] - ref.lambda[0]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (4.0 * sxy - sx * sy) / (4.0 * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("pole proximity is reported, count must be positive") {
  const auto g = symmetric_graph();
  const auto eq = SecularEquation::from(g, AlphaRegime::zero());
  CHECK_FALSE(secular_eval(eq, M_PI * M_PI).has_value());
  CHECK_THROWS_AS(secular_eval_checked(eq, M_PI * M_PI), solver_error);
  CHECK_THROWS_AS(solve_limit_spectrum(g, AlphaRegime::zero(), 0), config_error);
}

TEST_CASE("degenerate pole pairs are returned energy-orthogonal") {
  const auto g = symmetric_graph();
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 8);
  for (size_t a = 0; a < pairs.size(); ++a) {
    CHECK(energy_inner(pairs[a], pairs[a], g) == doctest::Approx(1.0).epsilon(1e-10));
    for (size_t b = 0; b < a; ++b)
      CHECK(std::abs(energy_inner(pairs[a], pairs[b], g)) < 1e-6);
  }
}

TEST_CASE("grid eigenpairs from variable cross-sections satisfy the invariants") {
  auto g = symmetric_graph();
  std::vector<double> s(41, 1.0);
  for (int j = 8; j <= 32; ++j) {
    const double t = (double(j) - 8.0) / 24.0;
    s[size_t(j)] = 1.0 + 0.1 * 4.0 * t * (1.0 - t);
  }
  g.edges[1].radius = SampledRadius{s};
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 3);
  for (const auto& p : pairs) {
    CHECK(testing::grid_energy_inner(p, p, g) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(p.w[0].value0 == p.w[1].value0);  // shared vertex dof
    CHECK(p.w[0].value0 == p.w[2].value0);
    CHECK(p.w[0].derivL >= 0.0);
    for (int i = 0; i < 3; ++i) CHECK(std::get<EdgeFunction::Grid>(p.w[i].rep).values.back() == 0.0);
  }
}
