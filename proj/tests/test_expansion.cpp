#include <cmath>

#include <doctest.h>

#include "stargraph/expansion.hpp"
#include "test_helpers.hpp"

using namespace stargraph;
using testing::incommensurate_graph;
using testing::symmetric_graph;

namespace {

std::vector<double> exponents(const ExponentLattice& lat) {
  std::vector<double> v;
  for (const auto& e : lat.entries) v.push_back(e.e);
  return v;
}

bool close_to(double a, double b) { return std::abs(a - b) < 1e-12; }

NodeConstantsTable full_table_zero(int orders) {
  NodeConstantsTable t;
  for (int k = 1; k <= orders; ++k) {
    t.delta[{k, 0, 2}] = 0.05 * k;
    t.delta[{k, 0, 3}] = -0.03 * k;
    t.eta[{k, 0}] = 0.4 / k;
    for (int i = 1; i <= 3; ++i) t.tail[{k, 0, i}] = 0.0;
  }
  return t;
}

}  // namespace

TEST_CASE("lattice matches the displayed partial sums") {
  SUBCASE("alpha in (2/3, 1), order 2: six exponents") {
    const double a = 1.0 / std::sqrt(2.0);
    auto lat = build_lattice(AlphaRegime::irrational(a), 2);
    const std::vector<double> want = {0.0, 1.0 - a, 2.0 - 2.0 * a, 1.0, 2.0 - a, 2.0};
    REQUIRE(lat.entries.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(close_to(lat.entries[i].e, want[i]));
  }
  SUBCASE("alpha in (2/3, 3/4), order 3: eleven exponents") {
    const double a = 1.0 / std::sqrt(2.0);
    auto lat = build_lattice(AlphaRegime::irrational(a), 3);
    const std::vector<double> want = {0.0,          3.0 - 4.0 * a, 1.0 - a, 2.0 - 2.0 * a,
                                      3.0 - 3.0 * a, 1.0,           2.0 - a, 3.0 - 2.0 * a,
                                      2.0,          3.0 - a,       3.0};
    REQUIRE(lat.entries.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(close_to(lat.entries[i].e, want[i]));
  }
  SUBCASE("rational collapse") {
    auto lat = build_lattice(AlphaRegime::rational(1, 2), 1);
    const auto v = exponents(lat);
    REQUIRE(v.size() == 3);
    CHECK(close_to(v[0], 0.0));
    CHECK(close_to(v[1], 0.5));
    CHECK(close_to(v[2], 1.0));
  }
  SUBCASE("provenance reproduces the exponent") {
    for (auto& lat : {build_lattice(AlphaRegime::irrational(0.31), 3),
                      build_lattice(AlphaRegime::rational(2, 5), 2)}) {
      const double a = lat.regime.alpha;
      for (const auto& ent : lat.entries)
        CHECK(std::abs(ent.e - (double(ent.k) - double(ent.p) * a)) < 1e-15);
    }
  }
}

TEST_CASE("fractional leading correction and the vanishing rule") {
  auto g = symmetric_graph();  // m = pi
  g.constants.delta[{1, 0, 2}] = 0.02;
  g.constants.delta[{1, 0, 3}] = 0.01;
  g.constants.delta[{2, 0, 2}] = 0.0;
  g.constants.delta[{2, 0, 3}] = 0.0;
  g.constants.delta[{2, 1, 2}] = 0.0;
  g.constants.delta[{2, 1, 3}] = 0.0;
  g.constants.eta[{1, 0}] = 0.1;
  const auto r = AlphaRegime::irrational(0.3 + 1e-5);
  const auto s = expand_fractional(g, r, 1, 2);
  REQUIRE(s.complete());

  const auto base = solve_limit_spectrum(g, AlphaRegime::zero(), 1)[0];
  const double mu_expect = -std::pow(base.lambda * base.vertex_value, 2) *
                           g.node.mass_integral / M_PI;
  const auto* c = s.at_exponent(1.0 - r.alpha);
  REQUIRE(c != nullptr);
  CHECK(c->mu == doctest::Approx(mu_expect).epsilon(1e-12));

  for (const auto& sc : s.coefficients) {
    if (sc.entry.e > 0.0 && sc.entry.e < 1.0 - r.alpha - 1e-12) {
      CHECK(std::abs(sc.mu) < 1e-12);
      CHECK(std::abs(sc.vertex_values[0]) < 1e-12);
    }
    CHECK(sc.diagnostics.solvability_residual < 1e-10);
    CHECK(sc.diagnostics.jump_residual < 1e-10);
    CHECK(sc.diagnostics.flux_residual < 1e-10);
  }
}

TEST_CASE("trivial substitution value for mu at 1 - alpha") {
  // Lambda = 4, W(0) = 0.5, m = pi gives -(4 * 0.5)^2 * pi / pi = -4
  EigenPair p;
  p.lambda = 4.0;
  p.vertex_value = 0.5;
  StarGraph g = symmetric_graph(M_PI);
  CHECK(mu_one_minus_alpha_closed_form(g, p) == doctest::Approx(-4.0));
}

TEST_CASE("pole-type base has vanishing first fractional correction") {
  auto g = symmetric_graph();
  g.edges[0].length = 1.3;  // edges 2 and 3 share the pole at sqrt(mu) = pi
  const auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), 3);
  REQUIRE(pairs[2].pole_type);
  REQUIRE_FALSE(pairs[2].degenerate);
  const auto r = AlphaRegime::irrational(1.0 / M_PI);
  const auto s = expand_fractional(g, r, 3, 1);
  const auto* c = s.at_exponent(1.0 - r.alpha);
  REQUIRE(c != nullptr);
  CHECK(std::abs(c->mu) < 1e-12);
}

TEST_CASE("alpha = 0 driver reproduces the closed two-term coefficient") {
  auto g = symmetric_graph(M_PI, 0.2);
  SUBCASE("zero deltas from config") {
    g.constants.delta[{1, 0, 2}] = 0.0;
    g.constants.delta[{1, 0, 3}] = 0.0;
    const auto s = expand_alpha0(g, 1, 1);
    REQUIRE(s.complete());
    const auto base = solve_limit_spectrum(g, AlphaRegime::zero(), 1)[0];
    const double want = std::pow(base.lambda * base.vertex_value, 2) *
                        (3.0 * 0.2 - g.node.mass_integral / M_PI);
    CHECK(s.at_exponent(1.0)->mu == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("dual path with nonzero deltas") {
    g.constants.delta[{1, 0, 2}] = 0.4;
    g.constants.delta[{1, 0, 3}] = -0.15;
    const auto s = expand_alpha0(g, 1, 1);
    const auto base = solve_limit_spectrum(g, AlphaRegime::zero(), 1)[0];
    const double closed = mu1_closed_form(g, AlphaRegime::zero(), base, 0.4, -0.15);
    CHECK(std::abs(s.at_exponent(1.0)->mu - closed) < 1e-10);
  }
}

TEST_CASE("alpha = 0 recursion to order three keeps the Fredholm residuals tiny") {
  auto g = incommensurate_graph();
  g.constants = full_table_zero(3);
  const auto s = expand_alpha0(g, 1, 3);
  REQUIRE(s.complete());
  REQUIRE(s.coefficients.size() == 4);
  for (const auto& c : s.coefficients) {
    CHECK(c.diagnostics.solvability_residual < 1e-10);
    CHECK(c.diagnostics.orthogonality_residual < 1e-10);
    CHECK(c.diagnostics.jump_residual < 1e-8);
    CHECK(c.diagnostics.flux_residual < 1e-8);
  }
  // missing higher-order constants truncate gracefully
  g.constants = full_table_zero(2);
  const auto t = expand_alpha0(g, 1, 3);
  CHECK_FALSE(t.complete());
  CHECK(t.truncated_at == doctest::Approx(3.0));
  CHECK(t.coefficients.size() == 3);
}

TEST_CASE("rational and perturbed irrational drivers agree on mu_{1-alpha}") {
  auto g = incommensurate_graph();
  g.constants.delta[{1, 0, 2}] = 0.0;
  g.constants.delta[{1, 0, 3}] = 0.0;
  g.constants.eta[{1, 0}] = 0.0;
  const auto sr = expand_fractional(g, AlphaRegime::rational(1, 2), 1, 1);
  const auto si = expand_fractional(g, AlphaRegime::irrational(0.5 + 1e-7), 1, 1);
  const auto* cr = sr.at_exponent(0.5);
  const auto* ci = si.at_exponent(0.5 - 1e-7, 1e-9);
  REQUIRE(cr != nullptr);
  REQUIRE(ci != nullptr);
  CHECK(cr->mu == doctest::Approx(ci->mu).epsilon(1e-12));
}

TEST_CASE("alpha = 1 series") {
  auto g = symmetric_graph(M_PI, 0.2);  // beta = 1
  g.constants.delta[{1, 0, 2}] = 0.0;
  g.constants.delta[{1, 0, 3}] = 0.0;
  g.constants.eta[{1, 0}] = 0.0;
  const auto s = expand_alpha1(g, 1, 1);
  REQUIRE(s.complete());
  const auto base = solve_limit_spectrum(g, AlphaRegime::one(), 1)[0];
  CHECK(s.coefficients[0].mu == doctest::Approx(base.lambda));
  // with zero deltas and zero eta: mu_1 = 3 l0 (Lambda W0)^2
  const double want = 3.0 * 0.2 * std::pow(base.lambda * base.vertex_value, 2);
  CHECK(s.at_exponent(1.0)->mu == doctest::Approx(want).epsilon(1e-11));
  const double closed = mu1_closed_form(g, AlphaRegime::one(), base, 0.0, 0.0, 0.0);
  CHECK(s.at_exponent(1.0)->mu == doctest::Approx(closed).epsilon(1e-11));

  // vertex mass lowers the fundamental eigenvalue
  const auto base0 = solve_limit_spectrum(g, AlphaRegime::zero(), 1)[0];
  CHECK(base.lambda < base0.lambda);
}

TEST_CASE("vanishing mass collapses regime one onto regime zero") {
  auto g = symmetric_graph(1e-12, 0.2);
  g.node.node_volume = 1e-12;  // keep the density-bound invariant meaningful
  g.node.c0 = g.node.c1 = 1.0;
  g.constants = full_table_zero(2);
  // the node mass integrals scale with rho0 and vanish in this limit
  for (auto& [k, v] : g.constants.eta) v = 0.0;
  const auto s1 = expand_alpha1(g, 1, 2);
  const auto s0 = expand_alpha0(g, 1, 2);
  REQUIRE(s1.complete());
  REQUIRE(s0.complete());
  for (size_t i = 0; i < s0.coefficients.size(); ++i)
    CHECK(s1.coefficients[i].mu ==
          doctest::Approx(s0.coefficients[i].mu).epsilon(1e-9));
}

TEST_CASE("series evaluation") {
  auto g = symmetric_graph();
  g.constants.delta[{1, 0, 2}] = 0.0;
  g.constants.delta[{1, 0, 3}] = 0.0;
  const auto s = expand_alpha0(g, 1, 1);
  CHECK(evaluate_series(s, 0.37, 0.0) == doctest::Approx(s.coefficients[0].mu));
  CHECK_THROWS_AS(evaluate_series(s, 1.5, 1.0), solver_error);

  AsymptoticSeries toy;
  toy.lattice = build_lattice(AlphaRegime::rational(1, 2), 1);
  toy.coefficients.resize(3);
  for (int i = 0; i < 3; ++i) toy.coefficients[size_t(i)].entry = toy.lattice.entries[size_t(i)];
  toy.coefficients[0].mu = 2.0;
  toy.coefficients[1].mu = -1.0;
  toy.coefficients[2].mu = 0.0;
  CHECK(evaluate_series(toy, 0.04, 0.5) == doctest::Approx(1.8));
}

TEST_CASE("sampled-radius graphs run the discrete alpha = 0 driver") {
  auto g = symmetric_graph();
  g.constants = full_table_zero(2);
  // constant profile expressed as samples: must agree with the analytic engine
  g.edges[0].radius = SampledRadius{std::vector<double>(33, 1.0)};
  const auto sd = expand_alpha0(g, 1, 2);
  REQUIRE(sd.complete());
  auto gc = symmetric_graph();
  gc.constants = full_table_zero(2);
  const auto sa = expand_alpha0(gc, 1, 2);
  for (size_t i = 0; i < sa.coefficients.size(); ++i)
    CHECK(sd.coefficients[i].mu ==
          doctest::Approx(sa.coefficients[i].mu).epsilon(5e-5));
  CHECK_THROWS_AS(expand_alpha0(g, 1, 3), config_error);
}

TEST_CASE("degenerate bases are refused by the drivers") {
  auto g = symmetric_graph();
  g.constants = full_table_zero(3);
  CHECK_THROWS_AS(expand_alpha0(g, 2, 1), degeneracy_error);
}

TEST_CASE("series serialization carries lattice, coefficients and flags") {
  auto g = symmetric_graph();
  g.constants.delta[{1, 0, 2}] = 0.1;
  g.constants.delta[{1, 0, 3}] = 0.1;
  const auto s = expand_alpha0(g, 1, 1);
  const std::string j = s.to_json();
  CHECK(j.find("\"lattice\"") != std::string::npos);
  CHECK(j.find("\"mu\"") != std::string::npos);
  CHECK(j.find("\"flags\"") != std::string::npos);
}

TEST_CASE("partial sums shrink like the next exponent in the sweep") {
  auto g = symmetric_graph();
  g.constants = full_table_zero(2);
  const auto s = expand_alpha0(g, 1, 2);
  REQUIRE(s.complete());
  // |evaluate(eps, 2) - evaluate(eps, 1)| = eps^2 |mu_2|: slope 2 in eps
  std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4}, diff;
  for (double e : eps)
    diff.push_back(std::abs(evaluate_series(s, e, 2.0) - evaluate_series(s, e, 1.0)));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]), y = std::log(diff[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double slope = (4.0 * sxy - sx * sy) / (4.0 * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(diff[3] <= 2.0 * std::abs(s.at_exponent(2.0)->mu) * 1e-8);
}
