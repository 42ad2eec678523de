#include <cmath>

#include <doctest.h>

#include "stargraph/trig_poly.hpp"

using stargraph::TrigPoly;

namespace {

// L f = -f'' - w^2 f evaluated pointwise
double ode_residual(const TrigPoly& y, const TrigPoly& rhs, double w, double x) {
  const TrigPoly ypp = y.derivative_x().derivative_x();
  return -ypp.eval_x(x) - w * w * y.eval_x(x) - rhs.eval_x(x);
}

double quad_product(const TrigPoly& f, const TrigPoly& g, double L) {
  const int n = 20000;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x0 = L * j / n, x1 = L * (j + 1) / n, xm = 0.5 * (x0 + x1);
    acc += (x1 - x0) / 6.0 *
           (f.eval_x(x0) * g.eval_x(x0) + 4.0 * f.eval_x(xm) * g.eval_x(xm) +
            f.eval_x(x1) * g.eval_x(x1));
  }
  return acc;
}

}  // namespace

TEST_CASE("resonant edge solve reproduces the forced ODE") {
  const double w = M_PI / 2.0, L = 1.0;
  TrigPoly rhs = TrigPoly::sin_mode(2.0, w, L);
  rhs += TrigPoly::cos_mode(-0.7, w, L);
  rhs += TrigPoly::poly_u({0.3, -1.1, 0.25}, w, L);
  const TrigPoly y = TrigPoly::solve_resonant(rhs);
  CHECK(std::abs(y.value_at_end()) < 1e-14);
  for (double x : {0.0, 0.21, 0.5, 0.77, 1.0})
    CHECK(std::abs(ode_residual(y, rhs, w, x)) < 1e-11);
}

TEST_CASE("resonant solve of the eigenmode matches the closed form") {
  // -y'' - w^2 y = A sin(w u) has particular solution (A / 2w) u cos(w u)
  const double w = 1.3, L = 1.7, A = 0.9;
  const TrigPoly y = TrigPoly::solve_resonant(TrigPoly::sin_mode(A, w, L));
  for (double u : {0.1, 0.8, 1.5}) {
    CHECK(y.eval_u(u) == doctest::Approx(A / (2.0 * w) * u * std::cos(w * u)).epsilon(1e-13));
  }
}

TEST_CASE("exact product integrals agree with quadrature") {
  const double w = 2.2, L = 1.3;
  TrigPoly f = TrigPoly::sin_mode(1.1, w, L);
  f += TrigPoly::poly_u({0.5, 0.0, -0.2}, w, L);
  TrigPoly g = TrigPoly::cos_mode(-0.4, w, L);
  g += TrigPoly::sin_mode(0.3, w, L);
  CHECK(TrigPoly::integrate_product(f, g) ==
        doctest::Approx(quad_product(f, g, L)).epsilon(1e-10));
  CHECK(TrigPoly::integrate(f) ==
        doctest::Approx(quad_product(f, TrigPoly::poly_u({1.0}, w, L), L)).epsilon(1e-10));
}

TEST_CASE("derivatives and vertex data") {
  const double w = M_PI / 2.0, L = 1.0;
  const TrigPoly f = TrigPoly::sin_mode(1.0, w, L);  // sin(w (L - x))
  CHECK(f.value_at_vertex() == doctest::Approx(std::sin(w * L)));
  CHECK(f.deriv_at_vertex() == doctest::Approx(-w * std::cos(w * L)));
  CHECK(f.deriv_at_end() == doctest::Approx(-w));
  CHECK(f.deriv_j_at_vertex(2) == doctest::Approx(-w * w * std::sin(w * L)));
  const TrigPoly u2 = TrigPoly::poly_u({0.0, 0.0, 1.0}, w, L);  // (L-x)^2
  CHECK(u2.deriv_j_at_vertex(1) == doctest::Approx(-2.0 * L));
  CHECK(u2.deriv_j_at_vertex(2) == doctest::Approx(2.0));
}
