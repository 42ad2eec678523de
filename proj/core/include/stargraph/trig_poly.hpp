#pragma once

#include <vector>

namespace stargraph {

// Functions on one edge [0, ell] of the form
//
//   f(x) = sum_j u^j (s_j sin(w u) + c_j cos(w u)) + sum_j p_j u^j,   u = ell - x,
//
// with a fixed frequency w. This class is closed under the resonant edge
// solves of the corrector recursion (a particular solution of
// -y'' - w^2 y = f raises the trig degree by one), so the whole expansion
// to any order stays in closed form.
class TrigPoly {
 public:
  TrigPoly() = default;
  TrigPoly(double omega, double ell) : omega_(omega), ell_(ell) {}

  static TrigPoly sin_mode(double amplitude, double omega, double ell);  // A sin(w(ell-x))
  static TrigPoly cos_mode(double amplitude, double omega, double ell);
  // polynomial in u = ell - x: coeffs[j] * u^j
  static TrigPoly poly_u(std::vector<double> coeffs, double omega, double ell);

  double omega() const { return omega_; }
  double ell() const { return ell_; }
  bool zero() const;

  TrigPoly& operator+=(const TrigPoly& o);
  TrigPoly& operator*=(double a);
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator*(double a, TrigPoly f) { return f *= a; }

  // d/dx (note u = ell - x, so this is -d/du)
  TrigPoly derivative_x() const;

  double eval_u(double u) const;
  double eval_x(double x) const { return eval_u(ell_ - x); }
  double value_at_vertex() const { return eval_u(ell_); }          // x = 0
  double deriv_at_vertex() const { return derivative_x().eval_u(ell_); }
  double value_at_end() const { return eval_u(0.0); }              // x = ell
  double deriv_at_end() const { return derivative_x().eval_u(0.0); }
  // d^j f / dx^j at x = 0
  double deriv_j_at_vertex(int j) const;

  // exact integral over the edge of f * g (same omega, same ell)
  static double integrate_product(const TrigPoly& f, const TrigPoly& g);
  static double integrate(const TrigPoly& f);

  // particular solution of -y'' - w^2 y = rhs with y(x = ell) = 0
  static TrigPoly solve_resonant(const TrigPoly& rhs);

  std::vector<double> sample_x(int n_points) const;  // uniform in x on [0, ell]

 private:
  double omega_ = 1.0;
  double ell_ = 1.0;
  std::vector<double> s_;  // u^j sin(w u)
  std::vector<double> c_;  // u^j cos(w u)
  std::vector<double> p_;  // u^j

  void trim();
};

}  // namespace stargraph
