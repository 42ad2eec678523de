#include <algorithm>
#include <cmath>
#include <set>

#include "stargraph/errors.hpp"
#include "stargraph/limit_spectrum.hpp"

namespace stargraph {

namespace {
constexpr double kPoleTol = 1e-12;
constexpr double kBisectTol = 1e-13;
}  // namespace

SecularEquation SecularEquation::from(const StarGraph& g, const AlphaRegime& r) {
  SecularEquation eq;
  eq.h2 = g.h0_squared();
  eq.ell = g.lengths();
  eq.beta = r.is_one() ? g.node.mass_integral / M_PI : 0.0;
  return eq;
}

std::optional<double> secular_eval(const SecularEquation& eq, double mu) {
  const double s = std::sqrt(mu);
  double g = -eq.beta * s;
  for (int i = 0; i < 3; ++i) {
    const double si = std::sin(s * eq.ell[i]);
    if (std::abs(si) < kPoleTol) return std::nullopt;
    g += eq.h2[i] * std::cos(s * eq.ell[i]) / si;
  }
  return g;
}

double secular_eval_checked(const SecularEquation& eq, double mu) {
  auto g = secular_eval(eq, mu);
  if (!g) throw solver_error("secular_eval: pole proximity, bracket around it");
  return *g;
}

double secular_derivative(const SecularEquation& eq, double mu) {
  const double s = std::sqrt(mu);
  double dg_ds = -eq.beta;
  for (int i = 0; i < 3; ++i) {
    const double si = std::sin(s * eq.ell[i]);
    dg_ds -= eq.h2[i] * eq.ell[i] / (si * si);
  }
  return dg_ds / (2.0 * s);
}

namespace {

// sorted pole locations s = k pi / l_i in (0, s_max]
std::vector<double> pole_locations(const SecularEquation& eq, double s_max) {
  std::vector<double> poles;
  for (int i = 0; i < 3; ++i)
    for (int k = 1; k * M_PI / eq.ell[i] <= s_max + 1e-9; ++k)
      poles.push_back(k * M_PI / eq.ell[i]);
  std::sort(poles.begin(), poles.end());
  return poles;
}

double bisect_root(const SecularEquation& eq, double sa, double sb) {
  auto G = [&](double s) { return secular_eval_checked(eq, s * s); };
  double fa = G(sa);
  while (sb - sa > kBisectTol) {
    const double sm = 0.5 * (sa + sb);
    const double fm = G(sm);
    if (fa * fm <= 0.0)
      sb = sm;
    else {
      sa = sm;
      fa = fm;
    }
  }
  // one Newton polish in mu; cot poles make full Newton unsafe, one step
  // from a converged bracket is not
  double mu = 0.25 * (sa + sb) * (sa + sb);
  const auto g = secular_eval(eq, mu);
  if (g) {
    const double dg = secular_derivative(eq, mu);
    const double step = *g / dg;
    if (std::isfinite(step) && std::abs(step) < 1e-6 * std::max(1.0, mu)) mu -= step;
  }
  return mu;
}

}  // namespace

std::vector<double> secular_roots(const SecularEquation& eq, double s_max) {
  const double step =
      M_PI / (64.0 * std::max({eq.ell[0], eq.ell[1], eq.ell[2]}));
  auto poles = pole_locations(eq, s_max);
  poles.push_back(s_max);

  std::vector<double> roots;
  double lo = 1e-8;  // G -> +inf as s -> 0+
  for (double hi : poles) {
    hi = std::min(hi, s_max);
    if (hi <= lo) {
      lo = hi;
      continue;
    }
    // scan the open interval, staying off the pole endpoints
    const double margin = 1e-9 * std::max(1.0, hi);
    double a = lo + margin;
    const double b = hi - margin;
    if (a < b) {
      double fa = secular_eval(eq, a * a).value_or(0.0);
      double x = a;
      while (x < b) {
        const double y = std::min(x + step, b);
        const auto fy = secular_eval(eq, y * y);
        if (fy) {
          if (fa * *fy < 0.0) roots.push_back(bisect_root(eq, x, y));
          fa = *fy;
          x = y;
        } else {
          x = y + margin;
        }
        if (y >= b) break;
      }
    }
    lo = hi;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<PoleEigenvalue> pole_eigenvalues(const SecularEquation& eq, double s_max) {
  // group candidates k pi / l_i by coincidence; a pole value shared by c >= 2
  // edges yields an eigenvalue of multiplicity c - 1 with zero vertex value
  auto poles = pole_locations(eq, s_max);
  std::vector<PoleEigenvalue> out;
  size_t i = 0;
  while (i < poles.size()) {
    size_t j = i + 1;
    while (j < poles.size() && poles[j] - poles[i] < 1e-10 * std::max(1.0, poles[i])) ++j;
    if (j - i >= 2) {
      const double s = poles[i];
      PoleEigenvalue pe;
      pe.mu = s * s;
      for (int e = 0; e < 3; ++e)
        if (std::abs(std::sin(s * eq.ell[e])) < 1e-8) pe.edges.push_back(e);
      pe.multiplicity = int(pe.edges.size()) - 1;
      if (pe.multiplicity >= 1) out.push_back(pe);
    }
    i = j;
  }
  return out;
}

}  // namespace stargraph
