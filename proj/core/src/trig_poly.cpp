#include "stargraph/trig_poly.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace stargraph {

namespace {
void grow(std::vector<double>& v, size_t n) {
  if (v.size() < n) v.resize(n, 0.0);
}
double horner(const std::vector<double>& a, double u) {
  double r = 0.0;
  for (size_t j = a.size(); j-- > 0;) r = r * u + a[j];
  return r;
}
}  // namespace

TrigPoly TrigPoly::sin_mode(double amplitude, double omega, double ell) {
  TrigPoly f(omega, ell);
  f.s_ = {amplitude};
  f.trim();
  return f;
}

TrigPoly TrigPoly::cos_mode(double amplitude, double omega, double ell) {
  TrigPoly f(omega, ell);
  f.c_ = {amplitude};
  f.trim();
  return f;
}

TrigPoly TrigPoly::poly_u(std::vector<double> coeffs, double omega, double ell) {
  TrigPoly f(omega, ell);
  f.p_ = std::move(coeffs);
  f.trim();
  return f;
}

bool TrigPoly::zero() const { return s_.empty() && c_.empty() && p_.empty(); }

void TrigPoly::trim() {
  auto drop = [](std::vector<double>& v) {
    while (!v.empty() && v.back() == 0.0) v.pop_back();
  };
  drop(s_);
  drop(c_);
  drop(p_);
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
  if (zero()) {
    *this = o;
    return *this;
  }
  if (o.zero()) return *this;
  grow(s_, o.s_.size());
  grow(c_, o.c_.size());
  grow(p_, o.p_.size());
  for (size_t j = 0; j < o.s_.size(); ++j) s_[j] += o.s_[j];
  for (size_t j = 0; j < o.c_.size(); ++j) c_[j] += o.c_[j];
  for (size_t j = 0; j < o.p_.size(); ++j) p_[j] += o.p_[j];
  trim();
  return *this;
}

TrigPoly& TrigPoly::operator*=(double a) {
  for (auto& v : s_) v *= a;
  for (auto& v : c_) v *= a;
  for (auto& v : p_) v *= a;
  if (a == 0.0) {
    s_.clear();
    c_.clear();
    p_.clear();
  }
  return *this;
}

TrigPoly TrigPoly::derivative_x() const {
  // d/du first, then negate (u = ell - x)
  TrigPoly d(omega_, ell_);
  const size_t ns = s_.size(), nc = c_.size(), np = p_.size();
  grow(d.s_, std::max(ns, nc));
  grow(d.c_, std::max(ns, nc));
  if (np > 1) grow(d.p_, np - 1);
  for (size_t j = 0; j < ns; ++j) {
    if (j >= 1) d.s_[j - 1] += double(j) * s_[j];
    d.c_[j] += omega_ * s_[j];
  }
  for (size_t j = 0; j < nc; ++j) {
    if (j >= 1) d.c_[j - 1] += double(j) * c_[j];
    d.s_[j] -= omega_ * c_[j];
  }
  for (size_t j = 1; j < np; ++j) d.p_[j - 1] += double(j) * p_[j];
  d *= -1.0;
  d.trim();
  return d;
}

double TrigPoly::eval_u(double u) const {
  double r = horner(p_, u);
  if (!s_.empty()) r += horner(s_, u) * std::sin(omega_ * u);
  if (!c_.empty()) r += horner(c_, u) * std::cos(omega_ * u);
  return r;
}

double TrigPoly::deriv_j_at_vertex(int j) const {
  TrigPoly f = *this;
  for (int m = 0; m < j; ++m) f = f.derivative_x();
  return f.eval_u(ell_);
}

namespace {

// primitives: int_0^L u^j du, int_0^L u^j sin(w u) du, int_0^L u^j cos(w u) du
struct Primitives {
  std::vector<double> ipoly, isin, icos;
  Primitives(size_t jmax, double w, double L) {
    ipoly.resize(jmax + 1);
    isin.resize(jmax + 1);
    icos.resize(jmax + 1);
    double Lp = L;
    for (size_t j = 0; j <= jmax; ++j) {
      ipoly[j] = Lp / double(j + 1);
      Lp *= L;
    }
    const double sL = std::sin(w * L), cL = std::cos(w * L);
    isin[0] = (1.0 - cL) / w;
    icos[0] = sL / w;
    double Lj = L;  // L^j for j >= 1
    for (size_t j = 1; j <= jmax; ++j) {
      isin[j] = -Lj * cL / w + double(j) / w * icos[j - 1];
      icos[j] = Lj * sL / w - double(j) / w * isin[j - 1];
      Lj *= L;
    }
  }
};

enum Kind { kSin, kCos, kOne };

}  // namespace

double TrigPoly::integrate_product(const TrigPoly& f, const TrigPoly& g) {
  if (f.zero() || g.zero()) return 0.0;
  const double w = f.omega_, L = f.ell_;
  if (g.omega_ != w || g.ell_ != L)
    throw std::logic_error("TrigPoly::integrate_product: mismatched edges");
  const size_t jmax = std::max({f.s_.size(), f.c_.size(), f.p_.size()}) +
                      std::max({g.s_.size(), g.c_.size(), g.p_.size()});
  Primitives P1(jmax, w, L), P2(jmax, 2.0 * w, L);

  auto term = [&](Kind ka, size_t ja, double va, Kind kb, size_t jb, double vb) -> double {
    const double a = va * vb;
    if (a == 0.0) return 0.0;
    const size_t j = ja + jb;
    if (ka == kOne && kb == kOne) return a * P1.ipoly[j];
    if (ka == kOne || kb == kOne) {
      const Kind k = (ka == kOne) ? kb : ka;
      return a * (k == kSin ? P1.isin[j] : P1.icos[j]);
    }
    if (ka == kSin && kb == kSin) return a * 0.5 * (P1.ipoly[j] - P2.icos[j]);
    if (ka == kCos && kb == kCos) return a * 0.5 * (P1.ipoly[j] + P2.icos[j]);
    return a * 0.5 * P2.isin[j];  // sin * cos
  };

  struct Part {
    Kind kind;
    const std::vector<double>* v;
  };
  const Part fa[3] = {{kSin, &f.s_}, {kCos, &f.c_}, {kOne, &f.p_}};
  const Part fb[3] = {{kSin, &g.s_}, {kCos, &g.c_}, {kOne, &g.p_}};
  double total = 0.0;
  for (const auto& A : fa)
    for (size_t ja = 0; ja < A.v->size(); ++ja) {
      if ((*A.v)[ja] == 0.0) continue;
      for (const auto& B : fb)
        for (size_t jb = 0; jb < B.v->size(); ++jb)
          total += term(A.kind, ja, (*A.v)[ja], B.kind, jb, (*B.v)[jb]);
    }
  return total;
}

double TrigPoly::integrate(const TrigPoly& f) {
  if (f.zero()) return 0.0;
  const size_t jmax = std::max({f.s_.size(), f.c_.size(), f.p_.size()});
  Primitives P(jmax, f.omega_, f.ell_);
  double total = 0.0;
  for (size_t j = 0; j < f.s_.size(); ++j) total += f.s_[j] * P.isin[j];
  for (size_t j = 0; j < f.c_.size(); ++j) total += f.c_[j] * P.icos[j];
  for (size_t j = 0; j < f.p_.size(); ++j) total += f.p_[j] * P.ipoly[j];
  return total;
}

TrigPoly TrigPoly::solve_resonant(const TrigPoly& rhs) {
  const double w = rhs.omega_, L = rhs.ell_;
  TrigPoly y(w, L);
  if (rhs.zero()) return y;

  // trig part: back-substitution from the top degree; the degree-0 kernel
  // coefficients stay zero, uniqueness is restored by the caller
  const size_t J = std::max(rhs.s_.size(), rhs.c_.size());
  if (J > 0) {
    grow(y.s_, J + 1);
    grow(y.c_, J + 1);
    auto gs = [&](size_t d) { return d < rhs.s_.size() ? rhs.s_[d] : 0.0; };
    auto gc = [&](size_t d) { return d < rhs.c_.size() ? rhs.c_[d] : 0.0; };
    for (size_t d = J; d-- > 0;) {
      const double S2 = (d + 2 <= J) ? y.s_[d + 2] : 0.0;
      const double C2 = (d + 2 <= J) ? y.c_[d + 2] : 0.0;
      y.c_[d + 1] = (gs(d) + double((d + 2) * (d + 1)) * S2) / (2.0 * double(d + 1) * w);
      y.s_[d + 1] = -(gc(d) + double((d + 2) * (d + 1)) * C2) / (2.0 * double(d + 1) * w);
    }
  }

  // polynomial part: y_p = -(q + y_p'') / w^2, reached in deg/2 + 1 sweeps
  if (!rhs.p_.empty()) {
    const size_t D = rhs.p_.size();
    std::vector<double> q = rhs.p_, yp(D, 0.0);
    for (size_t sweep = 0; sweep <= D / 2 + 1; ++sweep) {
      std::vector<double> ypp(D, 0.0);  // second u-derivative of yp
      for (size_t j = 2; j < D; ++j) ypp[j - 2] = double(j) * double(j - 1) * yp[j];
      for (size_t j = 0; j < D; ++j) yp[j] = -(q[j] + ypp[j]) / (w * w);
    }
    y.p_ = yp;
  }
  y.trim();

  // enforce y(x = ell) = 0 via the cos kernel mode
  const double v = y.eval_u(0.0);
  if (v != 0.0) {
    grow(y.c_, 1);
    y.c_[0] -= v;
  }
  y.trim();
  return y;
}

std::vector<double> TrigPoly::sample_x(int n_points) const {
  std::vector<double> out(static_cast<size_t>(n_points), 0.0);
  for (int i = 0; i < n_points; ++i) {
    const double x = ell_ * double(i) / double(n_points - 1);
    out[size_t(i)] = eval_u(ell_ - x);
  }
  return out;
}

}  // namespace stargraph
