#include "stargraph/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"

namespace stargraph {

namespace {

// Exact exponent arithmetic. Keys are (k, p) for irrational alpha and
// (q, 0) with q = k*unit - p*anum otherwise; negative components simply never
// match a computed entry.
struct ExpoArith {
  RegimeKind kind;
  double alpha;
  long long unit, anum;

  using Key = std::pair<long long, long long>;

  explicit ExpoArith(const AlphaRegime& r) : kind(r.kind), alpha(r.alpha) {
    switch (r.kind) {
      case RegimeKind::Zero: unit = 1; anum = 0; break;
      case RegimeKind::One: unit = 1; anum = 1; break;
      case RegimeKind::Rational: unit = r.n0; anum = r.m0; break;
      case RegimeKind::Irrational: unit = 0; anum = 0; break;
    }
  }

  Key key(int k, int p) const {
    if (kind == RegimeKind::Irrational) return {k, p};
    return {(long long)k * unit - (long long)p * anum, 0};
  }
  Key sub(Key a, Key b) const { return {a.first - b.first, a.second - b.second}; }
  Key sub_int(Key e, int j) const {
    if (kind == RegimeKind::Irrational) return {e.first - j, e.second};
    return {e.first - (long long)j * unit, e.second};
  }
  Key mass_target(Key e) const {  // e - 1 + alpha
    if (kind == RegimeKind::Irrational) return {e.first - 1, e.second - 1};
    return {e.first - unit + anum, e.second};
  }
  double value(Key e) const {
    if (kind == RegimeKind::Irrational) return double(e.first) - double(e.second) * alpha;
    return double(e.first) / double(unit);
  }
};

}  // namespace

ExponentLattice build_lattice(const AlphaRegime& r, int M) {
  if (M < 0) throw config_error("lattice order must be >= 0");
  validate(r);
  ExponentLattice lat;
  lat.regime = r;
  lat.order = M;
  switch (r.kind) {
    case RegimeKind::Zero:
    case RegimeKind::One:
      for (int k = 0; k <= M; ++k) lat.entries.push_back({double(k), k, 0});
      break;
    case RegimeKind::Rational:
      for (int q = 0; q <= M * r.n0; ++q) {
        // smallest k with k*n0 - p*m0 = q and integer p >= 0
        for (int k = (q + r.n0 - 1) / r.n0;; ++k) {
          const int num = k * r.n0 - q;
          if (num >= 0 && num % r.m0 == 0) {
            lat.entries.push_back({double(q) / double(r.n0), k, num / r.m0});
            break;
          }
        }
      }
      break;
    case RegimeKind::Irrational:
      for (int k = 0; k <= M; ++k)
        for (int p = 0; k - p * r.alpha >= -1e-15; ++p) {
          const double e = double(k) - double(p) * r.alpha;
          if (e <= double(M) + 1e-15) lat.entries.push_back({std::max(e, 0.0), k, p});
        }
      std::sort(lat.entries.begin(), lat.entries.end(),
                [](const LatticeEntry& a, const LatticeEntry& b) { return a.e < b.e; });
      break;
  }
  return lat;
}

const SeriesCoefficient* AsymptoticSeries::at_exponent(double e, double tol) const {
  for (const auto& c : coefficients)
    if (std::abs(c.entry.e - e) < tol) return &c;
  return nullptr;
}

double evaluate_series(const AsymptoticSeries& s, double eps, double up_to) {
  if (!(eps > 0.0 && eps < 1.0)) throw solver_error("evaluate_series: eps must be in (0,1)");
  double sum = 0.0;
  for (const auto& c : s.coefficients) {
    if (c.entry.e > up_to + 1e-12) break;
    sum += std::pow(eps, c.entry.e) * c.mu;
  }
  return sum;
}

std::string AsymptoticSeries::to_json() const {
  nlohmann::ordered_json j;
  j["lattice"] = nlohmann::ordered_json::array();
  for (const auto& ent : lattice.entries)
    j["lattice"].push_back({{"e", ent.e}, {"k", ent.k}, {"p", ent.p}});
  nlohmann::ordered_json mu;
  for (const auto& c : coefficients) mu[fmt17(c.entry.e)] = c.mu;
  j["mu"] = mu;
  j["n"] = base_index;
  nlohmann::ordered_json flags;
  flags["truncated"] = truncated;
  if (truncated) {
    flags["truncated_at"] = truncated_at;
    flags["reason"] = truncation_reason;
  }
  flags["exponential_tail_neglected"] = exponential_tail_neglected;
  j["flags"] = flags;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Recursion engine (analytic path, constant cross-sections)

namespace {

struct EngineCoeff {
  LatticeEntry entry;
  double mu = 0.0;
  std::array<TrigPoly, 3> w;
  bool triple_nonzero = false;
  bool inner_active = false;  // inner coefficient N_e not identically constant
  double delta2 = 0.0, delta3 = 0.0;
};

class RecursionEngine {
 public:
  RecursionEngine(const StarGraph& g, const AlphaRegime& r, const EigenPair& base,
                  const NodeConstantsProvider& provider)
      : g_(g), r_(r), base_(base), provider_(provider), arith_(r) {
    h2_ = g.h0_squared();
    ell_ = g.lengths();
    omega_ = std::sqrt(base.lambda);
    beta_ = r.is_one() ? g.node.mass_integral / M_PI : 0.0;
    mass_ = g.node.mass_integral;
  }

  AsymptoticSeries run(int M) {
    AsymptoticSeries out;
    out.lattice = build_lattice(r_, M);
    out.base_index = base_.index;

    // seed the base entry
    EngineCoeff c0;
    c0.entry = out.lattice.entries.front();
    c0.mu = base_.lambda;
    for (int i = 0; i < 3; ++i) {
      const auto* a = std::get_if<EdgeFunction::Analytic>(&base_.w[i].rep);
      if (!a) throw solver_error("analytic expansion needs an analytic base eigenpair");
      c0.w[i] = TrigPoly::sin_mode(a->amplitude, omega_, ell_[i]);
    }
    c0.triple_nonzero = true;
    store(c0, out);

    for (size_t t = 1; t < out.lattice.entries.size(); ++t) {
      const LatticeEntry ent = out.lattice.entries[t];
      try {
        EngineCoeff c = build_entry(ent);
        store(c, out);
      } catch (const missing_constant_error& e) {
        out.truncated = true;
        out.truncated_at = ent.e;
        out.truncation_reason = e.what();
        break;
      }
    }
    out.exponential_tail_neglected = tail_neglected_;
    return out;
  }

 private:
  using Key = ExpoArith::Key;

  void store(const EngineCoeff& c, AsymptoticSeries& out) {
    const Key key = arith_.key(c.entry.k, c.entry.p);
    slots_[key] = coeffs_.size();
    coeffs_.push_back(c);

    SeriesCoefficient sc;
    sc.entry = c.entry;
    sc.mu = c.mu;
    sc.delta2 = c.delta2;
    sc.delta3 = c.delta3;
    sc.dstar = last_dstar_;
    sc.diagnostics = last_diag_;
    sc.data_nonzero = c.triple_nonzero;
    for (int i = 0; i < 3; ++i) {
      sc.w[i] = EdgeFunction::grid_with_boundary(
          c.w[i].zero() ? std::vector<double>(9, 0.0) : c.w[i].sample_x(1025), ell_[i],
          c.w[i].value_at_vertex(), c.w[i].deriv_at_vertex(), c.w[i].deriv_at_end());
      sc.vertex_values[size_t(i)] = c.w[i].value_at_vertex();
    }
    out.coefficients.push_back(sc);
  }

  const EngineCoeff* lookup(Key key) const {
    auto it = slots_.find(key);
    return it == slots_.end() ? nullptr : &coeffs_[it->second];
  }

  // sum over ordered pairs e1 + e2 = target of f(c1, c2); entries not yet
  // computed (including the current one) never match
  template <class F>
  void for_pairs(Key target, F&& f) const {
    for (const auto& [k1, idx1] : slots_) {
      const auto it2 = slots_.find(arith_.sub(target, k1));
      if (it2 == slots_.end()) continue;
      f(coeffs_[idx1], coeffs_[it2->second]);
    }
  }

  EngineCoeff build_entry(const LatticeEntry& ent) {
    const Key key = arith_.key(ent.k, ent.p);
    EngineCoeff c;
    c.entry = ent;

    // weighted ODE forcing: sum mu_{e1} h^2 w_{e2}
    std::array<TrigPoly, 3> rhs;
    for (int i = 0; i < 3; ++i) rhs[i] = TrigPoly(omega_, ell_[i]);
    bool rhs_nonzero = false;
    for_pairs(key, [&](const EngineCoeff& a, const EngineCoeff& b) {
      if (a.mu == 0.0 || !b.triple_nonzero) return;
      for (int i = 0; i < 3; ++i) rhs[i] += (a.mu * h2_[i]) * b.w[i];
      rhs_nonzero = true;
    });

    // structural activity of the inner problem at this order
    c.inner_active = inner_activity(key);

    // vertex jumps
    double delta2 = 0.0, delta3 = 0.0;
    if (c.inner_active) {
      auto d2 = provider_.delta(ent.k, ent.p, 2), d3 = provider_.delta(ent.k, ent.p, 3);
      if (!d2 || !d3)
        throw missing_constant_error(
            "delta constants unavailable at exponent " + fmt17(ent.e), ent.e);
      delta2 = *d2;
      delta3 = *d3;
    }
    c.delta2 = delta2;
    c.delta3 = delta3;

    const double dstar = flux_datum(ent, key, c.inner_active);
    last_dstar_ = dstar;

    CorrectorProblem p;
    p.base = base_;
    p.graph = g_;
    p.beta = beta_;
    p.rhs = rhs;
    p.delta2 = delta2;
    p.delta3 = delta3;
    p.flux_datum = dstar;
    CorrectorSolution sol = solve_corrector(p);
    last_diag_ = sol.diagnostics;

    c.mu = sol.mu;
    c.w = sol.w_analytic;
    c.triple_nonzero =
        rhs_nonzero || delta2 != 0.0 || delta3 != 0.0 || dstar != 0.0 || sol.mu != 0.0;
    return c;
  }

  // N_e is nontrivial when its growth data Psi_e or its forcing is nonzero.
  bool inner_activity(Key key) const {
    for (int j = 1;; ++j) {
      const Key kj = arith_.sub_int(key, j);
      if (arith_.value(kj) < -1e-12) break;
      const auto* cj = lookup(kj);
      if (cj && cj->triple_nonzero) return true;
    }
    bool active = false;
    for_pairs(arith_.sub_int(key, 2), [&](const EngineCoeff& a, const EngineCoeff& b) {
      if (a.mu != 0.0 && b.inner_active) active = true;
    });
    if (active) return true;
    for_pairs(arith_.mass_target(arith_.sub_int(key, 1)),
              [&](const EngineCoeff& a, const EngineCoeff& b) {
                if (a.mu != 0.0 &&
                    (b.inner_active || b.w[0].value_at_vertex() != 0.0))
                  active = true;
              });
    return active;
  }

  double flux_datum(const LatticeEntry& ent, Key key, bool inner_active_here) {
    double d = 0.0;
    // Taylor sums: sum_i h_i^2 sum_j (l0^j / j!) sum_{e1+e2=e-j} mu_{e1} w_{e2}^{(j-1)}(0)
    double l0j = 1.0;
    for (int j = 1;; ++j) {
      l0j *= g_.node.ell0 / double(j);
      const Key target = arith_.sub_int(key, j);
      if (arith_.value(target) < -1e-12) break;
      for_pairs(target, [&](const EngineCoeff& a, const EngineCoeff& b) {
        if (a.mu == 0.0 || !b.triple_nonzero) return;
        for (int i = 0; i < 3; ++i)
          d += h2_[i] * l0j * a.mu * b.w[i].deriv_j_at_vertex(j - 1);
      });
    }
    // outlet tail integrals at shift e - 1
    for_pairs(arith_.sub_int(key, 1), [&](const EngineCoeff& a, const EngineCoeff& b) {
      if (a.mu == 0.0 || !b.inner_active) return;
      for (int i = 1; i <= 3; ++i) {
        auto t = provider_.tail(b.entry.k, b.entry.p, i);
        if (t)
          d -= a.mu * *t / M_PI;
        else
          tail_neglected_ = true;
      }
    });
    // node mass integrals at shift e - 1 + alpha
    for_pairs(arith_.mass_target(key), [&](const EngineCoeff& a, const EngineCoeff& b) {
      if (a.mu == 0.0) return;
      double nu = mass_ * b.w[0].value_at_vertex();
      if (b.inner_active) {
        auto eta = provider_.eta(b.entry.k, b.entry.p);
        if (!eta)
          throw missing_constant_error(
              "node mass integral unavailable at exponent " + fmt17(b.entry.e), ent.e);
        nu += *eta;
      }
      d -= a.mu * nu / M_PI;
    });
    // regime One: the known gauge-fixed part of the self term mu0 * nu_e
    if (r_.is_one() && inner_active_here) {
      auto eta = provider_.eta(ent.k, ent.p);
      if (!eta)
        throw missing_constant_error(
            "node mass integral unavailable at exponent " + fmt17(ent.e), ent.e);
      d -= base_.lambda * *eta / M_PI;
    }
    return d;
  }

  const StarGraph& g_;
  const AlphaRegime& r_;
  const EigenPair& base_;
  const NodeConstantsProvider& provider_;
  ExpoArith arith_;
  std::array<double, 3> h2_, ell_;
  double omega_ = 0.0, beta_ = 0.0, mass_ = 0.0;
  std::map<Key, size_t> slots_;
  std::vector<EngineCoeff> coeffs_;
  double last_dstar_ = 0.0;
  CorrectorDiagnostics last_diag_;
  bool tail_neglected_ = false;
};

// Discrete driver for variable cross-sections, alpha = 0, M <= 2.
AsymptoticSeries expand_alpha0_discrete(const StarGraph& g, int n, int M,
                                        const NodeConstantsProvider& provider) {
  const int N = 2000;
  AsymptoticSeries out;
  out.lattice = build_lattice(AlphaRegime::zero(), M);
  out.base_index = n;

  auto sys = assemble_discrete_beta(g, 0.0, N);
  auto eig = solve_discrete_eigen(sys, n + 1);
  const double lambda = eig.lambda[size_t(n - 1)];
  if (n >= 2 && (eig.lambda[size_t(n - 1)] - eig.lambda[size_t(n - 2)]) < 1e-6 * lambda)
    throw degeneracy_error("base eigenvalue flagged degenerate");
  if ((eig.lambda[size_t(n)] - lambda) < 1e-6 * lambda)
    throw degeneracy_error("base eigenvalue flagged degenerate");
  Eigen::VectorXd W = eig.vectors.col(n - 1) / std::sqrt(lambda);
  std::array<std::vector<double>, 3> Wv;
  for (int i = 0; i < 3; ++i) {
    Wv[size_t(i)] = sys.edge_values(W, i);
    if (i == 0) {
      auto f = EdgeFunction::grid(Wv[0], g.edges[0].length);
      if (f.derivL < 0.0) {
        W = -W;
        for (int ii = 0; ii < 3; ++ii) Wv[size_t(ii)] = sys.edge_values(W, ii);
      }
    }
  }

  SeriesCoefficient c0;
  c0.entry = out.lattice.entries[0];
  c0.mu = lambda;
  for (int i = 0; i < 3; ++i) {
    c0.w[i] = EdgeFunction::grid(sys.edge_values(W, i), g.edges[i].length);
    c0.vertex_values[size_t(i)] = W[0];
  }
  c0.data_nonzero = true;
  out.coefficients.push_back(c0);
  const double W0 = W[0];
  const auto h2 = g.h0_squared();

  std::array<std::vector<double>, 3> prev = Wv;  // w at the previous order
  double mu_prev = lambda;
  for (int k = 1; k <= M; ++k) {
    auto d2 = provider.delta(k, 0, 2), d3 = provider.delta(k, 0, 3);
    if (!d2 || !d3) {
      out.truncated = true;
      out.truncated_at = double(k);
      out.truncation_reason = "delta constants unavailable at exponent " + fmt17(double(k));
      break;
    }
    // flux datum (orders 1 and 2 of the integer recursion)
    double dstar = 0.0;
    if (k == 1) {
      dstar = lambda * W0 *
              (g.node.ell0 * (h2[0] + h2[1] + h2[2]) - g.node.mass_integral / M_PI);
    } else {
      auto eta1 = provider.eta(1, 0);
      if (!eta1) {
        out.truncated = true;
        out.truncated_at = double(k);
        out.truncation_reason = "node mass integral unavailable at exponent 1";
        break;
      }
      for (int i = 0; i < 3; ++i) {
        auto f1 = EdgeFunction::grid(prev[size_t(i)], g.edges[i].length);
        auto f0 = EdgeFunction::grid(Wv[size_t(i)], g.edges[i].length);
        dstar += h2[i] * (g.node.ell0 * (lambda * f1.value0 + mu_prev * W0) +
                          0.5 * g.node.ell0 * g.node.ell0 * lambda * f0.deriv0);
      }
      const double nu1 = g.node.mass_integral * prev[0][0] + *eta1;
      dstar -= (lambda * nu1 + mu_prev * g.node.mass_integral * W0) / M_PI;
      for (int i = 1; i <= 3; ++i) {
        if (auto t = provider.tail(1, 0, i))
          dstar -= lambda * *t / M_PI;
        else
          out.exponential_tail_neglected = true;
      }
    }
    // weighted rhs: mu_prev-terms appear only at k = 2
    std::array<std::vector<double>, 3> rhs;
    for (int i = 0; i < 3; ++i) {
      rhs[size_t(i)].assign(size_t(N + 1), 0.0);
      if (k == 2) {
        for (int jn = 0; jn <= N; ++jn) {
          const double x = g.edges[i].length * double(jn) / double(N);
          const double h = g.edges[i].h_at(x);
          rhs[size_t(i)][size_t(jn)] = mu_prev * h * h * prev[size_t(i)][size_t(jn)];
        }
      }
    }
    auto sol = solve_corrector_discrete(g, 0.0, n, rhs, *d2, *d3, dstar, N);
    SeriesCoefficient sc;
    sc.entry = out.lattice.entries[size_t(k)];
    sc.mu = sol.mu;
    sc.delta2 = *d2;
    sc.delta3 = *d3;
    sc.dstar = dstar;
    sc.data_nonzero = true;
    for (int i = 0; i < 3; ++i) {
      sc.w[i] = EdgeFunction::grid(sol.w[size_t(i)], g.edges[i].length);
      sc.vertex_values[size_t(i)] = sol.w[size_t(i)][0];
    }
    out.coefficients.push_back(sc);
    prev = sol.w;
    mu_prev = sol.mu;
  }
  return out;
}

AsymptoticSeries run_driver(const StarGraph& g, const AlphaRegime& r, int n, int M,
                            const NodeConstantsProvider* provider) {
  validate(g);
  validate(r);
  if (n < 1) throw config_error("eigenpair index must be >= 1");
  if (M < 0) throw config_error("expansion order must be >= 0");
  TableConstants table(g.constants);
  const NodeConstantsProvider& prov = provider ? *provider : table;

  if (!g.constant_radius()) {
    if (!(r.kind == RegimeKind::Zero))
      throw config_error("variable cross-sections support the alpha = 0 driver only");
    if (M > 2)
      throw config_error("variable cross-sections are limited to expansion order M <= 2");
    return expand_alpha0_discrete(g, n, M, prov);
  }

  auto pairs = solve_limit_spectrum(g, r, n + 1);
  const EigenPair& base = pairs[size_t(n - 1)];
  if (base.degenerate)
    throw degeneracy_error("expansion refused: base eigenvalue flagged degenerate");
  RecursionEngine engine(g, r, base, prov);
  return engine.run(M);
}

}  // namespace

AsymptoticSeries expand_alpha0(const StarGraph& g, int n, int M,
                               const NodeConstantsProvider* provider) {
  return run_driver(g, AlphaRegime::zero(), n, M, provider);
}

AsymptoticSeries expand_fractional(const StarGraph& g, const AlphaRegime& r, int n, int M,
                                   const NodeConstantsProvider* provider) {
  if (!r.fractional())
    throw config_error("expand_fractional requires an irrational or rational regime");
  return run_driver(g, r, n, M, provider);
}

AsymptoticSeries expand_alpha1(const StarGraph& g, int n, int M,
                               const NodeConstantsProvider* provider) {
  return run_driver(g, AlphaRegime::one(), n, M, provider);
}

AsymptoticSeries expand(const StarGraph& g, const AlphaRegime& r, int n, int M,
                        const NodeConstantsProvider* provider) {
  return run_driver(g, r, n, M, provider);
}

}  // namespace stargraph
