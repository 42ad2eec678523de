#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"
#include "stargraph/limit_spectrum.hpp"

namespace stargraph {

namespace {

constexpr double kDegenerateGap = 1e-6;

double energy_of_amplitudes(const SecularEquation& eq, const std::array<double, 3>& A,
                            double s) {
  // <W,W>_0 = sum h_i^2 A_i^2 s^2 (l_i/2 + sin(2 s l_i)/(4 s))
  double e = 0.0;
  for (int i = 0; i < 3; ++i)
    e += eq.h2[i] * A[i] * A[i] * s * s *
         (0.5 * eq.ell[i] + std::sin(2.0 * s * eq.ell[i]) / (4.0 * s));
  return e;
}

EigenPair make_analytic_pair(const SecularEquation& eq, const AlphaRegime& r,
                             std::array<double, 3> A, double s, bool pole) {
  const double scale = 1.0 / std::sqrt(energy_of_amplitudes(eq, A, s));
  for (auto& a : A) a *= scale;
  // sign fix: dW/dx at the far end of the first edge with a nonzero component
  for (int i = 0; i < 3; ++i) {
    if (A[i] == 0.0) continue;
    if (-A[i] * s < 0.0)
      for (auto& a : A) a = -a;
    break;
  }
  EigenPair p;
  p.lambda = s * s;
  p.regime = r;
  p.pole_type = pole;
  for (int i = 0; i < 3; ++i) p.w[i] = EdgeFunction::analytic(A[i], s, eq.ell[i]);
  p.vertex_value = p.w[0].value0;
  return p;
}

std::vector<EigenPair> analytic_spectrum(const StarGraph& g, const AlphaRegime& r,
                                         int count) {
  const SecularEquation eq = SecularEquation::from(g, r);
  // widen the scan window until enough eigenvalues are found
  double s_max = (double(count) + 2.0) * M_PI / std::min({eq.ell[0], eq.ell[1], eq.ell[2]});
  std::vector<EigenPair> pairs;
  for (int attempt = 0; attempt < 6; ++attempt) {
    pairs.clear();
    for (double mu : secular_roots(eq, s_max)) {
      const double s = std::sqrt(mu);
      std::array<double, 3> A;
      for (int i = 0; i < 3; ++i) A[i] = 1.0 / std::sin(s * eq.ell[i]);
      pairs.push_back(make_analytic_pair(eq, r, A, s, false));
    }
    for (const auto& pe : pole_eigenvalues(eq, s_max)) {
      const double s = std::sqrt(pe.mu);
      // amplitudes on the pole edges subject to the flux constraint
      // sum_e h_e^2 A_e cos(s l_e) = 0; others vanish
      std::vector<std::array<double, 3>> basis;
      const auto& E = pe.edges;
      std::array<double, 3> gamma{0, 0, 0};
      for (int e : E) gamma[e] = eq.h2[e] * std::cos(s * eq.ell[e]);
      for (size_t t = 1; t < E.size(); ++t) {
        std::array<double, 3> A{0, 0, 0};
        A[E[0]] = gamma[E[t]];
        A[E[t]] = -gamma[E[0]];
        basis.push_back(A);
      }
      // orthogonalize a multi-dimensional pole space in the energy product
      // (diagonal in the amplitudes)
      std::array<double, 3> wgt;
      for (int e = 0; e < 3; ++e)
        wgt[e] = eq.h2[e] * s * s *
                 (0.5 * eq.ell[e] + std::sin(2.0 * s * eq.ell[e]) / (4.0 * s));
      for (size_t t = 1; t < basis.size(); ++t)
        for (size_t u = 0; u < t; ++u) {
          double num = 0.0, den = 0.0;
          for (int e = 0; e < 3; ++e) {
            num += wgt[e] * basis[t][e] * basis[u][e];
            den += wgt[e] * basis[u][e] * basis[u][e];
          }
          for (int e = 0; e < 3; ++e) basis[t][e] -= num / den * basis[u][e];
        }
      for (auto& A : basis) {
        auto p = make_analytic_pair(eq, r, A, s, true);
        p.degenerate = pe.multiplicity > 1;
        pairs.push_back(p);
      }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
    if (int(pairs.size()) >= count) break;
    s_max *= 1.6;
  }
  if (int(pairs.size()) < count) throw solver_error("could not find the requested eigenvalues");
  pairs.resize(size_t(count));
  return pairs;
}

std::vector<EigenPair> discrete_spectrum(const StarGraph& g, const AlphaRegime& r,
                                         int count) {
  const int N = 4000;
  auto sys = assemble_discrete(g, r, N);
  auto sol = solve_discrete_eigen(sys, count);
  std::vector<EigenPair> pairs;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd u = sol.vectors.col(k) / std::sqrt(sol.lambda[size_t(k)]);
    EigenPair p;
    p.lambda = sol.lambda[size_t(k)];
    p.regime = r;
    std::array<EdgeFunction, 3> w;
    for (int i = 0; i < 3; ++i)
      w[i] = EdgeFunction::grid(sys.edge_values(u, i), g.edges[i].length);
    if (w[0].derivL < 0.0) {
      u = -u;
      for (int i = 0; i < 3; ++i)
        w[i] = EdgeFunction::grid(sys.edge_values(u, i), g.edges[i].length);
    }
    p.w = w;
    p.vertex_value = u[0];
    p.pole_type = std::abs(p.vertex_value) < 1e-6;
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace

std::vector<EigenPair> solve_limit_spectrum(const StarGraph& g, const AlphaRegime& r,
                                            int count) {
  if (count < 1) throw config_error("count must be >= 1");
  auto pairs = g.constant_radius() ? analytic_spectrum(g, r, count)
                                   : discrete_spectrum(g, r, count);
  for (size_t k = 0; k < pairs.size(); ++k) {
    pairs[k].index = int(k) + 1;
    if (k + 1 < pairs.size()) {
      const double gap = pairs[k + 1].lambda - pairs[k].lambda;
      if (gap < kDegenerateGap * pairs[k].lambda) {
        pairs[k].degenerate = true;
        pairs[k + 1].degenerate = true;
      }
    }
  }
  return pairs;
}

std::string eigenpairs_csv(const std::vector<EigenPair>& pairs) {
  std::ostringstream os;
  os << "n,lambda,W0,dW1_0,dW2_0,dW3_0,degenerate\n";
  for (const auto& p : pairs) {
    os << p.index << ',' << fmt17(p.lambda) << ',' << fmt17(p.vertex_value);
    for (int i = 0; i < 3; ++i) os << ',' << fmt17(p.w[i].deriv0);
    os << ',' << (p.degenerate ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string eigenpairs_json(const std::vector<EigenPair>& pairs) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : pairs) {
    nlohmann::ordered_json e;
    e["n"] = p.index;
    e["lambda"] = p.lambda;
    e["W0"] = p.vertex_value;
    e["dW_0"] = {p.w[0].deriv0, p.w[1].deriv0, p.w[2].deriv0};
    e["degenerate"] = p.degenerate;
    e["pole_type"] = p.pole_type;
    j.push_back(e);
  }
  return j.dump(2);
}

double energy_inner(const EigenPair& a, const EigenPair& b, const StarGraph& g) {
  // closed form for analytic pairs; W_i' = -A_i w cos(w u), u = l - x
  auto cc = [](double wa, double wb, double L) {
    if (std::abs(wa - wb) < 1e-14 * std::max(wa, wb))
      return 0.5 * L + std::sin(2.0 * wa * L) / (4.0 * wa);
    return std::sin((wa - wb) * L) / (2.0 * (wa - wb)) +
           std::sin((wa + wb) * L) / (2.0 * (wa + wb));
  };
  const auto h2 = g.h0_squared();
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto* fa = std::get_if<EdgeFunction::Analytic>(&a.w[i].rep);
    const auto* fb = std::get_if<EdgeFunction::Analytic>(&b.w[i].rep);
    if (!fa || !fb) throw solver_error("energy_inner: analytic pairs required");
    total += h2[i] * fa->amplitude * fb->amplitude * fa->omega * fb->omega *
             cc(fa->omega, fb->omega, g.edges[i].length);
  }
  return total;
}

}  // namespace stargraph
