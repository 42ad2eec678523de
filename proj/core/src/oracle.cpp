#include "stargraph/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"

namespace stargraph {

namespace {

double lump(const StarGraph& g, double alpha, double eps) {
  return std::pow(eps, 1.0 - alpha) * g.node.mass_integral / M_PI;
}

DiscreteGraphSystem surrogate_system(const StarGraph& g, double alpha, double eps,
                                     const SurrogateOptions& opt) {
  if (!(eps > 0.0 && eps < 0.5)) throw config_error("surrogate requires eps in (0, 0.5)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw config_error("surrogate requires alpha in [0,1]");
  if (opt.node_offset) {
    const double he = g.edges[0].length / double(opt.points_per_edge);
    if (he > 0.5 * eps * g.node.ell0)
      throw solver_error("mesh too coarse for node-offset mode at this eps");
  }
  return assemble_discrete_beta(g, lump(g, alpha, eps), opt.points_per_edge,
                                opt.node_offset ? eps : 0.0);
}

// reference limit eigenpair for the sweep: the alpha < 1 problems share the
// plain limit problem, alpha = 1 uses the mass-modified one
EigenPair reference_pair(const StarGraph& g, double alpha, int n) {
  const AlphaRegime r = (alpha == 1.0) ? AlphaRegime::one() : AlphaRegime::zero();
  auto pairs = solve_limit_spectrum(g, r, n);
  return pairs[size_t(n - 1)];
}

}  // namespace

std::vector<double> solve_surrogate(const StarGraph& g, double alpha, double eps,
                                    int n_max, const SurrogateOptions& opt) {
  auto sys = surrogate_system(g, alpha, eps, opt);
  return solve_discrete_eigen(sys, n_max).lambda;
}

SurrogateMode solve_surrogate_mode(const StarGraph& g, double alpha, double eps, int n,
                                   const SurrogateOptions& opt) {
  auto sys = surrogate_system(g, alpha, eps, opt);
  auto sol = solve_discrete_eigen(sys, n);
  SurrogateMode out;
  out.lambda = sol.lambda[size_t(n - 1)];
  Eigen::VectorXd u = sol.vectors.col(n - 1) / std::sqrt(out.lambda);  // <u,u>_0 = 1
  for (int i = 0; i < 3; ++i) out.edge_values[size_t(i)] = sys.edge_values(u, i);
  auto f = EdgeFunction::grid(out.edge_values[0], g.edges[0].length);
  if (f.derivL < 0.0)
    for (auto& v : out.edge_values)
      for (auto& x : v) x = -x;
  return out;
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& value) {
  if (eps.size() != value.size() || eps.size() < 4)
    throw solver_error("rate fit requires at least 4 samples");
  const auto [mn, mx] = std::minmax_element(eps.begin(), eps.end());
  if (*mx / *mn < 99.0) throw solver_error("rate fit requires a sweep spanning >= 2 decades");
  RateFit f;
  f.eps = eps;
  f.value = value;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = int(eps.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(eps[size_t(i)]);
    const double y = std::log(std::max(std::abs(value[size_t(i)]), 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(eps[size_t(i)]);
    const double y = std::log(std::max(std::abs(value[size_t(i)]), 1e-300));
    const double r = y - f.slope * x - f.intercept;
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

RateStudy rate_study_from_samples(const StarGraph& g, double alpha, int n,
                                  const std::vector<double>& eps_list,
                                  const std::vector<double>& lambda_list) {
  if (eps_list.size() != lambda_list.size() || eps_list.size() < 4)
    throw config_error("rate study needs at least 4 (eps, lambda) samples");
  RateStudy out;
  const EigenPair ref = reference_pair(g, alpha, n);
  out.lambda_ref = ref.lambda;
  out.mu_expected = -std::pow(ref.lambda * ref.vertex_value, 2) * g.node.mass_integral / M_PI;
  out.eps = eps_list;
  out.lambda = lambda_list;
  std::vector<double> diff;
  for (size_t i = 0; i < eps_list.size(); ++i)
    diff.push_back(std::abs(lambda_list[i] - ref.lambda));
  out.fit = fit_rate(out.eps, diff);

  // prefactor: least squares of lambda - Lambda on powers t, t^2, .., t^4
  // with t = eps^{1-alpha}; the rank-one structure of the vertex lump makes
  // lambda analytic in t, so the linear coefficient converges fast
  const int n_pts = int(eps_list.size());
  const int deg = std::min(4, n_pts - 1);
  Eigen::MatrixXd A(n_pts, deg);
  Eigen::VectorXd y(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    const double t = std::pow(out.eps[size_t(i)], 1.0 - alpha);
    double tp = t;
    for (int d = 0; d < deg; ++d) {
      A(i, d) = tp;
      tp *= t;
    }
    y(i) = out.lambda[size_t(i)] - ref.lambda;
  }
  Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  out.prefactor = coef(0);

  std::vector<double> resid;
  for (int i = 0; i < n_pts; ++i) {
    const double t = std::pow(out.eps[size_t(i)], 1.0 - alpha);
    resid.push_back(std::abs(y(i) - t * out.mu_expected));
  }
  out.residual_fit = fit_rate(out.eps, resid);
  return out;
}

RateStudy rate_study(const StarGraph& g, double alpha, int n,
                     const std::vector<double>& eps_list, const SurrogateOptions& opt) {
  if (eps_list.size() < 4) throw config_error("rate study needs at least 4 eps values");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw config_error("rate study needs a decreasing eps list");

  // mesh-resolution guard at the smallest eps
  {
    const EigenPair ref = reference_pair(g, alpha, n);
    const double eps = eps_list.back();
    SurrogateOptions fine = opt;
    fine.points_per_edge = 2 * opt.points_per_edge;
    const double l1 = solve_surrogate(g, alpha, eps, n, opt)[size_t(n - 1)];
    const double l2 = solve_surrogate(g, alpha, eps, n, fine)[size_t(n - 1)];
    const double signal = std::abs(l1 - ref.lambda);
    if (signal > 0.0 && std::abs(l1 - l2) > 0.1 * signal)
      throw solver_error("discretization error dominates the rate study; demand finer mesh");
  }

  std::vector<double> lambda;
  for (double eps : eps_list)
    lambda.push_back(solve_surrogate(g, alpha, eps, n, opt)[size_t(n - 1)]);
  return rate_study_from_samples(g, alpha, n, eps_list, lambda);
}

BoundsReport bounds_check(const StarGraph& g, double alpha,
                          const std::vector<double>& eps_list, int n_max,
                          const SurrogateOptions& opt) {
  if (eps_list.empty()) throw config_error("bounds check needs a nonempty eps list");
  BoundsReport rep;
  rep.eps = eps_list;
  rep.max_lambda.assign(size_t(n_max), 0.0);
  rep.min_lambda1 = std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    auto l = solve_surrogate(g, alpha, eps, n_max, opt);
    rep.min_lambda1 = std::min(rep.min_lambda1, l[0]);
    for (int k = 0; k < n_max; ++k) {
      rep.max_lambda[size_t(k)] = std::max(rep.max_lambda[size_t(k)], l[size_t(k)]);
      if (k > 0 && l[size_t(k)] < l[size_t(k - 1)]) rep.ordering_ok = false;
    }
  }
  return rep;
}

std::string oracle_csv(const StarGraph& g, double alpha,
                       const std::vector<double>& eps_list, int n_max,
                       const SurrogateOptions& opt) {
  std::ostringstream os;
  os << "eps,n,lambda,lambda_minus_Lambda,predicted,residual\n";
  std::vector<EigenPair> refs;
  for (int k = 1; k <= n_max; ++k) refs.push_back(reference_pair(g, alpha, k));
  for (double eps : eps_list) {
    auto l = solve_surrogate(g, alpha, eps, n_max, opt);
    for (int k = 0; k < n_max; ++k) {
      const auto& ref = refs[size_t(k)];
      const double mu1a =
          -std::pow(ref.lambda * ref.vertex_value, 2) * g.node.mass_integral / M_PI;
      const double predicted =
          (alpha == 1.0) ? ref.lambda
                         : ref.lambda + std::pow(eps, 1.0 - alpha) * mu1a;
      os << fmt17(eps) << ',' << (k + 1) << ',' << fmt17(l[size_t(k)]) << ','
         << fmt17(l[size_t(k)] - ref.lambda) << ',' << fmt17(predicted) << ','
         << fmt17(l[size_t(k)] - predicted) << '\n';
    }
  }
  return os.str();
}

std::string rate_study_json(const RateStudy& s) {
  nlohmann::ordered_json j;
  j["lambda_ref"] = s.lambda_ref;
  j["slope"] = s.fit.slope;
  j["intercept"] = s.fit.intercept;
  j["fit_residual"] = s.fit.residual;
  j["prefactor"] = s.prefactor;
  j["mu_expected"] = s.mu_expected;
  j["residual_slope"] = s.residual_fit.slope;
  j["eps"] = s.eps;
  j["lambda"] = s.lambda;
  return j.dump(2);
}

}  // namespace stargraph
