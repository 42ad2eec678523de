#pragma once

#include <string>
#include <vector>

#include "stargraph/limit_spectrum.hpp"
#include "stargraph/model.hpp"

namespace stargraph {

// Direct reference solver for the epsilon-dependent surrogate: the star graph
// with a lumped vertex mass eps^{1-alpha} m / pi. It reproduces exactly the
// mass-driven asymptotics (the eps^{1-alpha} law and the alpha = 1 vertex
// condition) and deliberately not the geometric delta terms.

struct SurrogateOptions {
  int points_per_edge = 2000;
  bool node_offset = false;  // grids on (eps*l0, l_i) instead of (0, l_i)
};

// sorted eigenvalues lambda_1..lambda_{n_max}(eps) of the surrogate
std::vector<double> solve_surrogate(const StarGraph& g, double alpha, double eps,
                                    int n_max, const SurrogateOptions& opt = {});

// eigenvalue plus edge-restricted eigenvector, <u,u>_0 = 1, sign-fixed
struct SurrogateMode {
  double lambda = 0.0;
  std::array<std::vector<double>, 3> edge_values;
};
SurrogateMode solve_surrogate_mode(const StarGraph& g, double alpha, double eps, int n,
                                   const SurrogateOptions& opt = {});

struct RateFit {
  std::vector<double> eps, value;
  double slope = 0.0, intercept = 0.0;  // log|value| vs log eps
  double residual = 0.0;                // rms of the log-log fit
};
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& value);

struct RateStudy {
  RateFit fit;                 // |lambda_n(eps) - Lambda_n| against eps
  RateFit residual_fit;        // after removing the first-order term
  double prefactor = 0.0;      // fitted coefficient of eps^{1-alpha}
  double mu_expected = 0.0;    // -(Lambda_n W_n(0))^2 m / pi
  double lambda_ref = 0.0;     // secular-solver Lambda_n
  std::vector<double> eps, lambda;
};

// Sweeps the surrogate, fits the slope of |lambda_n(eps) - Lambda_n| and
// extracts the eps^{1-alpha} prefactor; errors out when discretization error
// dominates (doubling the mesh shifts lambda by more than 10% of the signal).
RateStudy rate_study(const StarGraph& g, double alpha, int n,
                     const std::vector<double>& eps_list, const SurrogateOptions& opt = {});

// Same fits on an existing sweep (the `rates` command consumes `oracle` CSV).
RateStudy rate_study_from_samples(const StarGraph& g, double alpha, int n,
                                  const std::vector<double>& eps_list,
                                  const std::vector<double>& lambda_list);

struct BoundsReport {
  double min_lambda1 = 0.0;                 // over the sweep
  std::vector<double> max_lambda;           // per index n
  bool ordering_ok = true;                  // sorted output at every eps
  std::vector<double> eps;
};
BoundsReport bounds_check(const StarGraph& g, double alpha,
                          const std::vector<double>& eps_list, int n_max = 5,
                          const SurrogateOptions& opt = {});

// CSV columns: eps, n, lambda, lambda - Lambda_n, predicted partial sum, residual
std::string oracle_csv(const StarGraph& g, double alpha,
                       const std::vector<double>& eps_list, int n_max,
                       const SurrogateOptions& opt = {});

std::string rate_study_json(const RateStudy& s);

}  // namespace stargraph
