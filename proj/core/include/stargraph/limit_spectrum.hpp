#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stargraph/model.hpp"

namespace stargraph {

// ---------------------------------------------------------------------------
// Secular equation for constant cross-sections:
//
//   G(mu) = sum_i h_i^2 cot(sqrt(mu) l_i) - beta sqrt(mu),
//
// valid away from sin(sqrt(mu) l_i) = 0. beta = 0 for alpha in [0,1) and
// beta = m/pi for alpha = 1 (mass-modified Kirchhoff condition).

struct SecularEquation {
  std::array<double, 3> h2{1, 1, 1};
  std::array<double, 3> ell{1, 1, 1};
  double beta = 0.0;

  static SecularEquation from(const StarGraph& g, const AlphaRegime& r);
};

struct SecularPole {};  // returned when |sin(sqrt(mu) l_i)| < 1e-12 for some i

// G(mu) or a pole report; caller must bracket around poles.
std::optional<double> secular_eval(const SecularEquation& eq, double mu);
double secular_eval_checked(const SecularEquation& eq, double mu);  // throws solver_error at poles
double secular_derivative(const SecularEquation& eq, double mu);    // dG/dmu

// All roots of G with sqrt(mu) <= s_max, bisection to 1e-13 plus one Newton
// polish. Scan step in s is min_i(pi / (64 l_i)).
std::vector<double> secular_roots(const SecularEquation& eq, double s_max);

// Pole-type eigenvalues (vertex value zero). A candidate s = k pi / l_i is an
// eigenvalue iff at least two edges share the pole; multiplicity = count - 1.
struct PoleEigenvalue {
  double mu;
  std::vector<int> edges;  // 0-based edges at the pole
  int multiplicity;
};
std::vector<PoleEigenvalue> pole_eigenvalues(const SecularEquation& eq, double s_max);

// ---------------------------------------------------------------------------
// Discrete counterpart: P1 finite elements with weights h_i^2(x), vertex
// continuity through a shared degree of freedom, Dirichlet ends eliminated,
// and an optional vertex point mass beta added to M.

struct DiscreteGraphSystem {
  Eigen::SparseMatrix<double> K;   // stiffness, SPD on the constrained space
  Eigen::SparseMatrix<double> M;   // mass (+ beta at the vertex diagonal)
  int points_per_edge = 0;         // element count per edge
  std::array<int, 3> edge_offset{};  // first interior dof of each edge
  std::array<double, 3> ell{};
  std::array<double, 3> edge_start{};  // 0, or eps*ell0 in node-offset mode
  double beta = 0.0;
  int vertex_dof() const { return 0; }
  int size() const { return int(K.rows()); }

  // nodal values of global vector u on edge i including vertex and Dirichlet end
  std::vector<double> edge_values(const Eigen::VectorXd& u, int i) const;
};

DiscreteGraphSystem assemble_discrete(const StarGraph& g, const AlphaRegime& r,
                                      int points_per_edge);
// same discretization with an arbitrary vertex mass (oracle surrogate)
DiscreteGraphSystem assemble_discrete_beta(const StarGraph& g, double beta,
                                           int points_per_edge,
                                           double edge_start_scale = 0.0);

// Lowest eigenpairs of K u = lambda M u by shift-invert Lanczos with full
// reorthogonalization (deterministic start vector).
struct DiscreteEigenSolution {
  std::vector<double> lambda;
  Eigen::MatrixXd vectors;  // columns, M-orthonormal
};
DiscreteEigenSolution solve_discrete_eigen(const DiscreteGraphSystem& sys, int n_max);

// ---------------------------------------------------------------------------
// Limit spectral problem on the graph

std::vector<EigenPair> solve_limit_spectrum(const StarGraph& g, const AlphaRegime& r,
                                            int count);

// Eigenpair table output (CSV columns: n, lambda, W0, dW1_0, dW2_0, dW3_0,
// degenerate) and the JSON equivalent.
std::string eigenpairs_csv(const std::vector<EigenPair>& pairs);
std::string eigenpairs_json(const std::vector<EigenPair>& pairs);

// Energy inner product <u,v>_0 = sum_i h_i^2 int u' v' for analytic pairs.
double energy_inner(const EigenPair& a, const EigenPair& b, const StarGraph& g);

}  // namespace stargraph
