#pragma once

#include <array>
#include <optional>

#include "stargraph/limit_spectrum.hpp"
#include "stargraph/model.hpp"
#include "stargraph/trig_poly.hpp"

namespace stargraph {

// Generic vertex-corrected edge boundary value problem of the recursion:
//
//   -(h_i^2 w')' - mu0 h_i^2 w = rhs_i + mu h_i^2 W_i          on each edge,
//   w_i(l_i) = 0,
//   w_1(0) = w_2(0) - delta2 = w_3(0) - delta3,
//   sum_i h_i^2 w_i'(0) + beta (mu0 w_1(0) + mu W(0)) = flux_datum,
//
// where (mu0, W) is the base eigenpair and mu is fixed by solvability. The
// vertex-mass terms (beta = m/pi, regime alpha = 1 only) sit in the operator
// and in the mu column; for alpha < 1, beta = 0 and the flux condition is the
// plain Kirchhoff sum.

struct CorrectorProblem {
  EigenPair base;
  StarGraph graph;
  double beta = 0.0;

  // weighted right-hand sides (they carry the h_i^2 factor)
  std::array<TrigPoly, 3> rhs;                               // analytic path
  std::optional<std::array<std::vector<double>, 3>> rhs_grid;  // discrete path

  double delta2 = 0.0, delta3 = 0.0;
  double flux_datum = 0.0;
  bool homogenized = false;  // set by homogenize(): jumps folded into rhs
};

struct CorrectorDiagnostics {
  double solvability_residual = 0.0;    // Fredholm identity residual
  double orthogonality_residual = 0.0;  // <phi_tilde, W>_0 of the homogenized solution
  double jump_residual = 0.0;
  double flux_residual = 0.0;
  double condition_estimate = 0.0;
};

struct CorrectorSolution {
  double mu = 0.0;
  std::array<EdgeFunction, 3> triple;   // w, satisfies the original jump data
  std::array<TrigPoly, 3> tilde;        // homogenized solution phi, <phi,W>_0 = 0
  std::array<TrigPoly, 3> w_analytic;   // closed form of the triple
  CorrectorDiagnostics diagnostics;
};

// Substitution phi_i = w_i - delta_i (l_i - x)/l_i for i = 2,3: returns the
// continuous-vertex problem with modified rhs and flux datum
// D = d + delta2 h2^2/l2 + delta3 h3^2/l3.
CorrectorProblem homogenize(const CorrectorProblem& p);

CorrectorSolution solve_corrector(const CorrectorProblem& p);

// Independent discrete route (P1 saddle system on a shared mesh); used to
// cross-check the analytic path and for variable cross-sections.
struct DiscreteCorrectorSolution {
  double mu = 0.0;
  std::array<std::vector<double>, 3> w;  // nodal values incl. vertex and far end
  double lambda_h = 0.0;                 // discrete base eigenvalue used
};
DiscreteCorrectorSolution solve_corrector_discrete(
    const StarGraph& g, double beta, int base_index,
    const std::array<std::vector<double>, 3>& rhs_nodal,  // weighted, per edge node
    double delta2, double delta3, double flux_datum, int points_per_edge);

// Closed-form first-order coefficients (the dual route for the generic
// pipeline). All assume <W,W>_0 = 1.
//
// mu at exponent 1:      mu1 = L W(0) d1* - L sum_{i=2,3} delta1_i h_i^2 W_i'(0)
// with d1* regime-dependent:
//   alpha = 0:        d1* = L W(0) (l0 sum h_i^2 - m/pi)
//   fractional (k=1): d1* = L W(0)  l0 sum h_i^2
//   alpha = 1:        d1* = L W(0)  l0 sum h_i^2 - (L/pi) eta1
// mu at exponent 1-alpha: mu_{1-alpha} = -(L W(0))^2 m / pi.
double mu1_closed_form(const StarGraph& g, const AlphaRegime& r, const EigenPair& base,
                       double delta1_2, double delta1_3,
                       std::optional<double> eta1 = std::nullopt);
double mu_one_minus_alpha_closed_form(const StarGraph& g, const EigenPair& base);

}  // namespace stargraph
