#include "stargraph/corrector.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "stargraph/errors.hpp"

namespace stargraph {

namespace {

constexpr int kExportSamples = 1025;

struct AnalyticBase {
  double omega, lambda;
  std::array<double, 3> A;    // W_i = A_i sin(omega (l_i - x))
  std::array<double, 3> h2, ell;
  double W0;                  // vertex value
  double v_norm;              // (W,W)_{V0} + beta W0^2  (= 1/lambda when <W,W>_0 = 1)
};

AnalyticBase analytic_base(const CorrectorProblem& p) {
  AnalyticBase b;
  b.lambda = p.base.lambda;
  b.omega = std::sqrt(p.base.lambda);
  b.h2 = p.graph.h0_squared();
  b.ell = p.graph.lengths();
  for (int i = 0; i < 3; ++i) {
    const auto* a = std::get_if<EdgeFunction::Analytic>(&p.base.w[i].rep);
    if (!a) throw solver_error("analytic corrector path needs an analytic base eigenpair");
    b.A[i] = a->amplitude;
  }
  b.W0 = p.base.vertex_value;
  double v = 0.0;
  for (int i = 0; i < 3; ++i) {
    TrigPoly Wi = TrigPoly::sin_mode(b.A[i], b.omega, b.ell[i]);
    v += b.h2[i] * TrigPoly::integrate_product(Wi, Wi);
  }
  b.v_norm = v + p.beta * b.W0 * b.W0;
  return b;
}

}  // namespace

CorrectorProblem homogenize(const CorrectorProblem& p) {
  CorrectorProblem q = p;
  if (p.homogenized || (p.delta2 == 0.0 && p.delta3 == 0.0)) {
    q.homogenized = true;
    return q;
  }
  const auto h2 = p.graph.h0_squared();
  const double omega = std::sqrt(p.base.lambda);
  const double deltas[3] = {0.0, p.delta2, p.delta3};
  for (int i = 1; i < 3; ++i) {
    if (deltas[i] == 0.0) continue;
    const double L = p.graph.edges[i].length;
    // mu0 h^2 delta (l - x)/l, as a polynomial in u = l - x
    q.rhs[i] += TrigPoly::poly_u({0.0, p.base.lambda * h2[i] * deltas[i] / L}, omega, L);
    if (q.rhs_grid) {
      auto& grid = (*q.rhs_grid)[size_t(i)];
      const int n = int(grid.size());
      for (int j = 0; j < n; ++j) {
        const double x = L * double(j) / double(n - 1);
        const double h = p.graph.edges[i].h_at(x);
        // finite difference of h^2 for the -2 delta h h'/l term
        const double dx = L * 1e-6;
        const double hp = (p.graph.edges[i].h_at(std::min(x + dx, L)) -
                           p.graph.edges[i].h_at(std::max(x - dx, 0.0))) /
                          (std::min(x + dx, L) - std::max(x - dx, 0.0));
        grid[size_t(j)] += p.base.lambda * h * h * deltas[i] * (L - x) / L -
                           2.0 * deltas[i] * h * hp / L;
      }
    }
    q.flux_datum += deltas[i] * h2[i] / L;
  }
  q.delta2 = q.delta3 = 0.0;
  q.homogenized = true;
  return q;
}

CorrectorSolution solve_corrector(const CorrectorProblem& p) {
  if (p.base.degenerate)
    throw degeneracy_error("corrector solve refused: base eigenvalue flagged degenerate");

  const CorrectorProblem hp = homogenize(p);
  const AnalyticBase b = analytic_base(p);
  const double w = b.omega;

  // phi_i = c_i S_i + P_i + mu Q_i with S_i the sine kernel, P from the rhs,
  // Q from the resonant mu-column
  std::array<TrigPoly, 3> S, P, Q, W;
  for (int i = 0; i < 3; ++i) {
    S[i] = TrigPoly::sin_mode(1.0, w, b.ell[i]);
    W[i] = TrigPoly::sin_mode(b.A[i], w, b.ell[i]);
    TrigPoly rhs_i = hp.rhs[i];
    if (rhs_i.zero()) rhs_i = TrigPoly(w, b.ell[i]);
    P[i] = TrigPoly::solve_resonant((1.0 / b.h2[i]) * rhs_i);
    Q[i] = TrigPoly::solve_resonant(W[i]);
  }

  // unknowns (c1, c2, c3, mu)
  Eigen::Matrix4d Asys = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();

  // continuity rows: phi_1(0) - phi_i(0) = 0, i = 2, 3
  for (int r = 0; r < 2; ++r) {
    const int i = r + 1;
    Asys(r, 0) = S[0].value_at_vertex();
    Asys(r, i) = -S[i].value_at_vertex();
    Asys(r, 3) = Q[0].value_at_vertex() - Q[i].value_at_vertex();
    rhs(r) = P[i].value_at_vertex() - P[0].value_at_vertex();
  }
  // flux row: sum h_i^2 phi_i'(0) + beta (lambda phi_1(0) + mu W0) = D
  for (int i = 0; i < 3; ++i) {
    Asys(2, i) = b.h2[i] * S[i].deriv_at_vertex();
    Asys(2, 3) += b.h2[i] * Q[i].deriv_at_vertex();
  }
  Asys(2, 0) += p.beta * b.lambda * S[0].value_at_vertex();
  Asys(2, 3) += p.beta * (b.lambda * Q[0].value_at_vertex() + b.W0);
  rhs(2) = hp.flux_datum;
  for (int i = 0; i < 3; ++i) rhs(2) -= b.h2[i] * P[i].deriv_at_vertex();
  rhs(2) -= p.beta * b.lambda * P[0].value_at_vertex();
  // orthogonality row: <phi, W>_0 = 0
  for (int i = 0; i < 3; ++i) {
    const TrigPoly Wd = W[i].derivative_x();
    Asys(3, i) = b.h2[i] * TrigPoly::integrate_product(S[i].derivative_x(), Wd);
    Asys(3, 3) += b.h2[i] * TrigPoly::integrate_product(Q[i].derivative_x(), Wd);
    rhs(3) -= b.h2[i] * TrigPoly::integrate_product(P[i].derivative_x(), Wd);
  }

  Eigen::FullPivLU<Eigen::Matrix4d> lu(Asys);
  const double cond = std::abs(lu.matrixLU()(0, 0)) /
                      std::max(std::abs(lu.matrixLU()(3, 3)), 1e-300);
  if (cond > 1e12) throw solver_error("corrector saddle system ill-conditioned");
  const Eigen::Vector4d sol = lu.solve(rhs);
  const double mu = sol(3);

  CorrectorSolution out;
  out.mu = mu;
  out.diagnostics.condition_estimate = cond;

  std::array<TrigPoly, 3> phi;
  for (int i = 0; i < 3; ++i) {
    phi[i] = sol(i) * S[i];
    phi[i] += P[i];
    phi[i] += mu * Q[i];
  }
  out.tilde = phi;

  // Fredholm identity on the homogenized problem, an independent mu route
  double proj = 0.0, ortho = 0.0;
  for (int i = 0; i < 3; ++i) {
    proj += TrigPoly::integrate_product(hp.rhs[i], W[i]);
    ortho += b.h2[i] * TrigPoly::integrate_product(phi[i].derivative_x(), W[i].derivative_x());
  }
  out.diagnostics.solvability_residual =
      std::abs(proj - hp.flux_datum * b.W0 + mu * b.v_norm);
  out.diagnostics.orthogonality_residual = std::abs(ortho);

  // undo the substitution: w_i = phi_i + delta_i (l_i - x)/l_i
  const double deltas[3] = {0.0, p.delta2, p.delta3};
  std::array<TrigPoly, 3> wfun = phi;
  for (int i = 1; i < 3; ++i)
    if (deltas[i] != 0.0)
      wfun[i] += TrigPoly::poly_u({0.0, deltas[i] / b.ell[i]}, w, b.ell[i]);
  out.w_analytic = wfun;

  for (int i = 0; i < 3; ++i) {
    out.triple[i] = EdgeFunction::grid_with_boundary(
        wfun[i].sample_x(kExportSamples), b.ell[i], wfun[i].value_at_vertex(),
        wfun[i].deriv_at_vertex(), wfun[i].deriv_at_end());
  }

  // transmission residuals against the original problem data
  const double w10 = wfun[0].value_at_vertex();
  out.diagnostics.jump_residual =
      std::max(std::abs(w10 - wfun[1].value_at_vertex() + p.delta2),
               std::abs(w10 - wfun[2].value_at_vertex() + p.delta3));
  double flux = p.beta * (b.lambda * w10 + mu * b.W0);
  for (int i = 0; i < 3; ++i) flux += b.h2[i] * wfun[i].deriv_at_vertex();
  out.diagnostics.flux_residual = std::abs(flux - p.flux_datum);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete route

DiscreteCorrectorSolution solve_corrector_discrete(
    const StarGraph& g, double beta, int base_index,
    const std::array<std::vector<double>, 3>& rhs_nodal, double delta2, double delta3,
    double flux_datum, int points_per_edge) {
  auto sys = assemble_discrete_beta(g, beta, points_per_edge);
  auto eig = solve_discrete_eigen(sys, base_index);
  const double lambda = eig.lambda[size_t(base_index - 1)];
  Eigen::VectorXd W = eig.vectors.col(base_index - 1) / std::sqrt(lambda);  // <W,W>_0 = 1
  {
    auto f = EdgeFunction::grid(sys.edge_values(W, 0), g.edges[0].length);
    if (f.derivL < 0.0) W = -W;
  }

  const int n = sys.size();
  const int N = sys.points_per_edge;

  // homogenized data
  const double deltas[3] = {0.0, delta2, delta3};
  const auto h2 = g.h0_squared();
  double D = flux_datum;
  for (int i = 1; i < 3; ++i) D += deltas[i] * h2[i] / g.edges[i].length;

  // load vector F_j = int Phi psi_j - D [j = vertex], Phi homogenized
  Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < 3; ++i) {
    if (int(rhs_nodal[size_t(i)].size()) != N + 1)
      throw solver_error("discrete corrector rhs must have points_per_edge + 1 nodes");
    const double L = g.edges[i].length;
    const double he = L / double(N);
    auto phi_at = [&](int j) {
      double v = rhs_nodal[size_t(i)][size_t(j)];
      if (i > 0 && deltas[i] != 0.0) {
        const double x = he * double(j);
        const double h = g.edges[i].h_at(x);
        v += lambda * h * h * deltas[i] * (L - x) / L;
      }
      return v;
    };
    for (int e = 0; e < N; ++e) {
      const double fa = phi_at(e), fb = phi_at(e + 1);
      const int a = (e == 0) ? 0 : sys.edge_offset[i] + e - 1;
      const int bdof = (e + 1 == N) ? -1 : sys.edge_offset[i] + e;
      if (a >= 0) F[a] += he * (fa / 3.0 + fb / 6.0);
      if (bdof >= 0) F[bdof] += he * (fa / 6.0 + fb / 3.0);
    }
  }
  F[0] -= D;

  // bordered system [[K - lambda M, -M W], [(K W)^T, 0]]
  Eigen::VectorXd MW = sys.M * W, KW = sys.K * W;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> Alin = sys.K - lambda * sys.M;
  for (int k = 0; k < Alin.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Alin, k); it; ++it)
      trip.emplace_back(int(it.row()), int(it.col()), it.value());
  for (int j = 0; j < n; ++j) {
    trip.emplace_back(j, n, -MW[j]);
    trip.emplace_back(n, j, KW[j]);
  }
  Eigen::SparseMatrix<double> B(n + 1, n + 1);
  B.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(B);
  if (lu.info() != Eigen::Success) throw solver_error("discrete corrector factorization failed");
  Eigen::VectorXd Fb(n + 1);
  Fb.head(n) = F;
  Fb[n] = 0.0;
  Eigen::VectorXd sol = lu.solve(Fb);

  DiscreteCorrectorSolution out;
  out.mu = sol[n];
  out.lambda_h = lambda;
  for (int i = 0; i < 3; ++i) {
    auto vals = sys.edge_values(sol.head(n), i);
    if (i > 0 && deltas[i] != 0.0) {
      const double L = g.edges[i].length;
      for (int j = 0; j <= N; ++j)
        vals[size_t(j)] += deltas[i] * (L - L * double(j) / double(N)) / L;
    }
    out.w[size_t(i)] = std::move(vals);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form dual routes

double mu1_closed_form(const StarGraph& g, const AlphaRegime& r, const EigenPair& base,
                       double delta1_2, double delta1_3, std::optional<double> eta1) {
  const auto h2 = g.h0_squared();
  const double L = base.lambda, W0 = base.vertex_value;
  double sum_h2 = h2[0] + h2[1] + h2[2];
  double d1;
  switch (r.kind) {
    case RegimeKind::Zero:
      d1 = L * W0 * (g.node.ell0 * sum_h2 - g.node.mass_integral / M_PI);
      break;
    case RegimeKind::One:
      d1 = L * W0 * g.node.ell0 * sum_h2 - (L / M_PI) * eta1.value_or(0.0);
      break;
    default:  // fractional regimes: node forcing suppressed at integer orders
      d1 = L * W0 * g.node.ell0 * sum_h2;
      break;
  }
  return L * W0 * d1 -
         L * (delta1_2 * h2[1] * base.w[1].deriv0 + delta1_3 * h2[2] * base.w[2].deriv0);
}

double mu_one_minus_alpha_closed_form(const StarGraph& g, const EigenPair& base) {
  const double s = base.lambda * base.vertex_value;
  return -s * s * g.node.mass_integral / M_PI;
}

}  // namespace stargraph
