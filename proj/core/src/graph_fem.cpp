#include <cmath>
#include <vector>

#include <Eigen/SparseCholesky>

#include "stargraph/errors.hpp"
#include "stargraph/limit_spectrum.hpp"

namespace stargraph {

namespace {
constexpr double kGauss = 0.28867513459481287;  // 1/(2 sqrt(3))
}

DiscreteGraphSystem assemble_discrete_beta(const StarGraph& g, double beta,
                                           int points_per_edge, double edge_start_scale) {
  if (points_per_edge < 16) throw solver_error("assemble_discrete: need >= 16 points per edge");
  const int N = points_per_edge;
  DiscreteGraphSystem sys;
  sys.points_per_edge = N;
  sys.beta = beta;
  const int n_dof = 1 + 3 * (N - 1);

  std::vector<Eigen::Triplet<double>> tk, tm;
  tk.reserve(size_t(12 * N));
  tm.reserve(size_t(12 * N));

  for (int i = 0; i < 3; ++i) {
    const double start = edge_start_scale * g.node.ell0;
    const double L = g.edges[i].length - start;
    if (L <= 0.0) throw solver_error("assemble_discrete: node offset exceeds edge length");
    sys.ell[i] = g.edges[i].length;
    sys.edge_start[i] = start;
    sys.edge_offset[i] = 1 + i * (N - 1);
    const double he = L / double(N);

    auto dof = [&](int j) -> int {  // nodal index j in 0..N
      if (j == 0) return 0;
      if (j == N) return -1;  // Dirichlet end
      return sys.edge_offset[i] + j - 1;
    };

    for (int e = 0; e < N; ++e) {
      const double x0 = start + he * double(e);
      const double xg1 = x0 + he * (0.5 - kGauss);
      const double xg2 = x0 + he * (0.5 + kGauss);
      const double w1 = g.edges[i].h_at(xg1), w2 = g.edges[i].h_at(xg2);
      const double h2g1 = w1 * w1, h2g2 = w2 * w2;
      const double wint = 0.5 * he * (h2g1 + h2g2);  // int h^2 over the element

      const int a = dof(e), b = dof(e + 1);
      const double kdiag = wint / (he * he);
      // phi values at the two Gauss points
      const double pa1 = 0.5 + kGauss, pa2 = 0.5 - kGauss;
      const double maa = 0.5 * he * (h2g1 * pa1 * pa1 + h2g2 * pa2 * pa2);
      const double mbb = 0.5 * he * (h2g1 * pa2 * pa2 + h2g2 * pa1 * pa1);
      const double mab = 0.5 * he * (h2g1 * pa1 * pa2 + h2g2 * pa2 * pa1);

      if (a >= 0) {
        tk.emplace_back(a, a, kdiag);
        tm.emplace_back(a, a, maa);
      }
      if (b >= 0) {
        tk.emplace_back(b, b, kdiag);
        tm.emplace_back(b, b, mbb);
      }
      if (a >= 0 && b >= 0) {
        tk.emplace_back(a, b, -kdiag);
        tk.emplace_back(b, a, -kdiag);
        tm.emplace_back(a, b, mab);
        tm.emplace_back(b, a, mab);
      }
    }
  }
  if (beta != 0.0) tm.emplace_back(0, 0, beta);

  sys.K.resize(n_dof, n_dof);
  sys.M.resize(n_dof, n_dof);
  sys.K.setFromTriplets(tk.begin(), tk.end());
  sys.M.setFromTriplets(tm.begin(), tm.end());
  return sys;
}

DiscreteGraphSystem assemble_discrete(const StarGraph& g, const AlphaRegime& r,
                                      int points_per_edge) {
  const double beta = r.is_one() ? g.node.mass_integral / M_PI : 0.0;
  return assemble_discrete_beta(g, beta, points_per_edge);
}

std::vector<double> DiscreteGraphSystem::edge_values(const Eigen::VectorXd& u, int i) const {
  std::vector<double> v(size_t(points_per_edge) + 1, 0.0);
  v[0] = u[0];
  for (int j = 1; j < points_per_edge; ++j) v[size_t(j)] = u[edge_offset[i] + j - 1];
  v.back() = 0.0;
  return v;
}

namespace {

DiscreteEigenSolution dense_generalized(const DiscreteGraphSystem& sys, int n_max) {
  Eigen::MatrixXd K = Eigen::MatrixXd(sys.K), M = Eigen::MatrixXd(sys.M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  if (es.info() != Eigen::Success) throw solver_error("dense generalized eigensolve failed");
  DiscreteEigenSolution out;
  const int n = std::min<int>(n_max, int(K.rows()));
  out.lambda.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  out.vectors = es.eigenvectors().leftCols(n);
  return out;
}

}  // namespace

DiscreteEigenSolution solve_discrete_eigen(const DiscreteGraphSystem& sys, int n_max) {
  const int n = sys.size();
  if (n_max < 1) throw solver_error("eigensolve: need n_max >= 1");
  if (n <= 1200) return dense_generalized(sys, n_max);

  // shift-invert Lanczos at sigma = 0: largest Ritz values of K^{-1} M in the
  // M-inner product are the smallest lambda
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.K);
  if (ldlt.info() != Eigen::Success) throw solver_error("LDLT factorization of K failed");

  auto m_norm = [&](const Eigen::VectorXd& x) { return std::sqrt(x.dot(sys.M * x)); };

  int m = std::min(n, std::max(2 * n_max + 30, 60));
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::vector<Eigen::VectorXd> V;
    std::vector<Eigen::VectorXd> MV;  // cached M * v
    Eigen::VectorXd alpha(m), beta(m);
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = 1.0 + 0.001 * std::sin(double(i + 1));
    q /= m_norm(q);
    V.push_back(q);
    MV.push_back(sys.M * q);

    int built = 0;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd w = ldlt.solve(MV[size_t(j)]);
      alpha[j] = w.dot(MV[size_t(j)]);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass)
        for (size_t t = 0; t < V.size(); ++t) w -= (w.dot(MV[t])) * V[t];
      const double b = m_norm(w);
      beta[j] = b;
      built = j + 1;
      if (b < 1e-14) break;
      if (j + 1 < m) {
        w /= b;
        V.push_back(w);
        MV.push_back(sys.M * w);
      }
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (int j = 0; j < built; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < built) {
        T(j, j + 1) = beta[j];
        T(j + 1, j) = beta[j];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    // largest theta first
    std::vector<int> order(static_cast<size_t>(built), 0);
    for (int i = 0; i < built; ++i) order[size_t(i)] = built - 1 - i;

    DiscreteEigenSolution out;
    out.vectors.resize(n, n_max);
    bool converged = built >= n_max;
    for (int k = 0; k < n_max && k < built; ++k) {
      const int idx = order[size_t(k)];
      const double theta = es.eigenvalues()[idx];
      if (theta <= 0.0) {
        converged = false;
        break;
      }
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < built; ++j) z += es.eigenvectors()(j, idx) * V[size_t(j)];
      z /= m_norm(z);
      const double lambda = 1.0 / theta;
      const Eigen::VectorXd r = sys.K * z - lambda * (sys.M * z);
      if (r.norm() > 1e-8 * lambda) converged = false;
      out.lambda.push_back(lambda);
      out.vectors.col(k) = z;
    }
    if (converged && int(out.lambda.size()) == n_max) return out;
    m = std::min(n, 2 * m);
  }
  throw solver_error("Lanczos eigensolver did not converge");
}

}  // namespace stargraph
