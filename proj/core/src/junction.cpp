#include "stargraph/junction.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "stargraph/errors.hpp"
#include "stargraph/io.hpp"
#include "stargraph/limit_spectrum.hpp"

namespace stargraph {

// ---------------------------------------------------------------------------
// Cut-off profiles

namespace {
double smoothstep5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double smoothstep5_p(double t) { return 30.0 * t * t * (1.0 + t * (-2.0 + t)); }
double smoothstep5_pp(double t) { return 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)); }
double smoothstep7(double t) {
  return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}
double smoothstep7_p(double t) {
  return t * t * t * (140.0 + t * (-420.0 + t * (420.0 - 140.0 * t)));
}
double smoothstep7_pp(double t) {
  return t * t * (420.0 + t * (-1680.0 + t * (2100.0 - 840.0 * t)));
}
}  // namespace

double CutoffProfile::chi(double xi) const {
  if (xi <= lo) return 0.0;
  if (xi >= hi) return 1.0;
  const double t = (xi - lo) / (hi - lo);
  return kind == Kind::Quintic ? smoothstep5(t) : smoothstep7(t);
}
double CutoffProfile::chi_p(double xi) const {
  if (xi <= lo || xi >= hi) return 0.0;
  const double w = hi - lo, t = (xi - lo) / w;
  return (kind == Kind::Quintic ? smoothstep5_p(t) : smoothstep7_p(t)) / w;
}
double CutoffProfile::chi_pp(double xi) const {
  if (xi <= lo || xi >= hi) return 0.0;
  const double w = hi - lo, t = (xi - lo) / w;
  return (kind == Kind::Quintic ? smoothstep5_pp(t) : smoothstep7_pp(t)) / (w * w);
}
double CutoffProfile::commutator_primitive(double xi) const {
  return xi * chi_p(xi) + chi(xi);
}

// ---------------------------------------------------------------------------
// Mesh

void JunctionMesh::finalize_counts() {
  const int S = 2 * n_c_;
  node_count_ = S * S * S;
  int total = node_count_;
  for (int a = 0; a < 3; ++a) {
    outlet_offset_[size_t(a)] = total;
    total += (n_R_ - n_c_) * cross_[size_t(a)] * cross_[size_t(a)];
  }
  n_cells_ = total;
  build_neighbors();
}

JunctionMesh JunctionMesh::build(const StarGraph& g, double delta, double R) {
  JunctionMesh m;
  m.delta_ = delta;
  m.ell0_ = g.node.ell0;
  if (R < g.node.ell0 + 4.0)
    throw config_error("junction truncation length must satisfy R >= ell0 + 4");
  // round the outlet length up to a multiple of 16 cells so the multigrid
  // hierarchy coarsens cleanly
  m.n_R_ = ((int(std::lround(R / delta)) + 15) / 16) * 16;
  m.R_ = m.n_R_ * delta;

  int max_half = 0;
  for (int a = 0; a < 3; ++a) {
    const double h = g.edges[a].h0();
    m.target_area_[size_t(a)] = M_PI * h * h;
    int n = int(std::lround(std::sqrt(M_PI) * h / delta));
    if (n % 2 != 0) {
      // prefer the even neighbor with the smaller area error
      const double lo_err = std::abs((n - 1) * (n - 1) * delta * delta - M_PI * h * h);
      const double hi_err = std::abs((n + 1) * (n + 1) * delta * delta - M_PI * h * h);
      n += (hi_err < lo_err) ? 1 : -1;
    }
    if (n < 2) throw config_error("junction mesh too coarse for the outlet cross-section");
    m.cross_[size_t(a)] = n;
    m.side_[size_t(a)] = n * delta;
    const double realized = m.side_[size_t(a)] * m.side_[size_t(a)];
    if (std::abs(realized - M_PI * h * h) > 0.02 * M_PI * h * h)
      throw config_error("realized outlet cross-section deviates more than 2% from pi h^2; "
                         "adjust delta");
    max_half = std::max(max_half, n / 2);
  }
  m.n_c_ = std::max(int(std::ceil(g.node.ell0 / delta - 1e-9)), max_half);
  m.node_half_ = m.n_c_ * delta;
  m.finalize_counts();
  return m;
}

bool JunctionMesh::coarsenable(const JunctionMesh& m) {
  if (m.n_c_ % 2 != 0 || m.n_R_ % 2 != 0 || m.n_c_ < 2) return false;
  for (int a = 0; a < 3; ++a)
    if (m.cross_[size_t(a)] % 2 != 0 || m.cross_[size_t(a)] < 4) return false;
  return true;
}

JunctionMesh JunctionMesh::coarsen(const JunctionMesh& f) {
  JunctionMesh m;
  m.delta_ = 2.0 * f.delta_;
  m.R_ = f.R_;
  m.ell0_ = f.ell0_;
  m.node_half_ = f.node_half_;
  m.n_c_ = f.n_c_ / 2;
  m.n_R_ = f.n_R_ / 2;
  for (int a = 0; a < 3; ++a) {
    m.cross_[size_t(a)] = f.cross_[size_t(a)] / 2;
    m.side_[size_t(a)] = f.side_[size_t(a)];
    m.target_area_[size_t(a)] = f.target_area_[size_t(a)];
  }
  m.finalize_counts();
  return m;
}

int JunctionMesh::node_index(int i, int j, int k) const {
  const int S = 2 * n_c_;
  return ((i + n_c_) * S + (j + n_c_)) * S + (k + n_c_);
}

int JunctionMesh::outlet_index(int axis, int ja, int c1, int c2) const {
  const int na = cross_[size_t(axis)];
  return outlet_offset_[size_t(axis)] + ((ja - n_c_) * na + c1) * na + c2;
}

int JunctionMesh::cell_box(int idx) const {
  if (idx < node_count_) return -1;
  for (int a = 2; a >= 0; --a)
    if (idx >= outlet_offset_[size_t(a)]) return a;
  return -1;
}

std::array<double, 3> JunctionMesh::cell_center(int idx) const {
  std::array<double, 3> x{};
  if (idx < node_count_) {
    const int S = 2 * n_c_;
    const int k = idx % S, j = (idx / S) % S, i = idx / (S * S);
    x[0] = (i - n_c_ + 0.5) * delta_;
    x[1] = (j - n_c_ + 0.5) * delta_;
    x[2] = (k - n_c_ + 0.5) * delta_;
    return x;
  }
  const int a = cell_box(idx);
  const int na = cross_[size_t(a)];
  int rem = idx - outlet_offset_[size_t(a)];
  const int c2 = rem % na, c1 = (rem / na) % na, ja = rem / (na * na) + n_c_;
  x[size_t(a)] = (ja + 0.5) * delta_;
  x[size_t((a + 1) % 3)] = (c1 + 0.5 - na / 2) * delta_;
  x[size_t((a + 2) % 3)] = (c2 + 0.5 - na / 2) * delta_;
  return x;
}

double JunctionMesh::axial_coord(int idx) const {
  const int a = cell_box(idx);
  if (a < 0) return 0.0;
  const int na = cross_[size_t(a)];
  const int ja = (idx - outlet_offset_[size_t(a)]) / (na * na) + n_c_;
  return (ja + 0.5) * delta_;
}

bool JunctionMesh::is_cap_cell(int idx, int outlet) const {
  if (cell_box(idx) != outlet) return false;
  const int na = cross_[size_t(outlet)];
  const int ja = (idx - outlet_offset_[size_t(outlet)]) / (na * na) + n_c_;
  return ja == n_R_ - 1;
}

void JunctionMesh::build_neighbors() {
  nbr_.assign(size_t(n_cells_) * 6, -1);
  auto set = [&](int idx, int dir, int v) { nbr_[size_t(idx) * 6 + size_t(dir)] = v; };

  for (int i = -n_c_; i < n_c_; ++i)
    for (int j = -n_c_; j < n_c_; ++j)
      for (int k = -n_c_; k < n_c_; ++k) {
        const int idx = node_index(i, j, k);
        const int c[3] = {i, j, k};
        for (int d = 0; d < 3; ++d) {
          for (int sgn = 0; sgn < 2; ++sgn) {
            const int dir = 2 * d + sgn;  // sgn 0: -, 1: +
            int cc[3] = {c[0], c[1], c[2]};
            cc[d] += sgn ? 1 : -1;
            if (cc[d] >= -n_c_ && cc[d] < n_c_) {
              set(idx, dir, node_index(cc[0], cc[1], cc[2]));
            } else if (sgn == 1 && cc[d] == n_c_) {
              // crossing into outlet d if within its cross-section
              const int na = cross_[size_t(d)];
              const int t1 = c[(d + 1) % 3] + na / 2, t2 = c[(d + 2) % 3] + na / 2;
              if (t1 >= 0 && t1 < na && t2 >= 0 && t2 < na)
                set(idx, dir, outlet_index(d, n_c_, t1, t2));
            }
          }
        }
      }

  for (int a = 0; a < 3; ++a) {
    const int na = cross_[size_t(a)];
    for (int ja = n_c_; ja < n_R_; ++ja)
      for (int c1 = 0; c1 < na; ++c1)
        for (int c2 = 0; c2 < na; ++c2) {
          const int idx = outlet_index(a, ja, c1, c2);
          // axial
          if (ja + 1 < n_R_) set(idx, 2 * a + 1, outlet_index(a, ja + 1, c1, c2));
          if (ja - 1 >= n_c_)
            set(idx, 2 * a + 0, outlet_index(a, ja - 1, c1, c2));
          else {
            int cc[3];
            cc[a] = n_c_ - 1;
            cc[(a + 1) % 3] = c1 - na / 2;
            cc[(a + 2) % 3] = c2 - na / 2;
            set(idx, 2 * a + 0, node_index(cc[0], cc[1], cc[2]));
          }
          // transverse
          const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
          if (c1 + 1 < na) set(idx, 2 * t1 + 1, outlet_index(a, ja, c1 + 1, c2));
          if (c1 - 1 >= 0) set(idx, 2 * t1 + 0, outlet_index(a, ja, c1 - 1, c2));
          if (c2 + 1 < na) set(idx, 2 * t2 + 1, outlet_index(a, ja, c1, c2 + 1));
          if (c2 - 1 >= 0) set(idx, 2 * t2 + 0, outlet_index(a, ja, c1, c2 - 1));
        }
  }
}

double JunctionMesh::node_mass(const Rho0Expr& rho) const {
  double m = 0.0;
  for (int idx = 0; idx < node_count_; ++idx) {
    const auto x = cell_center(idx);
    m += rho(x[0], x[1], x[2]);
  }
  return m * cell_volume();
}

// ---------------------------------------------------------------------------
// CG on the singular Neumann Laplacian (matrix-free, Jacobi preconditioner,
// constants projected out)

namespace {

struct CgStats {
  int iterations = 0;
};

void project_mean(std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  for (auto& x : v) x -= mean;
}

void apply_laplacian(const JunctionMesh& m, const std::vector<double>& u,
                     std::vector<double>& y) {
  const auto& nbr = m.neighbors();
  const double inv = 1.0 / (m.delta() * m.delta());
  const int n = m.n_cells();
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    int deg = 0;
    for (int d = 0; d < 6; ++d) {
      const int nb = nbr[size_t(c) * 6 + size_t(d)];
      if (nb >= 0) {
        acc += u[size_t(nb)];
        ++deg;
      }
    }
    y[size_t(c)] = (deg * u[size_t(c)] - acc) * inv;
  }
}

std::vector<double> jacobi_diag(const JunctionMesh& m) {
  const auto& nbr = m.neighbors();
  const int n = m.n_cells();
  std::vector<double> diag(size_t(n), 0.0);
  const double inv = 1.0 / (m.delta() * m.delta());
  for (int c = 0; c < n; ++c) {
    int deg = 0;
    for (int d = 0; d < 6; ++d)
      if (nbr[size_t(c) * 6 + size_t(d)] >= 0) ++deg;
    diag[size_t(c)] = deg * inv;
  }
  return diag;
}

// Cell-centered geometric multigrid used as the CG preconditioner: damped
// Jacobi smoothing, 8-child averaging restriction, injection prolongation.
class MgHierarchy {
 public:
  explicit MgHierarchy(const JunctionMesh& fine) {
    meshes_.push_back(&fine);
    while (meshes_.size() < 8 && JunctionMesh::coarsenable(*meshes_.back()) &&
           meshes_.back()->n_cells() > 4096)
      coarse_.push_back(JunctionMesh::coarsen(*meshes_.back())),
          meshes_.push_back(&coarse_.back());
    const size_t L = meshes_.size();
    diag_.resize(L);
    x_.resize(L);
    b_.resize(L);
    r_.resize(L);
    for (size_t l = 0; l < L; ++l) {
      diag_[l] = jacobi_diag(*meshes_[l]);
      const size_t n = size_t(meshes_[l]->n_cells());
      x_[l].assign(n, 0.0);
      b_[l].assign(n, 0.0);
      r_[l].assign(n, 0.0);
    }
    // children map: 8 fine cells per coarse cell
    children_.resize(L);
    for (size_t l = 1; l < L; ++l) children_[l] = build_children(*meshes_[l], *meshes_[l - 1]);
  }

  size_t levels() const { return meshes_.size(); }

  // z := approximate A^{-1} r on the finest level (one V-cycle)
  void apply(const std::vector<double>& r0, std::vector<double>& z) {
    b_[0] = r0;
    std::fill(x_[0].begin(), x_[0].end(), 0.0);
    vcycle(0);
    z = x_[0];
  }

 private:
  static std::vector<std::int32_t> build_children(const JunctionMesh& c,
                                                  const JunctionMesh& f) {
    std::vector<std::int32_t> kids(size_t(c.n_cells()) * 8, -1);
    const int nc = c.n_c();
    for (int i = -nc; i < nc; ++i)
      for (int j = -nc; j < nc; ++j)
        for (int k = -nc; k < nc; ++k) {
          const int idx = c.node_index(i, j, k);
          int t = 0;
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj)
              for (int dk = 0; dk < 2; ++dk)
                kids[size_t(idx) * 8 + size_t(t++)] =
                    f.node_index(2 * i + di, 2 * j + dj, 2 * k + dk);
        }
    for (int a = 0; a < 3; ++a) {
      const int na = c.cross_cells(a);
      for (int ja = c.n_c(); ja < c.n_R(); ++ja)
        for (int c1 = 0; c1 < na; ++c1)
          for (int c2 = 0; c2 < na; ++c2) {
            const int idx = c.outlet_index(a, ja, c1, c2);
            int t = 0;
            for (int dj = 0; dj < 2; ++dj)
              for (int d1 = 0; d1 < 2; ++d1)
                for (int d2 = 0; d2 < 2; ++d2)
                  kids[size_t(idx) * 8 + size_t(t++)] =
                      f.outlet_index(a, 2 * ja + dj, 2 * c1 + d1, 2 * c2 + d2);
          }
    }
    return kids;
  }

  void smooth(size_t l, int sweeps) {
    const double omega = 0.8;
    const int n = meshes_[l]->n_cells();
    for (int s = 0; s < sweeps; ++s) {
      apply_laplacian(*meshes_[l], x_[l], r_[l]);
      for (int cidx = 0; cidx < n; ++cidx)
        x_[l][size_t(cidx)] +=
            omega * (b_[l][size_t(cidx)] - r_[l][size_t(cidx)]) / diag_[l][size_t(cidx)];
    }
  }

  void coarse_solve(size_t l) {
    // plain Jacobi-preconditioned CG on the tiny coarsest level
    const JunctionMesh& m = *meshes_[l];
    const int n = m.n_cells();
    auto& x = x_[l];
    std::vector<double> b = b_[l];
    project_mean(b);
    std::fill(x.begin(), x.end(), 0.0);
    std::vector<double> r = b, z(size_t(n), 0.0), p(size_t(n), 0.0), Ap(size_t(n), 0.0);
    const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (bnorm == 0.0) return;
    for (int c = 0; c < n; ++c) z[size_t(c)] = r[size_t(c)] / diag_[l][size_t(c)];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    for (int it = 0; it < 2000; ++it) {
      apply_laplacian(m, p, Ap);
      const double alpha = rz / std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
      for (int c = 0; c < n; ++c) {
        x[size_t(c)] += alpha * p[size_t(c)];
        r[size_t(c)] -= alpha * Ap[size_t(c)];
      }
      const double rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
      if (rnorm <= 1e-10 * bnorm) break;
      for (int c = 0; c < n; ++c) z[size_t(c)] = r[size_t(c)] / diag_[l][size_t(c)];
      const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (int c = 0; c < n; ++c) p[size_t(c)] = z[size_t(c)] + beta * p[size_t(c)];
    }
    project_mean(x);
  }

  void vcycle(size_t l) {
    if (l + 1 == meshes_.size()) {
      coarse_solve(l);
      return;
    }
    smooth(l, 2);
    apply_laplacian(*meshes_[l], x_[l], r_[l]);
    const int nf = meshes_[l]->n_cells();
    for (int c = 0; c < nf; ++c) r_[l][size_t(c)] = b_[l][size_t(c)] - r_[l][size_t(c)];
    // restriction consistent with injection prolongation: R A_h P = 2 A_{2h},
    // so the coarse right-hand side is half the child average
    const auto& kids = children_[l + 1];
    const int ncr = meshes_[l + 1]->n_cells();
    for (int c = 0; c < ncr; ++c) {
      double acc = 0.0;
      for (int t = 0; t < 8; ++t) acc += r_[l][size_t(kids[size_t(c) * 8 + size_t(t)])];
      b_[l + 1][size_t(c)] = 0.0625 * acc;
    }
    std::fill(x_[l + 1].begin(), x_[l + 1].end(), 0.0);
    vcycle(l + 1);
    for (int c = 0; c < ncr; ++c) {
      const double e = x_[l + 1][size_t(c)];
      for (int t = 0; t < 8; ++t) x_[l][size_t(kids[size_t(c) * 8 + size_t(t)])] += e;
    }
    smooth(l, 2);
  }

  std::vector<const JunctionMesh*> meshes_;
  std::deque<JunctionMesh> coarse_;
  std::vector<std::vector<double>> diag_, x_, b_, r_;
  std::vector<std::vector<std::int32_t>> children_;
};

CgStats cg_solve(const JunctionMesh& m, std::vector<double>& x, std::vector<double> b,
                 double tol = 1e-8, int max_iter = 2000) {
  const int n = m.n_cells();
  project_mean(b);
  const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  CgStats stats;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return stats;
  }
  MgHierarchy mg(m);
  project_mean(x);
  std::vector<double> r(size_t(n), 0.0), z(size_t(n), 0.0), p(size_t(n), 0.0),
      Ap(size_t(n), 0.0);
  apply_laplacian(m, x, Ap);
  for (int c = 0; c < n; ++c) r[size_t(c)] = b[size_t(c)] - Ap[size_t(c)];
  project_mean(r);
  mg.apply(r, z);
  project_mean(z);
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (int it = 0; it < max_iter; ++it) {
    apply_laplacian(m, p, Ap);
    const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
    const double alpha = rz / pAp;
    for (int c = 0; c < n; ++c) {
      x[size_t(c)] += alpha * p[size_t(c)];
      r[size_t(c)] -= alpha * Ap[size_t(c)];
    }
    project_mean(r);
    const double rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    stats.iterations = it + 1;
    if (rnorm <= tol * bnorm) {
      project_mean(x);
      return stats;
    }
    mg.apply(r, z);
    project_mean(z);
    const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int c = 0; c < n; ++c) p[size_t(c)] = z[size_t(c)] + beta * p[size_t(c)];
  }
  throw solver_error("junction CG did not reach tolerance 1e-8");
}

}  // namespace

double NField::flux_residual() const {
  double num = rhs_integral, den = rhs_abs_integral;
  for (int a = 0; a < 3; ++a) {
    num += cap_flux[size_t(a)];
    den += std::abs(cap_flux[size_t(a)]);
  }
  return den == 0.0 ? 0.0 : std::abs(num) / den;
}

namespace {

struct SliceFit {
  double slope = 0.0, offset = 0.0;
};

std::vector<double> slice_means(const JunctionMesh& m, const std::vector<double>& u,
                                int outlet) {
  const int na = m.cross_cells(outlet);
  const int nax = m.axial_cells(outlet);
  std::vector<double> means(size_t(nax), 0.0);
  // outlet cells are contiguous: offset + ((ja - n_c) * na + c1) * na + c2
  int idx0 = -1;
  for (int c = 0; c < m.n_cells(); ++c)
    if (m.cell_box(c) == outlet) {
      idx0 = c;
      break;
    }
  for (int j = 0; j < nax; ++j) {
    double s = 0.0;
    for (int t = 0; t < na * na; ++t) s += u[size_t(idx0 + j * na * na + t)];
    means[size_t(j)] = s / double(na * na);
  }
  return means;
}

SliceFit ls_fit(const JunctionMesh& m, const std::vector<double>& u, int outlet,
                double window_lo, double window_hi) {
  const auto means = slice_means(m, u, outlet);
  const double d = m.delta();
  const double xi0 = m.node_half();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t j = 0; j < means.size(); ++j) {
    const double xi = xi0 + (double(j) + 0.5) * d;
    if (xi < window_lo || xi > window_hi) continue;
    sx += xi;
    sy += means[j];
    sxx += xi * xi;
    sxy += xi * means[j];
    ++cnt;
  }
  if (cnt < 2) throw solver_error("outlet fit window contains fewer than 2 slices");
  SliceFit f;
  const double det = cnt * sxx - sx * sx;
  f.slope = (cnt * sxy - sx * sy) / det;
  f.offset = (sy * sxx - sx * sxy) / det;
  return f;
}

double forcing_value(const JunctionMesh& m, const ForcingDescriptor& fd, int idx) {
  const int box = m.cell_box(idx);
  if (box < 0) {
    if (fd.mass_coefficient == 0.0) return 0.0;
    const auto x = m.cell_center(idx);
    return fd.mass_coefficient * fd.rho0(x[0], x[1], x[2]);
  }
  const double gj = fd.gradients[size_t(box)];
  if (gj == 0.0) return 0.0;
  const double xi = m.axial_coord(idx);
  const double lo = xi - 0.5 * m.delta(), hi = xi + 0.5 * m.delta();
  return gj * (fd.chi.commutator_primitive(hi) - fd.chi.commutator_primitive(lo)) /
         m.delta();
}

void fit_and_gauge(const JunctionMesh& m, NField& f) {
  for (int a = 0; a < 3; ++a) {
    const auto fit = ls_fit(m, f.values, a, m.R() - 2.0, m.R());
    f.slope[size_t(a)] = fit.slope;
    f.offset[size_t(a)] = fit.offset;
  }
  const double shift = f.offset[0];
  for (auto& v : f.values) v -= shift;
  for (int a = 0; a < 3; ++a) f.offset[size_t(a)] -= shift;
}

}  // namespace

NField solve_homogeneous(const JunctionMesh& m, int which) {
  if (which != 0 && which != 2 && which != 3)
    throw config_error("solve_homogeneous: which must be 2 or 3 (0 for the zero-flux variant)");
  NField f;
  f.values.assign(size_t(m.n_cells()), 0.0);
  std::array<double, 3> g{0, 0, 0};
  if (which != 0) {
    g[0] = -1.0 / m.area(0);
    g[size_t(which - 1)] = 1.0 / m.area(which - 1);
  }
  std::vector<double> b(size_t(m.n_cells()), 0.0);
  for (int a = 0; a < 3; ++a) {
    if (g[size_t(a)] == 0.0) continue;
    for (int c = 0; c < m.n_cells(); ++c)
      if (m.is_cap_cell(c, a)) b[size_t(c)] += g[size_t(a)] / m.delta();
    // linear ramp initial guess
    for (int c = 0; c < m.n_cells(); ++c)
      if (m.cell_box(c) == a)
        f.values[size_t(c)] = g[size_t(a)] * (m.axial_coord(c) - m.node_half());
  }
  f.cap_flux = {g[0] * m.area(0), g[1] * m.area(1), g[2] * m.area(2)};
  f.rhs_integral = 0.0;
  f.cg_iterations = cg_solve(m, f.values, b).iterations;
  fit_and_gauge(m, f);
  return f;
}

std::pair<double, double> delta_constant(const JunctionMesh& m, const NField& n2,
                                         const NField& n3, const ForcingDescriptor& rhs) {
  if (rhs.chi.hi > m.R() - 1.0)
    throw solver_error("cut-off support extends beyond the junction mesh");
  double d2 = 0.0, d3 = 0.0;
  const double vol = m.cell_volume();
  for (int c = 0; c < m.n_cells(); ++c) {
    const double v = forcing_value(m, rhs, c);
    if (v == 0.0) continue;
    d2 += n2.values[size_t(c)] * v * vol;
    d3 += n3.values[size_t(c)] * v * vol;
  }
  return {d2, d3};
}

InnerSolveResult solve_inner_inhomogeneous(const JunctionMesh& m,
                                           const ForcingDescriptor& rhs,
                                           const std::array<double, 3>& cap_flux_density) {
  const double vol = m.cell_volume();
  std::vector<double> b(size_t(m.n_cells()), 0.0);
  double rhs_int = 0.0, rhs_abs = 0.0;
  for (int c = 0; c < m.n_cells(); ++c) {
    const double v = forcing_value(m, rhs, c);
    b[size_t(c)] = v;
    rhs_int += v * vol;
    rhs_abs += std::abs(v) * vol;
  }
  double total = rhs_int, scale = rhs_abs;
  for (int a = 0; a < 3; ++a) {
    const double flux = cap_flux_density[size_t(a)] * m.area(a);
    total += flux;
    scale += std::abs(flux);
  }
  if (scale > 0.0 && std::abs(total) / scale > 1e-6)
    throw solver_error("inner problem solvability condition violated: "
                       "int rhs + sum cap fluxes = " + fmt17(total));
  for (int a = 0; a < 3; ++a) {
    if (cap_flux_density[size_t(a)] == 0.0) continue;
    for (int c = 0; c < m.n_cells(); ++c)
      if (m.is_cap_cell(c, a)) b[size_t(c)] += cap_flux_density[size_t(a)] / m.delta();
  }

  InnerSolveResult out;
  out.field.values.assign(size_t(m.n_cells()), 0.0);
  out.field.rhs_integral = rhs_int;
  out.field.rhs_abs_integral = rhs_abs;
  for (int a = 0; a < 3; ++a)
    out.field.cap_flux[size_t(a)] = cap_flux_density[size_t(a)] * m.area(a);
  out.field.cg_iterations = cg_solve(m, out.field.values, b).iterations;
  fit_and_gauge(m, out.field);

  for (int c = 0; c < m.node_cells(); ++c) {
    const auto x = m.cell_center(c);
    out.mass_integral += rhs.rho0(x[0], x[1], x[2]) * out.field.values[size_t(c)] * vol;
  }

  // meshed tail integrals of (N - fitted asymptote), plus an exponential-tail
  // estimate from the decay of the slice means
  for (int a = 0; a < 3; ++a) {
    const auto means = slice_means(m, out.field.values, a);
    double acc = 0.0;
    for (size_t j = 0; j < means.size(); ++j) {
      const double xi = m.node_half() + (double(j) + 0.5) * m.delta();
      acc += (means[j] - out.field.offset[size_t(a)] - out.field.slope[size_t(a)] * xi) *
             m.area(a) * m.delta();
    }
    // decay fit over the last stretch before the cap
    double gamma = 0.0, amp = 0.0;
    {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int cnt = 0;
      for (size_t j = 0; j < means.size(); ++j) {
        const double xi = m.node_half() + (double(j) + 0.5) * m.delta();
        if (xi < m.R() - 2.5 || xi > m.R() - 0.5) continue;
        const double r = means[j] - out.field.offset[size_t(a)] -
                         out.field.slope[size_t(a)] * xi;
        if (std::abs(r) < 1e-14) continue;
        const double y = std::log(std::abs(r));
        sx += xi;
        sy += y;
        sxx += xi * xi;
        sxy += xi * y;
        ++cnt;
      }
      if (cnt >= 3) {
        const double det = cnt * sxx - sx * sx;
        gamma = -(cnt * sxy - sx * sy) / det;
        amp = std::exp((sy * sxx - sx * sxy) / det);
      }
    }
    if (gamma > 0.1) acc += (amp / gamma) * std::exp(-gamma * m.R()) * m.area(a);
    out.tail[size_t(a)] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// First-order constants

JunctionConstants compute_node_constants(const StarGraph& g, const AlphaRegime& r, int n,
                                         double delta, double R) {
  if (!g.node.rho0)
    throw config_error("junction compute mode requires node.rho0 in the config");
  if (!g.constant_radius())
    throw config_error("junction compute mode requires constant cross-sections");

  JunctionConstants out;
  out.delta = delta;
  out.R = R;
  const JunctionMesh m = JunctionMesh::build(g, delta, R);
  out.mesh_mass = m.node_mass(*g.node.rho0);

  // base eigenpair: the mass-modified limit problem for alpha = 1, the plain
  // one otherwise; beta uses the mesh-realized mass so that the discrete
  // solvability of the inner problem is exact
  StarGraph gm = g;
  gm.node.mass_integral = out.mesh_mass;
  gm.node.node_volume = 8.0 * std::pow(m.node_half(), 3);
  gm.node.c0 = std::min(gm.node.c0, out.mesh_mass / gm.node.node_volume);
  gm.node.c1 = std::max(gm.node.c1, out.mesh_mass / gm.node.node_volume);
  const AlphaRegime base_regime = r.is_one() ? AlphaRegime::one() : AlphaRegime::zero();
  const auto pairs = solve_limit_spectrum(gm, base_regime, n);
  const EigenPair& base = pairs[size_t(n - 1)];

  const NField n2 = solve_homogeneous(m, 2);
  const NField n3 = solve_homogeneous(m, 3);
  out.fitted_slopes_n2 = n2.slope;
  out.fitted_slopes_n3 = n3.slope;
  out.flux_residual_n2 = n2.flux_residual();
  out.flux_residual_n3 = n3.flux_residual();

  ForcingDescriptor fd;
  fd.chi = CutoffProfile{CutoffProfile::Kind::Quintic, 1.0 + g.node.ell0, 2.0 + g.node.ell0};
  for (int i = 0; i < 3; ++i) fd.gradients[size_t(i)] = base.w[i].deriv0;
  fd.rho0 = *g.node.rho0;
  fd.mass_coefficient = r.is_one() ? base.lambda * base.vertex_value : 0.0;

  auto [d2, d3] = delta_constant(m, n2, n3, fd);
  out.delta1_2 = d2;
  out.delta1_3 = d3;

  ForcingDescriptor fd_alt = fd;
  fd_alt.chi.kind = CutoffProfile::Kind::Septic;
  auto [a2, a3] = delta_constant(m, n2, n3, fd_alt);
  out.delta1_2_alt = a2;
  out.delta1_3_alt = a3;

  const auto inner = solve_inner_inhomogeneous(m, fd, {0, 0, 0});
  out.eta1 = inner.mass_integral;
  out.tail1 = inner.tail;
  out.delta1_2_field = inner.field.offset[1];
  out.delta1_3_field = inner.field.offset[2];
  out.flux_residual_n1 = inner.field.flux_residual();
  return out;
}

std::string junction_constants_json(const JunctionConstants& c) {
  nlohmann::ordered_json j;
  j["delta_table"] = {{"(1,2)", c.delta1_2}, {"(1,3)", c.delta1_3}};
  j["mass_table"] = {{"1", c.eta1}};
  j["tail_table"] = {{"(1,1)", c.tail1[0]}, {"(1,2)", c.tail1[1]}, {"(1,3)", c.tail1[2]}};
  nlohmann::ordered_json prov;
  prov["source"] = "computed";
  prov["delta"] = c.delta;
  prov["R"] = c.R;
  prov["mesh_mass"] = c.mesh_mass;
  prov["delta1_alt_cutoff"] = {c.delta1_2_alt, c.delta1_3_alt};
  prov["delta1_field_offsets"] = {c.delta1_2_field, c.delta1_3_field};
  prov["fitted_slopes_n2"] = {c.fitted_slopes_n2[0], c.fitted_slopes_n2[1],
                              c.fitted_slopes_n2[2]};
  prov["fitted_slopes_n3"] = {c.fitted_slopes_n3[0], c.fitted_slopes_n3[1],
                              c.fitted_slopes_n3[2]};
  prov["flux_residuals"] = {c.flux_residual_n2, c.flux_residual_n3, c.flux_residual_n1};
  j["provenance"] = prov;
  return j.dump(2);
}

}  // namespace stargraph
