#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stargraph/expansion.hpp"
#include "stargraph/model.hpp"

namespace stargraph {

// Smooth cut-off rising from 0 at xi = lo to 1 at xi = hi. Quintic has zero
// first and second derivatives at both ends; septic additionally zero third
// derivatives and serves as the independent profile for the
// chi-independence check of delta_1.
struct CutoffProfile {
  enum class Kind { Quintic, Septic };
  Kind kind = Kind::Quintic;
  double lo = 0.0, hi = 1.0;

  double chi(double xi) const;
  double chi_p(double xi) const;
  double chi_pp(double xi) const;
  // exact antiderivative of (xi chi'' + 2 chi'): xi chi' + chi
  double commutator_primitive(double xi) const;
};

// Model junction domain: cube node plus three axis-aligned square-section
// outlets of area matched to pi h_i(0)^2, cell-centered grid of spacing delta.
class JunctionMesh {
 public:
  static JunctionMesh build(const StarGraph& g, double delta, double R);
  // same domain at twice the spacing; requires all block counts even
  static bool coarsenable(const JunctionMesh& m);
  static JunctionMesh coarsen(const JunctionMesh& m);

  double delta() const { return delta_; }
  double R() const { return R_; }
  double ell0() const { return ell0_; }
  double node_half() const { return node_half_; }
  int n_cells() const { return n_cells_; }
  int node_cells() const { return node_count_; }
  double area(int outlet) const { return side_[size_t(outlet)] * side_[size_t(outlet)]; }
  double target_area(int outlet) const { return target_area_[size_t(outlet)]; }

  // cell geometry: box = -1 for the node, else outlet axis 0..2
  int cell_box(int idx) const;
  std::array<double, 3> cell_center(int idx) const;
  double axial_coord(int idx) const;  // xi along the outlet axis (node: 0)

  const std::vector<std::int32_t>& neighbors() const { return nbr_; }
  bool is_cap_cell(int idx, int outlet) const;

  // mesh-realized integral of rho0 over the node cells
  double node_mass(const Rho0Expr& rho) const;

  int axial_cells(int /*outlet*/) const { return n_R_ - n_c_; }
  int cross_cells(int outlet) const { return cross_[size_t(outlet)]; }
  double cell_volume() const { return delta_ * delta_ * delta_; }
  int n_c() const { return n_c_; }
  int n_R() const { return n_R_; }

  // flat index arithmetic (used by the multigrid transfer operators)
  int node_index(int i, int j, int k) const;
  int outlet_index(int axis, int ja, int c1, int c2) const;

 private:
  double delta_ = 0.1, R_ = 6.0, ell0_ = 0.2, node_half_ = 0.0;
  int n_c_ = 0, n_R_ = 0;
  std::array<int, 3> cross_{};
  std::array<double, 3> side_{};
  std::array<double, 3> target_area_{};
  int node_count_ = 0, n_cells_ = 0;
  std::array<int, 3> outlet_offset_{};
  std::vector<std::int32_t> nbr_;

  void build_neighbors();
  void finalize_counts();
};

// Forcing for the inner problems: the cut-off commutator
// sum_j grad_j (xi_j chi'' + 2 chi') on the outlets (integrated exactly in
// the axial direction) plus a node term coeff * rho0(xi).
struct ForcingDescriptor {
  std::array<double, 3> gradients{0, 0, 0};
  CutoffProfile chi;
  double mass_coefficient = 0.0;
  Rho0Expr rho0;
};

struct NField {
  std::vector<double> values;
  std::array<double, 3> slope{0, 0, 0};   // least-squares fit on [R-2, R]
  std::array<double, 3> offset{0, 0, 0};
  std::array<double, 3> cap_flux{0, 0, 0};  // prescribed total cap fluxes
  double rhs_integral = 0.0;                // discrete integral of the volume rhs
  double rhs_abs_integral = 0.0;            // integral of |rhs|, the residual scale
  int cg_iterations = 0;
  double flux_residual() const;  // |sum cap flux + int rhs| / (sum|flux| + |int rhs|)
};

// Homogeneous harmonic solutions N2 / N3 with prescribed-slope caps
// (-1/area on outlet 1, +1/area on outlet `which`), gauge-fixed so that the
// fitted offset on outlet 1 vanishes. which = 0 gives the zero-flux variant.
NField solve_homogeneous(const JunctionMesh& m, int which);

// Green-formula pairing delta^(i) = int N_i * rhs
std::pair<double, double> delta_constant(const JunctionMesh& m, const NField& n2,
                                         const NField& n3, const ForcingDescriptor& rhs);

struct InnerSolveResult {
  NField field;                        // gauge-fixed: outlet-1 offset = 0
  double mass_integral = 0.0;          // int_node rho0 * N
  std::array<double, 3> tail{0, 0, 0};  // int_outlet (N - fitted asymptote), tail-extrapolated
};

// Inhomogeneous inner problem with prescribed cap flux densities; rejects
// data violating the solvability condition int rhs + sum cap fluxes = 0.
InnerSolveResult solve_inner_inhomogeneous(const JunctionMesh& m,
                                           const ForcingDescriptor& rhs,
                                           const std::array<double, 3>& cap_flux_density);

// ---------------------------------------------------------------------------
// First-order node constants for a given base eigenpair, closing the loop
// with the config table: delta_1^(2,3), eta_1 = int rho0 Nhat_1 and the tail
// integrals, plus the same constants re-paired with the septic profile.

struct JunctionConstants {
  double delta1_2 = 0.0, delta1_3 = 0.0;
  double delta1_2_alt = 0.0, delta1_3_alt = 0.0;  // septic cut-off
  double delta1_2_field = 0.0, delta1_3_field = 0.0;  // offsets of the N1 field
  double eta1 = 0.0;
  std::array<double, 3> tail1{0, 0, 0};
  double mesh_mass = 0.0;  // realized int rho0 over the node
  double delta = 0.0, R = 0.0;
  std::array<double, 3> fitted_slopes_n2{0, 0, 0};
  std::array<double, 3> fitted_slopes_n3{0, 0, 0};
  double flux_residual_n2 = 0.0, flux_residual_n3 = 0.0, flux_residual_n1 = 0.0;
};

JunctionConstants compute_node_constants(const StarGraph& g, const AlphaRegime& r, int n,
                                         double delta, double R);

// NodeConstants table in the JSON schema the config ingests.
std::string junction_constants_json(const JunctionConstants& c);

class JunctionProvider final : public NodeConstantsProvider {
 public:
  explicit JunctionProvider(JunctionConstants c) : c_(c) {}
  std::optional<double> delta(int k, int p, int i) const override {
    if (k == 1 && p == 0 && i == 2) return c_.delta1_2;
    if (k == 1 && p == 0 && i == 3) return c_.delta1_3;
    return std::nullopt;
  }
  std::optional<double> eta(int k, int p) const override {
    if (k == 1 && p == 0) return c_.eta1;
    return std::nullopt;
  }
  std::optional<double> tail(int k, int p, int i) const override {
    if (k == 1 && p == 0 && i >= 1 && i <= 3) return c_.tail1[size_t(i - 1)];
    return std::nullopt;
  }

 private:
  JunctionConstants c_;
};

}  // namespace stargraph
