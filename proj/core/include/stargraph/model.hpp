#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stargraph/errors.hpp"

namespace stargraph {

constexpr int kNumEdges = 3;

// ---------------------------------------------------------------------------
// Radius profiles

struct ConstantRadius {
  double h = 1.0;
};

// Uniform samples of h(x) on [0, ell]; the profile must be flat (constant)
// on margins covering at least 5% of the edge length at both ends.
struct SampledRadius {
  std::vector<double> samples;
};

using RadiusProfile = std::variant<ConstantRadius, SampledRadius>;

struct EdgeSpec {
  double length = 1.0;
  RadiusProfile radius = ConstantRadius{};

  bool is_constant() const { return std::holds_alternative<ConstantRadius>(radius); }
  double h0() const;                 // h at x = 0
  double h_at(double x) const;       // piecewise-linear for sampled profiles
};

// ---------------------------------------------------------------------------
// Density expression for the node: constant | gaussian{center,width,amplitude}

struct Rho0Expr {
  enum class Kind { Constant, Gaussian };
  Kind kind = Kind::Constant;
  double value = 1.0;                       // Constant
  std::array<double, 3> center{0, 0, 0};    // Gaussian
  double width = 1.0;
  double amplitude = 1.0;

  double operator()(double x1, double x2, double x3) const;
};

struct NodeSpec {
  double ell0 = 0.2;            // node half-extent parameter, in (0, 1/3)
  double mass_integral = 1.0;   // m = integral of rho0 over the node
  double node_volume = 1.0;
  double c0 = 1.0, c1 = 1.0;    // density bounds 0 < c0 <= rho0 <= c1
  std::optional<Rho0Expr> rho0;
};

// ---------------------------------------------------------------------------
// Alpha regime

enum class RegimeKind { Zero, Irrational, Rational, One };

struct AlphaRegime {
  RegimeKind kind = RegimeKind::Zero;
  double alpha = 0.0;   // 0, the irrational value, m0/n0, or 1
  int m0 = 0, n0 = 1;   // Rational only, coprime, m0 < n0

  static AlphaRegime zero() { return {RegimeKind::Zero, 0.0, 0, 1}; }
  static AlphaRegime one() { return {RegimeKind::One, 1.0, 0, 1}; }
  static AlphaRegime irrational(double a);   // guards against near-rational values
  static AlphaRegime rational(int m0, int n0);

  bool is_one() const { return kind == RegimeKind::One; }
  bool fractional() const { return kind == RegimeKind::Irrational || kind == RegimeKind::Rational; }
};

// Rejects alpha within 1e-9 of p/q for q <= 64: the rational lattice collapse
// changes the data layout, so silent misclassification must be an error.
bool near_small_rational(double alpha, int max_denominator = 64, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Node constants table (config-sourced provider data).
//
// delta:  (k, p, i) -> jump constant at exponent k - p*alpha on edge i (i = 2, 3)
// eta:    (k, p)    -> gauge-fixed node mass integral of the inner corrector,
//                      i.e. the integral of rho0 * Nhat at that order
// tail:   (k, p, i) -> outlet tail integral of (N - G) at that order
//
// Integer-exponent entries use p = 0 and are written "(k,i)" / "k" in JSON.

struct NodeConstantsTable {
  std::map<std::array<int, 3>, double> delta;   // {k, p, i}
  std::map<std::array<int, 2>, double> eta;     // {k, p}
  std::map<std::array<int, 3>, double> tail;    // {k, p, i}

  std::optional<double> find_delta(int k, int p, int i) const;
  std::optional<double> find_eta(int k, int p) const;
  std::optional<double> find_tail(int k, int p, int i) const;
  bool empty() const { return delta.empty() && eta.empty() && tail.empty(); }
};

// ---------------------------------------------------------------------------
// Star graph

struct StarGraph {
  std::array<EdgeSpec, kNumEdges> edges;
  NodeSpec node;
  NodeConstantsTable constants;   // optional per-order table from config

  bool constant_radius() const;
  std::array<double, 3> h0_squared() const;
  std::array<double, 3> lengths() const;
};

// Checks every model invariant; throws config_error with a descriptive message.
void validate(const StarGraph& g);
void validate(const AlphaRegime& r);

// ---------------------------------------------------------------------------
// Edge functions and eigenpairs

struct EdgeFunction {
  // Analytic: x -> amplitude * sin(omega * (ell - x)).
  struct Analytic {
    double amplitude = 0.0;
    double omega = 1.0;
  };
  // Uniform samples on [0, ell], value at ell must vanish.
  struct Grid {
    std::vector<double> values;
  };

  double ell = 1.0;
  std::variant<Analytic, Grid> rep = Analytic{};

  // Cached boundary data. For solver-produced grids these are the exact
  // values from the closed-form representation, not stencil estimates.
  double value0 = 0.0;
  double deriv0 = 0.0;
  double derivL = 0.0;

  static EdgeFunction analytic(double amplitude, double omega, double ell);
  static EdgeFunction grid(std::vector<double> values, double ell);
  static EdgeFunction grid_with_boundary(std::vector<double> values, double ell,
                                         double value0, double deriv0, double derivL);

  double eval(double x) const;
  bool is_analytic() const { return std::holds_alternative<Analytic>(rep); }
};

struct VertexTrace {
  double value0;
  double deriv0;
};

// Analytic: closed form. Grid: one-sided 4th-order finite differences
// (needs at least 5 samples).
VertexTrace vertex_trace(const EdgeFunction& f);

struct EigenPair {
  double lambda = 0.0;
  int index = 0;   // 1-based position in the spectrum
  std::array<EdgeFunction, kNumEdges> w;
  AlphaRegime regime;
  bool degenerate = false;   // relative gap below 1e-6, or true multiplicity > 1
  bool pole_type = false;    // vertex value is zero
  double vertex_value = 0.0;
};

// ---------------------------------------------------------------------------
// Config I/O

struct Config {
  StarGraph graph;
  AlphaRegime regime;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);
std::string serialize_config(const Config& c);   // round-trips through parse_config

}  // namespace stargraph
