#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stargraph/corrector.hpp"
#include "stargraph/model.hpp"

namespace stargraph {

// ---------------------------------------------------------------------------
// Two-parameter exponent lattice {k - p*alpha} restricted to [0, M].
// For rational alpha = m0/n0 it collapses to {q/n0}; for alpha in {0, 1} to
// the integers.

struct LatticeEntry {
  double e;   // exponent value
  int k, p;   // provenance: smallest (k, p) with e = k - p*alpha
};

struct ExponentLattice {
  AlphaRegime regime;
  int order = 0;
  std::vector<LatticeEntry> entries;  // strictly increasing
};

ExponentLattice build_lattice(const AlphaRegime& r, int M);

// ---------------------------------------------------------------------------
// Node constants: the bridge between the 3D inner problems and the 1D
// recursion. delta are the vertex jumps, eta the gauge-fixed node mass
// integrals of the inner correctors, tail the outlet integrals of (N - G).

class NodeConstantsProvider {
 public:
  virtual ~NodeConstantsProvider() = default;
  virtual std::optional<double> delta(int k, int p, int i) const = 0;  // i = 2, 3
  virtual std::optional<double> eta(int k, int p) const = 0;
  virtual std::optional<double> tail(int k, int p, int i) const = 0;
};

class TableConstants final : public NodeConstantsProvider {
 public:
  explicit TableConstants(NodeConstantsTable t) : table_(std::move(t)) {}
  std::optional<double> delta(int k, int p, int i) const override {
    return table_.find_delta(k, p, i);
  }
  std::optional<double> eta(int k, int p) const override { return table_.find_eta(k, p); }
  std::optional<double> tail(int k, int p, int i) const override {
    return table_.find_tail(k, p, i);
  }

 private:
  NodeConstantsTable table_;
};

// ---------------------------------------------------------------------------
// Asymptotic series

struct SeriesCoefficient {
  LatticeEntry entry;
  double mu = 0.0;
  std::array<EdgeFunction, 3> w;
  std::array<double, 3> vertex_values{0, 0, 0};
  double delta2 = 0.0, delta3 = 0.0, dstar = 0.0;  // data fed to the corrector
  CorrectorDiagnostics diagnostics;
  bool data_nonzero = false;  // the corrector data at this order was nonzero
};

struct AsymptoticSeries {
  ExponentLattice lattice;
  int base_index = 1;
  std::vector<SeriesCoefficient> coefficients;  // aligned with lattice.entries
  bool truncated = false;
  double truncated_at = 0.0;             // first exponent that could not be built
  std::string truncation_reason;
  bool exponential_tail_neglected = false;

  bool complete() const { return !truncated; }
  const SeriesCoefficient* at_exponent(double e, double tol = 1e-12) const;
  std::string to_json() const;
};

// Partial sum over exponents <= up_to, in increasing-exponent order.
double evaluate_series(const AsymptoticSeries& s, double eps, double up_to);

// ---------------------------------------------------------------------------
// Regime drivers. Constant cross-sections run the exact analytic recursion;
// SampledRadius graphs are limited to order M <= 2 for alpha = 0 via the
// discrete corrector. A null provider means "use the config table".

AsymptoticSeries expand_alpha0(const StarGraph& g, int n, int M,
                               const NodeConstantsProvider* provider = nullptr);
AsymptoticSeries expand_fractional(const StarGraph& g, const AlphaRegime& r, int n, int M,
                                   const NodeConstantsProvider* provider = nullptr);
AsymptoticSeries expand_alpha1(const StarGraph& g, int n, int M,
                               const NodeConstantsProvider* provider = nullptr);
AsymptoticSeries expand(const StarGraph& g, const AlphaRegime& r, int n, int M,
                        const NodeConstantsProvider* provider = nullptr);

}  // namespace stargraph
