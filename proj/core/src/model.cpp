#include "stargraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stargraph {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// EdgeSpec

double EdgeSpec::h0() const {
  if (auto* c = std::get_if<ConstantRadius>(&radius)) return c->h;
  return std::get<SampledRadius>(radius).samples.front();
}

double EdgeSpec::h_at(double x) const {
  if (auto* c = std::get_if<ConstantRadius>(&radius)) return c->h;
  const auto& s = std::get<SampledRadius>(radius).samples;
  const double t = std::clamp(x / length, 0.0, 1.0) * double(s.size() - 1);
  const auto j = std::min(size_t(t), s.size() - 2);
  const double f = t - double(j);
  return s[j] * (1.0 - f) + s[j + 1] * f;
}

double Rho0Expr::operator()(double x1, double x2, double x3) const {
  if (kind == Kind::Constant) return value;
  const double dx1 = x1 - center[0], dx2 = x2 - center[1], dx3 = x3 - center[2];
  return amplitude * std::exp(-(dx1 * dx1 + dx2 * dx2 + dx3 * dx3) / (2.0 * width * width));
}

// ---------------------------------------------------------------------------
// AlphaRegime

bool near_small_rational(double alpha, int max_denominator, double tol) {
  for (int q = 1; q <= max_denominator; ++q) {
    const double p = std::round(alpha * q);
    if (std::abs(alpha - p / q) < tol) return true;
  }
  return false;
}

AlphaRegime AlphaRegime::irrational(double a) {
  if (!(a > 0.0 && a < 1.0))
    throw config_error("irrational alpha must lie strictly inside (0,1)");
  if (near_small_rational(a))
    throw config_error("alpha is within 1e-9 of a rational with denominator <= 64; "
                       "declare it rational instead");
  return {RegimeKind::Irrational, a, 0, 1};
}

AlphaRegime AlphaRegime::rational(int m0, int n0) {
  if (n0 <= 0 || m0 <= 0 || m0 >= n0)
    throw config_error("rational alpha requires 0 < m0 < n0");
  if (std::gcd(m0, n0) != 1) throw config_error("not coprime: gcd(m0,n0) > 1");
  return {RegimeKind::Rational, double(m0) / double(n0), m0, n0};
}

// ---------------------------------------------------------------------------
// NodeConstantsTable

std::optional<double> NodeConstantsTable::find_delta(int k, int p, int i) const {
  auto it = delta.find({k, p, i});
  if (it == delta.end()) return std::nullopt;
  return it->second;
}
std::optional<double> NodeConstantsTable::find_eta(int k, int p) const {
  auto it = eta.find({k, p});
  if (it == eta.end()) return std::nullopt;
  return it->second;
}
std::optional<double> NodeConstantsTable::find_tail(int k, int p, int i) const {
  auto it = tail.find({k, p, i});
  if (it == tail.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// StarGraph

bool StarGraph::constant_radius() const {
  return edges[0].is_constant() && edges[1].is_constant() && edges[2].is_constant();
}

std::array<double, 3> StarGraph::h0_squared() const {
  std::array<double, 3> h2;
  for (int i = 0; i < 3; ++i) h2[i] = edges[i].h0() * edges[i].h0();
  return h2;
}

std::array<double, 3> StarGraph::lengths() const {
  return {edges[0].length, edges[1].length, edges[2].length};
}

void validate(const AlphaRegime& r) {
  switch (r.kind) {
    case RegimeKind::Zero:
      if (r.alpha != 0.0) throw config_error("regime zero requires alpha = 0");
      break;
    case RegimeKind::One:
      if (r.alpha != 1.0) throw config_error("regime one requires alpha = 1");
      break;
    case RegimeKind::Irrational:
      AlphaRegime::irrational(r.alpha);
      break;
    case RegimeKind::Rational:
      AlphaRegime::rational(r.m0, r.n0);
      break;
  }
}

void validate(const StarGraph& g) {
  for (int i = 0; i < kNumEdges; ++i) {
    const auto& e = g.edges[i];
    if (!(e.length >= 1.0))
      throw config_error("edge length must satisfy ell >= 1 (edge " + std::to_string(i + 1) + ")");
    if (auto* c = std::get_if<ConstantRadius>(&e.radius)) {
      if (!(c->h > 0.0)) throw config_error("radius must be strictly positive");
    } else {
      const auto& s = std::get<SampledRadius>(e.radius).samples;
      if (s.size() < 2) throw config_error("sampled radius needs at least 2 samples");
      for (double v : s)
        if (!(v > 0.0)) throw config_error("radius must be strictly positive");
      // flat margins: at least 5% of the edge at each end
      const size_t margin = size_t(std::ceil(0.05 * double(s.size() - 1)));
      for (size_t j = 0; j <= margin; ++j) {
        if (s[j] != s[0] || s[s.size() - 1 - j] != s.back())
          throw config_error("sampled radius must be flat on 5% margins at both ends");
      }
    }
  }
  const auto& n = g.node;
  if (!(n.ell0 > 0.0 && n.ell0 < 1.0 / 3.0)) throw config_error("ell0 out of range (0, 1/3)");
  if (!(n.mass_integral > 0.0)) throw config_error("mass_integral must be positive");
  if (!(n.node_volume > 0.0)) throw config_error("node_volume must be positive");
  if (!(n.c0 > 0.0 && n.c0 <= n.c1)) throw config_error("density bounds need 0 < c0 <= c1");
  const double mean = n.mass_integral / n.node_volume;
  const double slack = 1e-12 * std::max(1.0, std::abs(mean));
  if (mean < n.c0 - slack || mean > n.c1 + slack)
    throw config_error("mass_integral / node_volume violates density bounds");
}

// ---------------------------------------------------------------------------
// EdgeFunction

EdgeFunction EdgeFunction::analytic(double amplitude, double omega, double ell) {
  EdgeFunction f;
  f.ell = ell;
  f.rep = Analytic{amplitude, omega};
  f.value0 = amplitude * std::sin(omega * ell);
  f.deriv0 = -amplitude * omega * std::cos(omega * ell);
  f.derivL = -amplitude * omega;
  return f;
}

namespace {
// one-sided 4th-order first derivative at the first sample
double stencil_deriv(const std::vector<double>& v, double h) {
  return (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
}
}  // namespace

EdgeFunction EdgeFunction::grid(std::vector<double> values, double ell) {
  if (values.size() < 5) throw config_error("grid edge function needs at least 5 samples");
  double scale = 1.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (std::abs(values.back()) > 1e-6 * scale)
    throw config_error("grid edge function must vanish at the far end");
  EdgeFunction f;
  f.ell = ell;
  const double h = ell / double(values.size() - 1);
  f.value0 = values.front();
  f.deriv0 = stencil_deriv(values, h);
  std::vector<double> rev(values.rbegin(), values.rend());
  f.derivL = -stencil_deriv(rev, h);
  f.rep = Grid{std::move(values)};
  return f;
}

EdgeFunction EdgeFunction::grid_with_boundary(std::vector<double> values, double ell,
                                              double value0, double deriv0, double derivL) {
  if (values.size() < 5) throw config_error("grid edge function needs at least 5 samples");
  EdgeFunction f;
  f.ell = ell;
  f.rep = Grid{std::move(values)};
  f.value0 = value0;
  f.deriv0 = deriv0;
  f.derivL = derivL;
  return f;
}

double EdgeFunction::eval(double x) const {
  if (auto* a = std::get_if<Analytic>(&rep))
    return a->amplitude * std::sin(a->omega * (ell - x));
  const auto& v = std::get<Grid>(rep).values;
  const double t = std::clamp(x / ell, 0.0, 1.0) * double(v.size() - 1);
  const auto j = std::min(size_t(t), v.size() - 2);
  const double f = t - double(j);
  return v[j] * (1.0 - f) + v[j + 1] * f;
}

VertexTrace vertex_trace(const EdgeFunction& f) {
  if (auto* a = std::get_if<EdgeFunction::Analytic>(&f.rep)) {
    return {a->amplitude * std::sin(a->omega * f.ell),
            -a->amplitude * a->omega * std::cos(a->omega * f.ell)};
  }
  const auto& v = std::get<EdgeFunction::Grid>(f.rep).values;
  if (v.size() < 5) throw solver_error("vertex_trace: grid has fewer than 5 samples");
  const double h = f.ell / double(v.size() - 1);
  return {v[0], stencil_deriv(v, h)};
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

RadiusProfile parse_radius(const json& j) {
  if (j.contains("const")) return ConstantRadius{j.at("const").get<double>()};
  if (j.contains("samples")) return SampledRadius{j.at("samples").get<std::vector<double>>()};
  throw config_error("radius must be {\"const\": h} or {\"samples\": [...]}");
}

Rho0Expr parse_rho0(const json& j) {
  Rho0Expr e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    e.kind = Rho0Expr::Kind::Constant;
    e.value = j.at("value").get<double>();
  } else if (kind == "gaussian") {
    e.kind = Rho0Expr::Kind::Gaussian;
    auto c = j.at("center").get<std::vector<double>>();
    if (c.size() != 3) throw config_error("rho0 gaussian center must have 3 entries");
    e.center = {c[0], c[1], c[2]};
    e.width = j.at("width").get<double>();
    e.amplitude = j.at("amplitude").get<double>();
  } else {
    throw config_error("rho0 kind must be 'constant' or 'gaussian'");
  }
  return e;
}

// keys: "(k,i)" or "(k,p,i)" for delta/tail; "k" or "(k,p)" for eta
std::vector<int> parse_key(const std::string& key) {
  std::vector<int> out;
  std::string t;
  for (char ch : key) {
    if (ch == '(' || ch == ')' || ch == ' ') continue;
    if (ch == ',') {
      out.push_back(std::stoi(t));
      t.clear();
    } else {
      t += ch;
    }
  }
  if (!t.empty()) out.push_back(std::stoi(t));
  return out;
}

NodeConstantsTable parse_constants(const json& node) {
  NodeConstantsTable t;
  if (node.contains("delta_table")) {
    for (auto& [key, val] : node.at("delta_table").items()) {
      auto v = parse_key(key);
      if (v.size() == 2)
        t.delta[{v[0], 0, v[1]}] = val.get<double>();
      else if (v.size() == 3)
        t.delta[{v[0], v[1], v[2]}] = val.get<double>();
      else
        throw config_error("delta_table key must be (k,i) or (k,p,i): " + key);
    }
  }
  if (node.contains("mass_table")) {
    for (auto& [key, val] : node.at("mass_table").items()) {
      auto v = parse_key(key);
      if (v.size() == 1)
        t.eta[{v[0], 0}] = val.get<double>();
      else if (v.size() == 2)
        t.eta[{v[0], v[1]}] = val.get<double>();
      else
        throw config_error("mass_table key must be k or (k,p): " + key);
    }
  }
  if (node.contains("tail_table")) {
    for (auto& [key, val] : node.at("tail_table").items()) {
      auto v = parse_key(key);
      if (v.size() == 2)
        t.tail[{v[0], 0, v[1]}] = val.get<double>();
      else if (v.size() == 3)
        t.tail[{v[0], v[1], v[2]}] = val.get<double>();
      else
        throw config_error("tail_table key must be (k,i) or (k,p,i): " + key);
    }
  }
  return t;
}

}  // namespace

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    Config c;
    const auto& edges = j.at("edges");
    if (!edges.is_array() || edges.size() != 3)
      throw config_error("config needs exactly 3 edges");
    for (int i = 0; i < 3; ++i) {
      c.graph.edges[i].length = edges[i].at("length").get<double>();
      c.graph.edges[i].radius = parse_radius(edges[i].at("radius"));
    }
    const auto& node = j.at("node");
    c.graph.node.ell0 = node.at("ell0").get<double>();
    c.graph.node.mass_integral = node.at("mass_integral").get<double>();
    c.graph.node.node_volume = node.at("node_volume").get<double>();
    if (node.contains("density_bounds")) {
      auto b = node.at("density_bounds").get<std::vector<double>>();
      if (b.size() != 2) throw config_error("density_bounds must be [c0, c1]");
      c.graph.node.c0 = b[0];
      c.graph.node.c1 = b[1];
    } else {
      const double mean = c.graph.node.mass_integral / c.graph.node.node_volume;
      c.graph.node.c0 = c.graph.node.c1 = mean;
    }
    if (node.contains("rho0")) c.graph.node.rho0 = parse_rho0(node.at("rho0"));
    c.graph.constants = parse_constants(node);

    const auto& alpha = j.at("alpha");
    const std::string regime = alpha.at("regime").get<std::string>();
    if (regime == "zero") {
      c.regime = AlphaRegime::zero();
    } else if (regime == "one") {
      c.regime = AlphaRegime::one();
    } else if (regime == "irrational") {
      c.regime = AlphaRegime::irrational(alpha.at("value").get<double>());
    } else if (regime == "rational") {
      c.regime = AlphaRegime::rational(alpha.at("m0").get<int>(), alpha.at("n0").get<int>());
    } else {
      throw config_error("alpha.regime must be zero|irrational|rational|one");
    }

    validate(c.graph);
    validate(c.regime);
    return c;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("config schema violation: ") + e.what());
  }
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
  json j;
  j["edges"] = json::array();
  for (int i = 0; i < 3; ++i) {
    json e;
    e["length"] = c.graph.edges[i].length;
    if (auto* cr = std::get_if<ConstantRadius>(&c.graph.edges[i].radius))
      e["radius"] = {{"const", cr->h}};
    else
      e["radius"] = {{"samples", std::get<SampledRadius>(c.graph.edges[i].radius).samples}};
    j["edges"].push_back(e);
  }
  json node;
  node["ell0"] = c.graph.node.ell0;
  node["mass_integral"] = c.graph.node.mass_integral;
  node["node_volume"] = c.graph.node.node_volume;
  node["density_bounds"] = {c.graph.node.c0, c.graph.node.c1};
  if (c.graph.node.rho0) {
    const auto& r = *c.graph.node.rho0;
    if (r.kind == Rho0Expr::Kind::Constant)
      node["rho0"] = {{"kind", "constant"}, {"value", r.value}};
    else
      node["rho0"] = {{"kind", "gaussian"},
                      {"center", {r.center[0], r.center[1], r.center[2]}},
                      {"width", r.width},
                      {"amplitude", r.amplitude}};
  }
  auto key2 = [](int k, int i) { return "(" + std::to_string(k) + "," + std::to_string(i) + ")"; };
  auto key3 = [](int k, int p, int i) {
    return "(" + std::to_string(k) + "," + std::to_string(p) + "," + std::to_string(i) + ")";
  };
  if (!c.graph.constants.delta.empty()) {
    json t;
    for (auto& [k, v] : c.graph.constants.delta)
      t[k[1] == 0 ? key2(k[0], k[2]) : key3(k[0], k[1], k[2])] = v;
    node["delta_table"] = t;
  }
  if (!c.graph.constants.eta.empty()) {
    json t;
    for (auto& [k, v] : c.graph.constants.eta)
      t[k[1] == 0 ? std::to_string(k[0]) : "(" + std::to_string(k[0]) + "," + std::to_string(k[1]) + ")"] = v;
    node["mass_table"] = t;
  }
  if (!c.graph.constants.tail.empty()) {
    json t;
    for (auto& [k, v] : c.graph.constants.tail)
      t[k[1] == 0 ? key2(k[0], k[2]) : key3(k[0], k[1], k[2])] = v;
    node["tail_table"] = t;
  }
  j["node"] = node;

  json a;
  switch (c.regime.kind) {
    case RegimeKind::Zero: a["regime"] = "zero"; break;
    case RegimeKind::One: a["regime"] = "one"; break;
    case RegimeKind::Irrational:
      a["regime"] = "irrational";
      a["value"] = c.regime.alpha;
      break;
    case RegimeKind::Rational:
      a["regime"] = "rational";
      a["m0"] = c.regime.m0;
      a["n0"] = c.regime.n0;
      break;
  }
  j["alpha"] = a;
  return j.dump(2);
}

}  // namespace stargraph
