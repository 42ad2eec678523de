// Command-line surface: spectrum, expand, oracle, rates, junction.
// Exit codes: 0 ok, 1 config/usage, 2 solver, 3 degeneracy, 4 missing constants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stargraph/expansion.hpp"
#include "stargraph/io.hpp"
#include "stargraph/junction.hpp"
#include "stargraph/limit_spectrum.hpp"
#include "stargraph/oracle.hpp"
#include "stargraph/version.hpp"

namespace sg = stargraph;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string workdir = ".";
  std::string config_path;
  std::string out_path;
};

std::string resolve(const Common& c, const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  return c.workdir + "/" + path;
}

sg::Config load(const Common& c) { return sg::load_config(resolve(c, c.config_path)); }

void write_manifest(const Common& c, const std::string& command,
                    const ordered_json& params, const std::vector<std::string>& outputs,
                    std::chrono::steady_clock::time_point start) {
  ordered_json m;
  m["command"] = command;
  m["config_hash"] =
      sg::hex64(sg::fnv1a64(sg::read_file(resolve(c, c.config_path))));
  m["parameters"] = params;
  m["outputs"] = outputs;
  m["version"] = sg::kVersion;
  m["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sg::write_file(resolve(c, c.out_path) + ".manifest.json", m.dump(2) + "\n");
}

sg::AlphaRegime regime_from_flags(const sg::Config& cfg, const std::string& regime,
                                  double alpha, bool alpha_set) {
  if (regime.empty()) return cfg.regime;
  if (regime == "zero") return sg::AlphaRegime::zero();
  if (regime == "one") return sg::AlphaRegime::one();
  if (regime == "frac") {
    const double a = alpha_set ? alpha : cfg.regime.alpha;
    if (!(a > 0.0 && a < 1.0))
      throw sg::config_error("--regime frac needs --alpha in (0,1) or a fractional config");
    // classify near-rational values as the rational driver
    for (int q = 1; q <= 64; ++q) {
      const double p = std::round(a * q);
      if (std::abs(a - p / q) < 1e-9)
        return sg::AlphaRegime::rational(int(p), q);
    }
    return sg::AlphaRegime::irrational(a);
  }
  throw sg::config_error("--regime must be zero|frac|one");
}

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> eps;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) eps.push_back(std::stod(tok));
  }
  if (eps.empty()) throw sg::config_error("empty eps list");
  return eps;
}

// chained provider: junction-computed first-order constants, config table above
class ChainedProvider final : public sg::NodeConstantsProvider {
 public:
  ChainedProvider(const sg::JunctionProvider* first, const sg::TableConstants* second)
      : first_(first), second_(second) {}
  std::optional<double> delta(int k, int p, int i) const override {
    if (auto v = first_->delta(k, p, i)) return v;
    return second_->delta(k, p, i);
  }
  std::optional<double> eta(int k, int p) const override {
    if (auto v = first_->eta(k, p)) return v;
    return second_->eta(k, p);
  }
  std::optional<double> tail(int k, int p, int i) const override {
    if (auto v = first_->tail(k, p, i)) return v;
    return second_->tail(k, p, i);
  }

 private:
  const sg::JunctionProvider* first_;
  const sg::TableConstants* second_;
};

int run(int argc, char** argv) {
  CLI::App app{"stargraph: spectral asymptotics on a three-edge star junction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sg::kVersion);

  Common c;

  // ---- spectrum
  auto* sp = app.add_subcommand("spectrum", "limit spectral problem eigenpairs");
  std::string sp_regime, sp_format = "csv";
  double sp_alpha = 0.0;
  int sp_count = 5;
  sp->add_option("--config", c.config_path)->required();
  sp->add_option("--regime", sp_regime, "zero|frac|one");
  auto* sp_alpha_opt = sp->add_option("--alpha", sp_alpha);
  sp->add_option("--count", sp_count);
  sp->add_option("--out", c.out_path)->required();
  sp->add_option("--format", sp_format, "csv|json");
  sp->add_option("--workdir", c.workdir);

  // ---- expand
  auto* ex = app.add_subcommand("expand", "asymptotic series for lambda_n(eps)");
  std::string ex_regime, ex_mode = "auto";
  double ex_alpha = 0.0;
  int ex_order = 1, ex_n = 1;
  bool ex_junction = false;
  double ex_delta = 0.0, ex_R = 6.0;
  ex->add_option("--config", c.config_path)->required();
  ex->add_option("--order", ex_order)->required();
  ex->add_option("--mode", ex_mode, "auto");
  ex->add_option("--regime", ex_regime, "zero|frac|one");
  auto* ex_alpha_opt = ex->add_option("--alpha", ex_alpha);
  ex->add_option("--n", ex_n, "eigenpair index");
  ex->add_flag("--compute-junction", ex_junction,
               "solve the junction problems for the first-order constants");
  ex->add_option("--junction-delta", ex_delta, "junction grid spacing (default ell0/8)");
  ex->add_option("--junction-R", ex_R, "junction truncation length");
  ex->add_option("--out", c.out_path)->required();
  ex->add_option("--workdir", c.workdir);

  // ---- oracle
  auto* orc = app.add_subcommand("oracle", "eps-dependent surrogate sweep (CSV)");
  std::string orc_eps = "1e-1,1e-2,1e-3,1e-4";
  double orc_alpha = 0.5;
  int orc_count = 3, orc_points = 2000;
  orc->add_option("--config", c.config_path)->required();
  orc->add_option("--alpha", orc_alpha)->required();
  orc->add_option("--eps-list", orc_eps);
  orc->add_option("--count", orc_count);
  orc->add_option("--points", orc_points);
  orc->add_option("--out", c.out_path)->required();
  orc->add_option("--workdir", c.workdir);

  // ---- rates
  auto* rt = app.add_subcommand("rates", "rate fit from an oracle sweep (JSON)");
  std::string rt_csv;
  double rt_alpha = 0.5;
  int rt_n = 1;
  rt->add_option("--config", c.config_path)->required();
  rt->add_option("--alpha", rt_alpha)->required();
  rt->add_option("--n", rt_n);
  rt->add_option("--oracle-csv", rt_csv)->required();
  rt->add_option("--out", c.out_path)->required();
  rt->add_option("--workdir", c.workdir);

  // ---- junction
  auto* jc = app.add_subcommand("junction", "inner-problem node constants (JSON)");
  double jc_delta = 0.0, jc_R = 6.0;
  int jc_n = 1;
  std::string jc_regime;
  double jc_alpha = 0.0;
  jc->add_option("--config", c.config_path)->required();
  jc->add_option("--delta", jc_delta, "grid spacing (default ell0/8)");
  jc->add_option("--R", jc_R, "outlet truncation length");
  jc->add_option("--n", jc_n, "eigenpair index for the forcing data");
  jc->add_option("--regime", jc_regime, "zero|frac|one");
  auto* jc_alpha_opt = jc->add_option("--alpha", jc_alpha);
  jc->add_option("--out", c.out_path)->required();
  jc->add_option("--workdir", c.workdir);

  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();

  if (sp->parsed()) {
    if (sp_count < 1) throw sg::config_error("--count must be >= 1");
    const auto cfg = load(c);
    const auto regime = regime_from_flags(cfg, sp_regime, sp_alpha, !sp_alpha_opt->empty());
    const auto pairs = sg::solve_limit_spectrum(cfg.graph, regime, sp_count);
    const std::string body =
        sp_format == "json" ? sg::eigenpairs_json(pairs) : sg::eigenpairs_csv(pairs);
    sg::write_file(resolve(c, c.out_path), body);
    for (const auto& p : pairs)
      if (p.degenerate)
        std::cerr << "note: eigenvalue " << p.index << " flagged degenerate\n";
    ordered_json params{{"regime", sp_regime}, {"count", sp_count}, {"format", sp_format}};
    write_manifest(c, "spectrum", params, {c.out_path}, start);
    return 0;
  }

  if (ex->parsed()) {
    if (ex_order < 0) throw sg::config_error("--order must be >= 0");
    const auto cfg = load(c);
    const auto regime = regime_from_flags(cfg, ex_regime, ex_alpha, !ex_alpha_opt->empty());
    sg::TableConstants table(cfg.graph.constants);
    std::unique_ptr<sg::JunctionProvider> junction;
    std::unique_ptr<ChainedProvider> chained;
    const sg::NodeConstantsProvider* provider = &table;
    if (ex_junction) {
      const double d = ex_delta > 0.0 ? ex_delta : cfg.graph.node.ell0 / 8.0;
      auto consts = sg::compute_node_constants(cfg.graph, regime, ex_n, d, ex_R);
      junction = std::make_unique<sg::JunctionProvider>(consts);
      chained = std::make_unique<ChainedProvider>(junction.get(), &table);
      provider = chained.get();
    }
    const auto series = sg::expand(cfg.graph, regime, ex_n, ex_order, provider);
    sg::write_file(resolve(c, c.out_path), series.to_json() + "\n");
    std::printf("# exponent  mu\n");
    for (const auto& coef : series.coefficients)
      std::printf("%-11s %s\n", sg::fmt17(coef.entry.e).c_str(),
                  sg::fmt17(coef.mu).c_str());
    ordered_json params{{"order", ex_order}, {"n", ex_n}, {"mode", ex_mode},
                        {"compute_junction", ex_junction}};
    write_manifest(c, "expand", params, {c.out_path}, start);
    if (!series.complete())
      throw sg::missing_constant_error(series.truncation_reason, series.truncated_at);
    return 0;
  }

  if (orc->parsed()) {
    const auto cfg = load(c);
    const auto eps = parse_eps_list(orc_eps);
    sg::SurrogateOptions opt;
    opt.points_per_edge = orc_points;
    const auto csv = sg::oracle_csv(cfg.graph, orc_alpha, eps, orc_count, opt);
    sg::write_file(resolve(c, c.out_path), csv);
    ordered_json params{{"alpha", orc_alpha}, {"count", orc_count}, {"points", orc_points},
                        {"eps", eps}};
    write_manifest(c, "oracle", params, {c.out_path}, start);
    return 0;
  }

  if (rt->parsed()) {
    const auto cfg = load(c);
    // parse the oracle CSV: eps,n,lambda,...
    std::stringstream ss(sg::read_file(resolve(c, rt_csv)));
    std::string line;
    std::getline(ss, line);  // header
    std::vector<double> eps, lambda;
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string tok;
      std::vector<std::string> cols;
      while (std::getline(ls, tok, ',')) cols.push_back(tok);
      if (cols.size() < 3) throw sg::config_error("malformed oracle csv line: " + line);
      if (std::stoi(cols[1]) != rt_n) continue;
      eps.push_back(std::stod(cols[0]));
      lambda.push_back(std::stod(cols[2]));
    }
    const auto study =
        sg::rate_study_from_samples(cfg.graph, rt_alpha, rt_n, eps, lambda);
    sg::write_file(resolve(c, c.out_path), sg::rate_study_json(study) + "\n");
    ordered_json params{{"alpha", rt_alpha}, {"n", rt_n}, {"oracle_csv", rt_csv}};
    write_manifest(c, "rates", params, {c.out_path}, start);
    return 0;
  }

  if (jc->parsed()) {
    const auto cfg = load(c);
    const auto regime = regime_from_flags(cfg, jc_regime, jc_alpha, !jc_alpha_opt->empty());
    const double d = jc_delta > 0.0 ? jc_delta : cfg.graph.node.ell0 / 8.0;
    const auto consts = sg::compute_node_constants(cfg.graph, regime, jc_n, d, jc_R);
    sg::write_file(resolve(c, c.out_path), sg::junction_constants_json(consts) + "\n");
    ordered_json params{{"delta", d}, {"R", jc_R}, {"n", jc_n}};
    write_manifest(c, "junction", params, {c.out_path}, start);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sg::missing_constant_error& e) {
    std::cerr << "error: " << e.what() << " (first unavailable order "
              << sg::fmt17(e.first_unavailable_order) << ")\n";
    return 4;
  } catch (const sg::degeneracy_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sg::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const sg::solver_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
