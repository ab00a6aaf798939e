#include "rebal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rebal/asymptotics.hpp"
#include "rebal/errors.hpp"
#include "rebal/free_boundary_solver.hpp"
#include "rebal/parallel.hpp"
#include "rebal/serialization.hpp"
#include "rebal/simulator.hpp"

namespace rebal {

namespace {

using nlohmann::json;

struct MarketFlags {
  std::optional<double> mu, sigma, gamma, epsilon, lambda;
  std::string params_file;
  std::string format = "json";
  std::string out_file;
  std::optional<int> grid_points;
  std::optional<double> k;
};

void add_market_flags(CLI::App* cmd, MarketFlags& f) {
  cmd->add_option("--mu", f.mu, "expected excess return (decimal)");
  cmd->add_option("--sigma", f.sigma, "volatility");
  cmd->add_option("--gamma", f.gamma, "relative risk aversion, != 1");
  cmd->add_option("--epsilon", f.epsilon, "relative half-spread");
  cmd->add_option("--lambda", f.lambda, "price-impact coefficient");
  cmd->add_option("--params", f.params_file, "JSON file with mu, sigma, gamma, epsilon, lambda");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", f.out_file, "output file (default: standard output)");
  cmd->add_option("--grid-points", f.grid_points, "number of output grid points")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--k", f.k, "override K = lambda / epsilon^(4/3)")->check(CLI::PositiveNumber);
}

class UsageError : public Error {
 public:
  using Error::Error;
};

MarketParams resolve_params(const MarketFlags& f) {
  const bool any_inline = f.mu || f.sigma || f.gamma || f.epsilon || f.lambda;
  if (!f.params_file.empty()) {
    if (any_inline) throw UsageError("give either --params or the five market flags, not both");
    std::ifstream in(f.params_file);
    if (!in) throw UsageError("cannot open parameter file " + f.params_file);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError({std::string("parameter file is not valid JSON: ") + e.what()});
    }
    return params_from_json(doc);
  }
  std::vector<std::string> missing;
  if (!f.mu) missing.emplace_back("--mu");
  if (!f.sigma) missing.emplace_back("--sigma");
  if (!f.gamma) missing.emplace_back("--gamma");
  if (!f.epsilon) missing.emplace_back("--epsilon");
  if (!f.lambda) missing.emplace_back("--lambda");
  if (!missing.empty()) {
    std::string msg = "missing required flag(s):";
    for (const auto& m : missing) msg += " " + m;
    throw UsageError(msg);
  }
  return validate(MarketParams{*f.mu, *f.sigma, *f.gamma, *f.epsilon, *f.lambda});
}

// Writes to --out when given, otherwise to the command's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file " + path);
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> uniform_grid(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(std::max(n, 2)));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(g.size() - 1);
  }
  g.back() = b;
  return g;
}

// Prints the buy-and-hold answer when the Merton weight is outside (0, 1).
bool handle_degenerate(const MarketParams& p, std::ostream& out) {
  const MarketRegime regime = degenerate_regime(p);
  if (regime == MarketRegime::Interior) return false;
  out << json{{"regime", to_string(regime)}, {"esr", buy_and_hold_esr(p, regime)}}.dump() << '\n';
  return true;
}

void write_csv_rows(std::ostream& out, const std::string& header,
                    const std::vector<std::vector<double>>& rows) {
  const auto precision = out.precision(17);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  out.precision(precision);
}

int cmd_solve(const MarketFlags& f, std::ostream& out) {
  const MarketParams p = resolve_params(f);
  Sink sink(f.out_file, out);
  if (handle_degenerate(p, *sink)) return exit_code::kOk;
  const FreeBoundarySolution sol = solve(p);
  if (!f.grid_points) {
    if (f.format == "csv") {
      write_grid_csv(*sink, sol);
    } else {
      *sink << to_json(sol).dump(2) << '\n';
    }
    return exit_code::kOk;
  }
  const TradingPolicy u(sol);
  std::vector<std::vector<double>> rows;
  for (double y : uniform_grid(0.0, 1.0, *f.grid_points)) rows.push_back({y, sol.q_at(y), u(y)});
  if (f.format == "csv") {
    write_csv_rows(*sink, "y,q,u", rows);
  } else {
    json doc = to_json(sol);
    doc["grid"] = rows;
    *sink << doc.dump(2) << '\n';
  }
  return exit_code::kOk;
}

int cmd_asymptotic(const MarketFlags& f, std::ostream& out) {
  const MarketParams p = resolve_params(f);
  Sink sink(f.out_file, out);
  if (handle_degenerate(p, *sink)) return exit_code::kOk;
  const AsymptoticSolution sol = find_z_minus(make_asymptotic_inputs(p, f.k));
  const int n = f.grid_points.value_or(201);
  std::vector<std::vector<double>> rows;
  for (double y : uniform_grid(0.0, 1.0, n)) rows.push_back({y, asymptotic_policy(y, sol)});
  if (f.format == "csv") {
    write_csv_rows(*sink, "y,u", rows);
  } else {
    json doc = to_json(sol);
    if (f.grid_points) doc["grid"] = rows;
    *sink << doc.dump(2) << '\n';
  }
  return exit_code::kOk;
}

int cmd_policy(const MarketFlags& f, std::ostream& out) {
  const MarketParams p = resolve_params(f);
  Sink sink(f.out_file, out);
  if (handle_degenerate(p, *sink)) return exit_code::kOk;
  const TradingPolicy u(solve(p));
  std::vector<std::vector<double>> rows;
  for (double y : uniform_grid(0.0, 1.0, f.grid_points.value_or(201))) rows.push_back({y, u(y)});
  if (f.format == "csv") {
    write_csv_rows(*sink, "y,u", rows);
  } else {
    *sink << json{{"beta", u.solution().beta},
                  {"y_minus", u.solution().y_minus},
                  {"y_plus", u.solution().y_plus},
                  {"policy", rows}}
                 .dump(2)
          << '\n';
  }
  return exit_code::kOk;
}

struct SimFlags {
  SimConfig cfg;
  std::string policy = "exact";
  double scale = 1.0;
  std::string path_csv;
};

int cmd_simulate(const MarketFlags& f, const SimFlags& s, std::ostream& out) {
  const MarketParams p = resolve_params(f);
  validate(s.cfg);
  Sink sink(f.out_file, out);

  std::function<double(double)> u = [](double) { return 0.0; };
  std::optional<double> beta_reference;
  const bool interior = degenerate_regime(p) == MarketRegime::Interior;
  if (interior && s.policy == "exact") {
    const FreeBoundarySolution sol = solve(p);
    beta_reference = sol.beta;
    u = TradingPolicy(sol);
  } else if (interior && s.policy == "asymptotic") {
    const AsymptoticSolution sol = find_z_minus(make_asymptotic_inputs(p, f.k));
    beta_reference = sol.beta_approx;
    u = [sol](double y) { return asymptotic_policy(y, sol); };
  } else if (!interior) {
    beta_reference = buy_and_hold_esr(p, degenerate_regime(p));
  }
  const double scale = s.scale;
  const PolicyTable table([&](double y) { return scale * u(y); });

  const PathEnsemble ens = simulate_paths(p, table, s.cfg);
  const SimulationReport rep = estimate_esr(ens, p.gamma, s.cfg);
  if (!s.path_csv.empty()) {
    std::ofstream pc(s.path_csv);
    if (!pc) throw UsageError("cannot open " + s.path_csv);
    write_path_csv(pc, ens);
  }
  if (f.format == "csv") {
    write_csv_rows(*sink,
                   "esr_estimate,esr_stderr,mean_turnover,fraction_time_in_NT,y_range_violations,"
                   "beta_reference",
                   {{rep.esr_estimate, rep.esr_stderr, rep.mean_turnover, rep.fraction_time_in_nt,
                     static_cast<double>(rep.y_range_violations),
                     beta_reference.value_or(std::nan(""))}});
  } else {
    json doc = to_json(rep);
    if (beta_reference) doc["beta_reference"] = *beta_reference;
    doc["policy"] = s.policy;
    doc["scale"] = s.scale;
    doc["seed"] = s.cfg.seed;
    *sink << doc.dump(2) << '\n';
  }
  return exit_code::kOk;
}

std::vector<double> parse_values(const std::vector<std::string>& tokens) {
  std::vector<double> values;
  for (const auto& t : tokens) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (t.empty() || used != t.size()) throw UsageError("--values: not a number: '" + t + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("sweep needs at least one value in --values");
  return values;
}

int cmd_sweep(const MarketFlags& f, const std::string& axis,
              const std::vector<std::string>& tokens, std::ostream& out) {
  const std::vector<double> values = parse_values(tokens);
  const MarketParams base = resolve_params(f);
  Sink sink(f.out_file, out);
  if (handle_degenerate(base, *sink)) return exit_code::kOk;

  std::vector<MarketParams> points;
  for (double v : values) {
    MarketParams p = base;
    (axis == "epsilon" ? p.epsilon : p.lambda) = v;
    points.push_back(validate(p));
  }
  // Solve concurrently, report serially and in input order.
  const int n = static_cast<int>(points.size());
  std::vector<std::optional<FreeBoundarySolution>> sols(points.size());
  std::vector<std::string> errors(points.size());
  std::vector<int> codes(points.size(), exit_code::kOk);
#pragma omp parallel for schedule(dynamic) num_threads(thread_budget())
  for (int i = 0; i < n; ++i) {
    try {
      sols[i] = solve(points[i]);
    } catch (const NoMatchError& e) {
      errors[i] = e.what();
      codes[i] = exit_code::kNoMatch;
    } catch (const std::exception& e) {
      errors[i] = e.what();
      codes[i] = exit_code::kNumerical;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (codes[i] != exit_code::kOk) {
      std::ostringstream os;
      os << "sweep point " << axis << " = " << values[i] << ": " << errors[i];
      if (codes[i] == exit_code::kNoMatch) throw NoMatchError(os.str(), 0, 0);
      throw NumericalFailure(os.str());
    }
  }

  const int grid = f.grid_points.value_or(201);
  if (f.format == "csv") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
      const TradingPolicy u(*sols[i]);
      for (double y : uniform_grid(0.0, 1.0, grid)) {
        rows.push_back({points[i].epsilon, points[i].lambda, y, u(y)});
      }
    }
    write_csv_rows(*sink, "epsilon,lambda,y,u", rows);
  } else {
    json doc = json::array();
    for (int i = 0; i < n; ++i) {
      const auto& s = *sols[i];
      doc.push_back({{"epsilon", points[i].epsilon},
                     {"lambda", points[i].lambda},
                     {"beta", s.beta},
                     {"y_minus", s.y_minus},
                     {"y_plus", s.y_plus},
                     {"width", s.y_plus - s.y_minus}});
    }
    *sink << doc.dump(2) << '\n';
  }
  return exit_code::kOk;
}

int cmd_compare(const MarketFlags& f, std::ostream& out) {
  const MarketParams p = resolve_params(f);
  Sink sink(f.out_file, out);
  if (handle_degenerate(p, *sink)) return exit_code::kOk;
  const Comparison c = compare_exact_asymptotic(p, f.grid_points.value_or(201), f.k);
  if (f.format == "csv") {
    std::vector<std::vector<double>> rows;
    for (const auto& r : c.rows) rows.push_back({r.y, r.u_exact, r.u_asym, r.abs_err, r.rel_err});
    write_csv_rows(*sink, "y,u_exact,u_asym,abs_err,rel_err", rows);
    const auto precision = (*sink).precision(17);
    *sink << "# beta_exact=" << c.beta_exact << ",beta_asym=" << c.beta_asym
          << ",y_minus_exact=" << c.y_minus_exact << ",y_minus_asym=" << c.y_minus_asym
          << ",y_plus_exact=" << c.y_plus_exact << ",y_plus_asym=" << c.y_plus_asym << '\n';
    (*sink).precision(precision);
  } else {
    json rows = json::array();
    for (const auto& r : c.rows) {
      rows.push_back({{"y", r.y},
                      {"u_exact", r.u_exact},
                      {"u_asym", r.u_asym},
                      {"abs_err", r.abs_err},
                      {"rel_err", r.rel_err}});
    }
    *sink << json{{"beta_exact", c.beta_exact},
                  {"beta_asym", c.beta_asym},
                  {"y_minus_exact", c.y_minus_exact},
                  {"y_minus_asym", c.y_minus_asym},
                  {"y_plus_exact", c.y_plus_exact},
                  {"y_plus_asym", c.y_plus_asym},
                  {"max_rel_err", c.max_rel_err},
                  {"rows", rows}}
                 .dump(2)
          << '\n';
  }
  return exit_code::kOk;
}

}  // namespace

Comparison compare_exact_asymptotic(const MarketParams& params, int points,
                                    std::optional<double> k_override) {
  const FreeBoundarySolution exact = solve(params);
  const AsymptoticSolution asym = find_z_minus(make_asymptotic_inputs(params, k_override));
  const TradingPolicy u(exact);
  const double y_star = params.merton_weight();
  const double half = 3.0 * std::cbrt(params.epsilon);

  Comparison c;
  c.beta_exact = exact.beta;
  c.beta_asym = asym.beta_approx;
  c.y_minus_exact = exact.y_minus;
  c.y_minus_asym = asym.y_minus_approx;
  c.y_plus_exact = exact.y_plus;
  c.y_plus_asym = asym.y_plus_approx;
  double u_max = 0.0;
  for (double y : uniform_grid(std::max(0.0, y_star - half), std::min(1.0, y_star + half), points)) {
    const double ue = u(y);
    const double ua = asymptotic_policy(y, asym);
    c.rows.push_back({y, ue, ua, std::fabs(ue - ua), 0.0});
    u_max = std::max(u_max, std::fabs(ue));
  }
  for (auto& r : c.rows) {
    r.rel_err = u_max > 0.0 ? r.abs_err / u_max : 0.0;
    c.max_rel_err = std::max(c.max_rel_err, r.rel_err);
  }
  return c;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal rebalancing with proportional costs and price impact", "rebal"};
  app.require_subcommand(1);

  MarketFlags f;
  auto* solve_cmd = app.add_subcommand("solve", "exact free-boundary solution");
  auto* asym_cmd = app.add_subcommand("asymptotic", "small-cost expansion");
  auto* policy_cmd = app.add_subcommand("policy", "exact turnover on a uniform grid");
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo equivalent safe rate");
  auto* sweep_cmd = app.add_subcommand("sweep", "exact policies over a grid of epsilon or lambda");
  auto* cmp_cmd = app.add_subcommand("compare", "exact against asymptotic turnover");
  for (auto* c : {solve_cmd, asym_cmd, policy_cmd, sim_cmd, sweep_cmd, cmp_cmd}) {
    add_market_flags(c, f);
  }

  SimFlags s;
  double y0 = std::nan("");
  sim_cmd->add_option("--seed", s.cfg.seed, "random seed");
  sim_cmd->add_option("--paths", s.cfg.n_paths, "number of paths");
  sim_cmd->add_option("--horizon", s.cfg.horizon, "horizon T in years");
  sim_cmd->add_option("--burn-in", s.cfg.burn_in, "burn-in horizon T1 in years");
  sim_cmd->add_option("--dt", s.cfg.dt, "time step in years");
  sim_cmd->add_option("--y0", y0, "initial risky weight (default y*)");
  sim_cmd->add_option("--resamples", s.cfg.bootstrap_resamples, "bootstrap resamples");
  sim_cmd->add_flag("--antithetic", s.cfg.antithetic, "mirrored Brownian increments in pairs");
  sim_cmd->add_option("--policy", s.policy, "exact, asymptotic or zero")
      ->check(CLI::IsMember({"exact", "asymptotic", "zero"}));
  sim_cmd->add_option("--scale", s.scale, "multiply the turnover by this factor");
  sim_cmd->add_option("--path-csv", s.path_csv, "per-path summary CSV");

  std::string axis;
  std::vector<std::string> values;
  sweep_cmd->add_option("--sweep", axis, "epsilon or lambda")
      ->required()
      ->check(CLI::IsMember({"epsilon", "lambda"}));
  sweep_cmd->add_option("--values", values, "comma-separated grid")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(f, out);
    if (*asym_cmd) return cmd_asymptotic(f, out);
    if (*policy_cmd) return cmd_policy(f, out);
    if (*sim_cmd) {
      s.cfg.y0 = y0;
      return cmd_simulate(f, s, out);
    }
    if (*sweep_cmd) return cmd_sweep(f, axis, values, out);
    if (*cmp_cmd) return cmd_compare(f, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return exit_code::kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const NoMatchError& e) {
    err << "no match: " << e.what() << '\n';
    return exit_code::kNoMatch;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_code::kNumerical;
  }
  return exit_code::kUsage;
}

}  // namespace rebal
