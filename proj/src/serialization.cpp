#include "rebal/serialization.hpp"

#include <ostream>

namespace rebal {

nlohmann::json to_json(const SolverDiagnostics& d) {
  return {{"bisection_iterations", d.bisection_iterations},
          {"beta_bracket_width", d.beta_bracket_width},
          {"matching_residual", d.matching_residual},
          {"integrator_max_error", d.integrator_max_error},
          {"forward_steps", d.forward_steps},
          {"backward_steps", d.backward_steps},
          {"sign_low", d.sign_low},
          {"sign_high", d.sign_high}};
}

nlohmann::json to_json(const FreeBoundarySolution& sol) {
  const TradingPolicy u(sol);
  nlohmann::json grid = nlohmann::json::array();
  for (std::size_t i = 0; i < sol.y.size(); ++i) {
    grid.push_back({sol.y[i], sol.q[i], u(sol.y[i])});
  }
  return {{"beta", sol.beta},
          {"y_minus", sol.y_minus},
          {"y_plus", sol.y_plus},
          {"grid", std::move(grid)},
          {"params", to_json(sol.params)},
          {"diagnostics", to_json(sol.diagnostics)}};
}

nlohmann::json to_json(const AsymptoticSolution& s) {
  return {{"K", s.inputs.K},
          {"z_minus", s.z_minus},
          {"z_plus", s.z_plus},
          {"l", s.l},
          {"a", s.a},
          {"c", s.c},
          {"k", s.k},
          {"x_minus", s.x_minus},
          {"D", s.D},
          {"E", s.E},
          {"F", s.F},
          {"beta_approx", s.beta_approx},
          {"y_minus_approx", s.y_minus_approx},
          {"y_plus_approx", s.y_plus_approx},
          {"params", to_json(s.inputs.params)},
          {"diagnostics",
           {{"roots", s.roots}, {"poles", s.poles}, {"riccati_evaluations", s.riccati_evaluations}}}};
}

nlohmann::json to_json(const SimulationReport& r) {
  return {{"esr_estimate", r.esr_estimate},
          {"esr_stderr", r.esr_stderr},
          {"mean_turnover", r.mean_turnover},
          {"fraction_time_in_NT", r.fraction_time_in_nt},
          {"y_range_violations", r.y_range_violations},
          {"n_paths", r.n_paths},
          {"steps_per_path", r.steps_per_path}};
}

void write_grid_csv(std::ostream& out, const FreeBoundarySolution& sol) {
  const TradingPolicy u(sol);
  const auto precision = out.precision(17);
  out << "y,q,u\n";
  for (std::size_t i = 0; i < sol.y.size(); ++i) {
    out << sol.y[i] << ',' << sol.q[i] << ',' << u(sol.y[i]) << '\n';
  }
  out.precision(precision);
}

}  // namespace rebal
