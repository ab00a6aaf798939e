#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

#include "rebal/asymptotics.hpp"
#include "rebal/free_boundary_solver.hpp"
#include "rebal/simulator.hpp"

namespace rebal {

/// {beta, y_minus, y_plus, grid: [[y, q, u], ...], params, diagnostics}
nlohmann::json to_json(const FreeBoundarySolution& sol);
nlohmann::json to_json(const SolverDiagnostics& diag);
nlohmann::json to_json(const AsymptoticSolution& sol);
nlohmann::json to_json(const SimulationReport& report);

/// Grid export with header "y,q,u".
void write_grid_csv(std::ostream& out, const FreeBoundarySolution& sol);

}  // namespace rebal
