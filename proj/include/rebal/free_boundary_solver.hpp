#pragma once

#include <variant>
#include <vector>

#include "rebal/hjb_ode.hpp"
#include "rebal/interpolation.hpp"
#include "rebal/market_model.hpp"

namespace rebal {

struct SolverOptions {
  double delta = 1e-6;         // start offset from y = 0 and y = 1
  double q_max = 10.0;         // |q| beyond this is a blow-up
  double margin = 1e-9;        // blow-up also when q >= (1 - margin)/y
  double rtol = 1e-10;
  double atol = 1e-12;
  double beta_tol = 1e-12;     // relative to the welfare bracket width
  double y_tol = 1e-12;
  double grid_h_max = 2e-3;    // node spacing cap of the returned grid
  int max_bisections = 200;
};

enum class BlowUp { Upper, Lower };

struct BlowUpEvent {
  BlowUp kind = BlowUp::Upper;
  double y = 0.0;
  double q = 0.0;
};

/// Accepted integration nodes in integration order.
struct Trajectory {
  std::vector<double> y;
  std::vector<double> q;
  long rejected = 0;
  double max_error = 0.0;
};

using ShootResult = std::variant<Trajectory, BlowUpEvent>;

/// Integrates from y = delta (Taylor start) up to y_stop.
ShootResult shoot_forward(const MarketParams& params, double beta, double y_stop,
                          const SolverOptions& opts = {});
/// Integrates from y = 1 - delta down to y_stop.
ShootResult shoot_backward(const MarketParams& params, double beta, double y_stop,
                           const SolverOptions& opts = {});

/// Sign of q0(y*) - q1(y*) for a candidate beta, blow-ups included.
int matching_sign(const MarketParams& params, double beta, const SolverOptions& opts = {});

struct SolverDiagnostics {
  int bisection_iterations = 0;
  double beta_bracket_width = 0.0;  // final width
  double matching_residual = 0.0;   // |q0(y*) - q1(y*)| at the returned beta
  double integrator_max_error = 0.0;  // largest normalised local error, final legs
  long forward_steps = 0;
  long backward_steps = 0;
  int sign_low = 0;
  int sign_high = 0;
};

struct FreeBoundarySolution {
  MarketParams params;
  double beta = 0.0;
  double y_minus = 0.0;
  double y_plus = 0.0;
  /// Nodes on [0, 1], including the end values q(0+) and q(1-).
  std::vector<double> y;
  std::vector<double> q;
  MonotoneCubic q_interp;
  SolverDiagnostics diagnostics;

  double q_at(double y) const { return q_interp(y); }
  double dq_at(double y) const { return q_interp.derivative(y); }
};

/// Bisection on beta with shooting from both ends, matched at y*. Requires
/// an interior Merton weight and lambda > 0. Throws NoMatchError when the
/// matching sign agrees at both ends of the welfare bracket.
FreeBoundarySolution solve(const MarketParams& params, const SolverOptions& opts = {});

class TradingPolicy {
 public:
  explicit TradingPolicy(FreeBoundarySolution solution) : solution_(std::move(solution)) {}

  /// Optimal wealth turnover at risky weight y in [0, 1].
  double operator()(double y) const;

  const FreeBoundarySolution& solution() const { return solution_; }

 private:
  FreeBoundarySolution solution_;
};

TradingPolicy policy(const FreeBoundarySolution& solution);

}  // namespace rebal
