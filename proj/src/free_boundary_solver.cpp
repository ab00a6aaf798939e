#include "rebal/free_boundary_solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "rebal/errors.hpp"
#include "rebal/sdirk.hpp"

namespace rebal {

namespace {

ode::StepOptions step_options(const SolverOptions& o, double h_max) {
  ode::StepOptions s;
  s.rtol = o.rtol;
  s.atol = o.atol;
  s.h_init = 1e-3 * o.delta;
  s.h_max = h_max;
  return s;
}

std::optional<BlowUp> guard(const SolverOptions& o, double y, double q) {
  if (q >= std::min((1.0 - o.margin) / y, o.q_max)) return BlowUp::Upper;
  if (q <= -o.q_max) return BlowUp::Lower;
  return std::nullopt;
}

ShootResult integrate_leg(const MarketParams& p, double beta, double y0, double q0,
                          double y_stop, const SolverOptions& opts, double h_max,
                          std::span<const double> breakpoints) {
  const OdeContext ctx{p, beta};
  Trajectory tr;
  tr.y.push_back(y0);
  tr.q.push_back(q0);
  std::optional<BlowUpEvent> blow;

  const auto f = [&](double y, double q) { return slope(ctx, y, q); };
  const auto dfdq = [&](double y, double q) { return slope_dq(ctx, y, q); };
  const auto observe = [&](double y, double q) {
    if (auto kind = guard(opts, y, q)) {
      blow = BlowUpEvent{*kind, y, q};
      return false;
    }
    tr.y.push_back(y);
    tr.q.push_back(q);
    return true;
  };

  const ode::Outcome out =
      ode::integrate(f, dfdq, y0, q0, y_stop, step_options(opts, h_max), breakpoints, observe);
  if (blow) return *blow;

  if (out.status == ode::Status::StepUnderflow || out.status == ode::Status::MaxSteps) {
    // A trajectory that stalls inside a trading region is running into the
    // q y = 1 barrier or off to infinity; only a stall in the band is a
    // genuine integrator failure.
    const double y = tr.y.back();
    const double q = tr.q.back();
    switch (classify(y, q, p.epsilon)) {
      case TradeRegime::Buy:
        return BlowUpEvent{BlowUp::Upper, y, q};
      case TradeRegime::Sell:
        return BlowUpEvent{BlowUp::Lower, y, q};
      case TradeRegime::NoTrade:
        break;
    }
    std::ostringstream os;
    os << "integrator stalled at y = " << y << " (beta = " << beta << ")";
    if (!out.last_failure.empty()) os << ": " << out.last_failure;
    throw NumericalFailure(os.str());
  }
  tr.rejected = out.rejected;
  tr.max_error = out.max_error;
  return tr;
}

ShootResult forward_leg(const MarketParams& p, double beta, double y_stop,
                        const SolverOptions& opts, double h_max,
                        std::span<const double> breakpoints = {}) {
  const BoundaryStart start = boundary_value_0(p, beta);
  const double y0 = opts.delta;
  return integrate_leg(p, beta, y0, start.q0 + start.dq0 * y0, y_stop, opts, h_max, breakpoints);
}

ShootResult backward_leg(const MarketParams& p, double beta, double y_stop,
                         const SolverOptions& opts, double h_max,
                         std::span<const double> breakpoints = {}) {
  return integrate_leg(p, beta, 1.0 - opts.delta, boundary_value_1(p, beta), y_stop, opts, h_max,
                       breakpoints);
}

constexpr double kShootHMax = 1e-2;
constexpr double kEdgeRefinement = 0.05;
constexpr double kEdgeRatio = 1.05;

struct Node {
  double y;
  double q;
  bool forward;  // node belongs to the leg integrated upward from y = 0
};

std::vector<Node> stitch(const Trajectory& fwd, const Trajectory& bwd) {
  std::vector<Node> nodes;
  nodes.reserve(fwd.y.size() + bwd.y.size());
  for (std::size_t i = 0; i < fwd.y.size(); ++i) nodes.push_back({fwd.y[i], fwd.q[i], true});
  for (std::size_t i = bwd.y.size(); i-- > 0;) {
    if (bwd.y[i] > nodes.back().y) nodes.push_back({bwd.y[i], bwd.q[i], false});
  }
  return nodes;
}

// Inserts nodes until the interpolant satisfies the ODE to within
// kResidualBudget * rtol of the largest term. The derivative error of a
// cubic Hermite piece peaks near t = 1/2 -+ 1/(2 sqrt 3), so it is probed
// there; new nodes are integrated from the neighbour on the stable side.
constexpr double kResidualBudget = 2.0;
constexpr int kRefinePasses = 12;

std::vector<Node> refine(std::vector<Node> nodes, const MarketParams& p, double beta,
                         const SolverOptions& opts) {
  const OdeContext ctx{p, beta};
  const double tolerance = kResidualBudget * opts.rtol;
  for (int pass = 0; pass < kRefinePasses; ++pass) {
    std::vector<double> y, q, dq;
    for (const Node& n : nodes) {
      y.push_back(n.y);
      q.push_back(n.q);
      dq.push_back(slope(ctx, n.y, n.q));
    }
    const MonotoneCubic c(y, q, dq);
    std::vector<Node> out;
    out.reserve(nodes.size());
    bool inserted = false;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      out.push_back(nodes[i]);
      const double h = y[i + 1] - y[i];
      bool ok = true;
      for (double t : {0.21132486540518713, 0.78867513459481287}) {
        const double yt = y[i] + t * h;
        const OdeResidual r = ode_residual(ctx, yt, c(yt), c.derivative(yt));
        if (std::fabs(r.residual) > tolerance * r.scale) ok = false;
      }
      if (ok) continue;
      const double ym = y[i] + 0.5 * h;
      const Node& from = nodes[i + 1].forward ? nodes[i] : nodes[i + 1];
      const ShootResult leg = integrate_leg(p, beta, from.y, from.q, ym, opts, h, {});
      if (const auto* tr = std::get_if<Trajectory>(&leg)) {
        out.push_back({ym, tr->q.back(), from.forward});
        inserted = true;
      }
    }
    out.push_back(nodes.back());
    nodes = std::move(out);
    if (!inserted) break;
  }
  return nodes;
}

// Point where q - band changes sign from positive to non-positive. Refined
// by integrating from the bracketing node in that leg's stable direction.
template <class Band>
double locate_crossing(const std::vector<Node>& nodes, Band band, const MarketParams& p,
                       double beta, const SolverOptions& opts) {
  const auto gap = [&](const Node& n) { return n.q - band(n.y); };
  if (gap(nodes.front()) <= 0.0) return 0.0;
  std::size_t i = 1;
  while (i < nodes.size() && gap(nodes[i]) > 0.0) ++i;
  if (i == nodes.size()) return 1.0;

  const Node& left = nodes[i - 1];
  const Node& right = nodes[i];
  if (gap(right) == 0.0) return right.y;
  const Node& from = right.forward ? left : right;

  const OdeContext ctx{p, beta};
  const auto f = [&](double y, double q) { return slope(ctx, y, q); };
  const auto dfdq = [&](double y, double q) { return slope_dq(ctx, y, q); };
  ode::StepOptions so = step_options(opts, kShootHMax);
  so.h_init = 1e-3 * (right.y - left.y);

  const auto g = [&](double t) {
    if (t == left.y) return gap(left);
    if (t == right.y) return gap(right);
    const auto out = ode::integrate(f, dfdq, from.y, from.q, t, so, [](double, double) { return true; });
    if (out.status != ode::Status::Completed) {
      throw NumericalFailure("integration failed while locating a trading boundary");
    }
    return out.q - band(t);
  };

  const double y_tol = opts.y_tol;
  const auto tol = [y_tol](double a, double b) { return std::fabs(b - a) <= y_tol; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] =
      boost::math::tools::toms748_solve(g, left.y, right.y, gap(left), gap(right), tol, max_iter);
  return 0.5 * (a + b);
}

const Trajectory& expect_trajectory(const ShootResult& r, const char* leg) {
  if (const auto* t = std::get_if<Trajectory>(&r)) return *t;
  const auto& b = std::get<BlowUpEvent>(r);
  std::ostringstream os;
  os << leg << " leg blew up at y = " << b.y << " for the matched beta";
  throw NumericalFailure(os.str());
}

}  // namespace

ShootResult shoot_forward(const MarketParams& params, double beta, double y_stop,
                          const SolverOptions& opts) {
  return forward_leg(params, beta, y_stop, opts, kShootHMax);
}

ShootResult shoot_backward(const MarketParams& params, double beta, double y_stop,
                           const SolverOptions& opts) {
  return backward_leg(params, beta, y_stop, opts, kShootHMax);
}

int matching_sign(const MarketParams& params, double beta, const SolverOptions& opts) {
  const double y_star = params.merton_weight();
  const ShootResult fwd = shoot_forward(params, beta, y_star, opts);
  if (const auto* b = std::get_if<BlowUpEvent>(&fwd)) return b->kind == BlowUp::Upper ? 1 : -1;
  const ShootResult bwd = shoot_backward(params, beta, y_star, opts);
  if (const auto* b = std::get_if<BlowUpEvent>(&bwd)) return b->kind == BlowUp::Upper ? -1 : 1;
  const double diff = std::get<Trajectory>(fwd).q.back() - std::get<Trajectory>(bwd).q.back();
  return (diff > 0.0) - (diff < 0.0);
}

FreeBoundarySolution solve(const MarketParams& params_in, const SolverOptions& opts) {
  const MarketParams p = validate(params_in);
  if (degenerate_regime(p) != MarketRegime::Interior) {
    throw DomainError("exact solver needs 0 < y* < 1; buy-and-hold is optimal otherwise");
  }
  if (!(p.lambda > 0.0)) throw DomainError("exact solver needs lambda > 0");

  const double y_star = p.merton_weight();
  const WelfareBracket bracket = welfare_bracket(p);
  const double width = bracket.high - bracket.low;
  double lo = bracket.low > 0.0 ? bracket.low : bracket.low + 1e-9 * width;
  double hi = bracket.high;

  SolverDiagnostics diag;
  diag.sign_low = matching_sign(p, lo, opts);
  diag.sign_high = matching_sign(p, hi, opts);
  if (diag.sign_low != 0 && diag.sign_low == diag.sign_high) {
    std::ostringstream os;
    os << "no beta in [" << lo << ", " << hi << "] matches the two boundary conditions "
       << "(frictions too large)";
    throw NoMatchError(os.str(), diag.sign_low, diag.sign_high);
  }

  double beta;
  if (diag.sign_low == 0) {
    beta = lo;
  } else if (diag.sign_high == 0) {
    beta = hi;
  } else {
    while (hi - lo > opts.beta_tol * width && diag.bisection_iterations < opts.max_bisections) {
      const double mid = 0.5 * (lo + hi);
      const int s = matching_sign(p, mid, opts);
      ++diag.bisection_iterations;
      if (s == 0) {
        lo = hi = mid;
        break;
      }
      (s == diag.sign_low ? lo : hi) = mid;
    }
    beta = 0.5 * (lo + hi);
  }
  diag.beta_bracket_width = hi - lo;

  // First pass locates the boundaries; the second puts them on the grid so
  // the kink in q'' falls on a node.
  const double h_grid = opts.grid_h_max;
  double y_minus, y_plus;
  {
    const Trajectory fwd = expect_trajectory(forward_leg(p, beta, y_star, opts, h_grid), "forward");
    const Trajectory bwd =
        expect_trajectory(backward_leg(p, beta, y_star, opts, h_grid), "backward");
    const auto nodes = stitch(fwd, bwd);
    y_minus = locate_crossing(nodes, [&](double y) { return buy_band(y, p.epsilon); }, p, beta, opts);
    y_plus = locate_crossing(nodes, [&](double y) { return sell_band(y, p.epsilon); }, p, beta, opts);
  }

  std::vector<double> fwd_breaks, bwd_breaks;
  for (double b : {y_minus, y_plus}) {
    if (b > opts.delta && b < y_star) fwd_breaks.push_back(b);
    if (b > y_star && b < 1.0 - opts.delta) bwd_breaks.push_back(b);
  }
  // Near the endpoints the stiff solution lets the integrator take steps
  // comparable to the distance from the endpoint, too coarse for the
  // interpolant's derivative. Geometric nodes keep h/y small there.
  for (double e = 2.0 * opts.delta; e < kEdgeRefinement; e *= kEdgeRatio) {
    if (e < y_star) fwd_breaks.push_back(e);
    if (1.0 - e > y_star) bwd_breaks.push_back(1.0 - e);
  }
  const Trajectory fwd =
      expect_trajectory(forward_leg(p, beta, y_star, opts, h_grid, fwd_breaks), "forward");
  const Trajectory bwd =
      expect_trajectory(backward_leg(p, beta, y_star, opts, h_grid, bwd_breaks), "backward");
  diag.matching_residual = std::fabs(fwd.q.back() - bwd.q.back());
  diag.integrator_max_error = std::max(fwd.max_error, bwd.max_error);
  diag.forward_steps = static_cast<long>(fwd.y.size()) - 1;
  diag.backward_steps = static_cast<long>(bwd.y.size()) - 1;

  const OdeContext ctx{p, beta};
  const BoundaryStart start = boundary_value_0(p, beta);
  FreeBoundarySolution sol;
  sol.params = p;
  sol.beta = beta;
  sol.y_minus = y_minus;
  sol.y_plus = y_plus;
  std::vector<double> dq;
  sol.y.push_back(0.0);
  sol.q.push_back(start.q0);
  dq.push_back(start.dq0);
  for (const Node& n : refine(stitch(fwd, bwd), p, beta, opts)) {
    sol.y.push_back(n.y);
    sol.q.push_back(n.q);
    dq.push_back(slope(ctx, n.y, n.q));
  }
  sol.y.push_back(1.0);
  sol.q.push_back(boundary_value_1(p, beta));
  dq.push_back(dq.back());
  sol.q_interp = MonotoneCubic(sol.y, sol.q, dq);
  sol.diagnostics = diag;
  return sol;
}

double TradingPolicy::operator()(double y) const {
  const auto& s = solution_;
  if (y >= s.y_minus && y <= s.y_plus) return 0.0;
  y = std::clamp(y, 0.0, 1.0);
  return pointwise_optimal_turnover(y, s.q_at(y), s.params);
}

TradingPolicy policy(const FreeBoundarySolution& solution) { return TradingPolicy(solution); }

}  // namespace rebal
