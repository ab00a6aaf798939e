#pragma once

#include "rebal/market_model.hpp"

namespace rebal {

/// Closest distance to y = 0 or y = 1 at which the slope field is evaluated.
inline constexpr double kYMinClearance = 1e-6;

enum class TradeRegime { Buy, NoTrade, Sell };

const char* to_string(TradeRegime regime);

struct OdeContext {
  MarketParams params;
  double beta = 0.0;
};

/// q on the edge of the buy region, eps/(1 + eps y).
double buy_band(double y, double epsilon);
/// q on the edge of the sell region, -eps/(1 - eps y).
double sell_band(double y, double epsilon);

TradeRegime classify(double y, double q, double epsilon);

/// q' from the stationary HJB equation, with the friction term of the
/// regime selected by classify. Throws SingularityError within
/// kYMinClearance of an endpoint and DomainError when q y >= 1.
double slope(const OdeContext& ctx, double y, double q);
double slope_in_regime(const OdeContext& ctx, TradeRegime regime, double y, double q);

/// Partial derivative of slope() with respect to q.
double slope_dq(const OdeContext& ctx, double y, double q);

/// Residual of the HJB equation for a candidate (q, q') at y, together with
/// the largest absolute additive term, which sets the scale for the residual.
struct OdeResidual {
  double residual = 0.0;
  double scale = 0.0;
};
OdeResidual ode_residual(const OdeContext& ctx, double y, double q, double dq);

/// Value and derivative of q at y = 0+. Requires beta > 0 and lambda > 0
/// for the derivative.
struct BoundaryStart {
  double q0 = 0.0;
  double dq0 = 0.0;
};
BoundaryStart boundary_value_0(const MarketParams& params, double beta);

/// Value of q at y = 1-. Throws DomainError on a negative radicand.
double boundary_value_1(const MarketParams& params, double beta);

/// Wealth turnover maximising the local HJB term. Throws DomainError when
/// q y >= 1 or when lambda = 0 outside the no-trade band.
double pointwise_optimal_turnover(double y, double q, const MarketParams& params);

}  // namespace rebal
