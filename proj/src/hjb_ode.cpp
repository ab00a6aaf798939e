#include "rebal/hjb_ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rebal/errors.hpp"

namespace rebal {

namespace {

void check_point(double y, double q) {
  // Relaxed by a few ulps so that the start points 1e-6 and 1 - 1e-6
  // themselves are admissible.
  if (std::min(y, 1.0 - y) < kYMinClearance * (1.0 - 1e-9)) {
    std::ostringstream os;
    os << "slope field is singular at y = " << y;
    throw SingularityError(os.str());
  }
  if (q * y >= 1.0) {
    std::ostringstream os;
    os << "q y >= 1 at y = " << y << ", q = " << q;
    throw DomainError(os.str());
  }
}

// Friction term of the HJB equation and its q-derivative.
struct Friction {
  double value = 0.0;
  double dq = 0.0;
};

Friction friction(const MarketParams& p, TradeRegime regime, double y, double q) {
  if (regime == TradeRegime::NoTrade) return {};
  if (p.lambda <= 0.0) throw DomainError("trading regions need lambda > 0");
  const double s = regime == TradeRegime::Buy ? 1.0 : -1.0;
  const double w = 1.0 - y * q;
  const double dn = 1.0 + s * p.epsilon * y;
  const double n = q * dn - s * p.epsilon;
  return {n * n / (4.0 * p.lambda * w),
          (2.0 * n * dn * w + n * n * y) / (4.0 * p.lambda * w * w)};
}

}  // namespace

const char* to_string(TradeRegime regime) {
  switch (regime) {
    case TradeRegime::Buy:
      return "Buy";
    case TradeRegime::NoTrade:
      return "NoTrade";
    case TradeRegime::Sell:
      return "Sell";
  }
  return "Unknown";
}

double buy_band(double y, double epsilon) { return epsilon / (1.0 + epsilon * y); }
double sell_band(double y, double epsilon) { return -epsilon / (1.0 - epsilon * y); }

TradeRegime classify(double y, double q, double epsilon) {
  if (q > buy_band(y, epsilon)) return TradeRegime::Buy;
  if (q < sell_band(y, epsilon)) return TradeRegime::Sell;
  return TradeRegime::NoTrade;
}

double slope_in_regime(const OdeContext& ctx, TradeRegime regime, double y, double q) {
  check_point(y, q);
  const MarketParams& p = ctx.params;
  const double var = p.sigma * p.sigma;
  const double omy = 1.0 - y;
  const double lin = ctx.beta - p.mu * y + 0.5 * p.gamma * var * y * y -
                     y * omy * (p.mu - p.gamma * var * y) * q;
  const double denom = var * y * y * omy * omy;
  return 2.0 * (lin - friction(p, regime, y, q).value) / denom - (1.0 - p.gamma) * q * q;
}

double slope(const OdeContext& ctx, double y, double q) {
  return slope_in_regime(ctx, classify(y, q, ctx.params.epsilon), y, q);
}

double slope_dq(const OdeContext& ctx, double y, double q) {
  check_point(y, q);
  const MarketParams& p = ctx.params;
  const double var = p.sigma * p.sigma;
  const double omy = 1.0 - y;
  const double denom = var * y * y * omy * omy;
  const Friction fr = friction(p, classify(y, q, p.epsilon), y, q);
  return 2.0 * (-y * omy * (p.mu - p.gamma * var * y) - fr.dq) / denom -
         2.0 * (1.0 - p.gamma) * q;
}

OdeResidual ode_residual(const OdeContext& ctx, double y, double q, double dq) {
  const MarketParams& p = ctx.params;
  const double var = p.sigma * p.sigma;
  const double omy = 1.0 - y;
  const double half_d = 0.5 * var * y * y * omy * omy;
  const double terms[] = {
      -ctx.beta,
      p.mu * y,
      -0.5 * p.gamma * var * y * y,
      y * omy * (p.mu - p.gamma * var * y) * q,
      half_d * dq,
      half_d * (1.0 - p.gamma) * q * q,
      friction(p, classify(y, q, p.epsilon), y, q).value,
  };
  OdeResidual r;
  for (double t : terms) {
    r.residual += t;
    r.scale = std::max(r.scale, std::fabs(t));
  }
  return r;
}

BoundaryStart boundary_value_0(const MarketParams& p, double beta) {
  if (!(beta > 0.0)) throw DomainError("boundary derivative at y = 0 needs beta > 0");
  const double q0 = p.epsilon + 2.0 * std::sqrt(p.lambda * beta);
  const double dq0 = -std::sqrt(p.lambda / beta) * (p.mu + (p.mu + beta) * q0) - p.epsilon * q0;
  return {q0, dq0};
}

double boundary_value_1(const MarketParams& p, double beta) {
  const double d = -p.gamma * p.sigma * p.sigma - 2.0 * beta + 2.0 * p.mu;
  const double ld = p.lambda * d;
  const double radicand = ld * (ld - 2.0 + 2.0 * p.epsilon);
  if (radicand < 0.0) {
    std::ostringstream os;
    os << "negative radicand " << radicand << " in q(1-) for beta = " << beta;
    throw DomainError(os.str());
  }
  const double one_m = 1.0 - p.epsilon;
  return (ld - p.epsilon * one_m - std::sqrt(radicand)) / (one_m * one_m);
}

double pointwise_optimal_turnover(double y, double q, const MarketParams& p) {
  if (q * y >= 1.0) throw DomainError("turnover undefined for q y >= 1");
  const double v = q / (1.0 - y * q);
  if (std::fabs(v) <= p.epsilon) return 0.0;
  if (p.lambda <= 0.0) throw DomainError("turnover outside the band needs lambda > 0");
  return v > 0.0 ? (v - p.epsilon) / (2.0 * p.lambda) : (v + p.epsilon) / (2.0 * p.lambda);
}

}  // namespace rebal
