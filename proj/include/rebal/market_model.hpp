#pragma once

#include <nlohmann/json.hpp>

namespace rebal {

/// Frictionless market plus the two trading frictions. Rates are annualised
/// decimals (0.08, not 8%).
struct MarketParams {
  double mu = 0.0;       // expected excess return
  double sigma = 0.0;    // volatility
  double gamma = 0.0;    // relative risk aversion, > 0 and != 1
  double epsilon = 0.0;  // relative half-spread
  double lambda = 0.0;   // price-impact coefficient (1/lambda is market depth)

  double merton_weight() const { return mu / (gamma * sigma * sigma); }

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

struct FrictionlessBaseline {
  double merton_weight = 0.0;
  double frictionless_esr = 0.0;
  double full_safe_esr = 0.0;
  double full_risky_esr = 0.0;
};

enum class MarketRegime { Interior, FullSafe, FullRisky };

/// Returns the parameters unchanged, or throws ValidationError naming every
/// violated constraint.
MarketParams validate(const MarketParams& params);

FrictionlessBaseline baseline(const MarketParams& params);

/// Buy-and-hold is optimal outside 0 < y* < 1.
MarketRegime degenerate_regime(const MarketParams& params);

/// Equivalent safe rate of the buy-and-hold optimum for a degenerate regime.
/// Throws DomainError for MarketRegime::Interior.
double buy_and_hold_esr(const MarketParams& params, MarketRegime regime);

const char* to_string(MarketRegime regime);

/// Lower and upper ends of the welfare bracket max{0, mu - gamma sigma^2/2}
/// and mu^2/(2 gamma sigma^2).
struct WelfareBracket {
  double low;
  double high;
};
WelfareBracket welfare_bracket(const MarketParams& params);

/// Parses {"mu", "sigma", "gamma", "epsilon", "lambda"}; any missing,
/// extra or non-numeric field is a ValidationError. The result is validated.
MarketParams params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MarketParams& params);

}  // namespace rebal
