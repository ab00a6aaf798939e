#include "rebal/market_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "rebal/errors.hpp"

namespace rebal {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error("invalid market parameters: " + join(violations)),
      violations_(std::move(violations)) {}

MarketParams validate(const MarketParams& params) {
  std::vector<std::string> violations;
  const auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) {
      violations.emplace_back(std::string(name) + " must be finite");
      return false;
    }
    return true;
  };

  finite(params.mu, "mu");
  if (finite(params.sigma, "sigma") && !(params.sigma > 0.0)) {
    violations.emplace_back("sigma must be positive");
  }
  if (finite(params.gamma, "gamma")) {
    if (!(params.gamma > 0.0)) {
      violations.emplace_back("gamma must be positive");
    } else if (params.gamma == 1.0) {
      violations.emplace_back("gamma must differ from 1 (power utility only, log utility excluded)");
    }
  }
  if (finite(params.epsilon, "epsilon")) {
    if (params.epsilon < 0.0) {
      violations.emplace_back("epsilon must be non-negative");
    } else if (params.epsilon >= 1.0) {
      violations.emplace_back("epsilon must be below 1");
    }
  }
  if (finite(params.lambda, "lambda") && params.lambda < 0.0) {
    violations.emplace_back("lambda must be non-negative");
  }
  if (violations.empty() && !std::isfinite(params.merton_weight())) {
    violations.emplace_back("merton weight mu/(gamma sigma^2) must be finite");
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return params;
}

FrictionlessBaseline baseline(const MarketParams& params) {
  const double var = params.sigma * params.sigma;
  return FrictionlessBaseline{
      .merton_weight = params.mu / (params.gamma * var),
      .frictionless_esr = params.mu * params.mu / (2.0 * params.gamma * var),
      .full_safe_esr = 0.0,
      .full_risky_esr = params.mu - params.gamma * var / 2.0,
  };
}

MarketRegime degenerate_regime(const MarketParams& params) {
  const double y_star = params.merton_weight();
  if (y_star <= 0.0) return MarketRegime::FullSafe;
  if (y_star >= 1.0) return MarketRegime::FullRisky;
  return MarketRegime::Interior;
}

double buy_and_hold_esr(const MarketParams& params, MarketRegime regime) {
  switch (regime) {
    case MarketRegime::FullSafe:
      return 0.0;
    case MarketRegime::FullRisky:
      return baseline(params).full_risky_esr;
    case MarketRegime::Interior:
      break;
  }
  throw DomainError("buy-and-hold is not optimal in the interior regime");
}

const char* to_string(MarketRegime regime) {
  switch (regime) {
    case MarketRegime::Interior:
      return "Interior";
    case MarketRegime::FullSafe:
      return "FullSafe";
    case MarketRegime::FullRisky:
      return "FullRisky";
  }
  return "Unknown";
}

WelfareBracket welfare_bracket(const MarketParams& params) {
  const auto b = baseline(params);
  return {std::max(0.0, b.full_risky_esr), b.frictionless_esr};
}

MarketParams params_from_json(const nlohmann::json& doc) {
  static constexpr std::array<std::string_view, 5> kFields = {"mu", "sigma", "gamma", "epsilon",
                                                              "lambda"};
  if (!doc.is_object()) throw ValidationError({"parameter document must be a JSON object"});

  std::vector<std::string> violations;
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      violations.push_back("unknown field '" + key + "'");
    }
  }
  std::array<double, 5> values{};
  for (std::size_t i = 0; i < kFields.size(); ++i) {
    const std::string key(kFields[i]);
    const auto it = doc.find(key);
    if (it == doc.end()) {
      violations.push_back("missing field '" + key + "'");
    } else if (!it->is_number()) {
      violations.push_back("field '" + key + "' must be a number");
    } else {
      values[i] = it->get<double>();
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  return validate(MarketParams{values[0], values[1], values[2], values[3], values[4]});
}

nlohmann::json to_json(const MarketParams& params) {
  return nlohmann::json{{"mu", params.mu},
                        {"sigma", params.sigma},
                        {"gamma", params.gamma},
                        {"epsilon", params.epsilon},
                        {"lambda", params.lambda}};
}

}  // namespace rebal
