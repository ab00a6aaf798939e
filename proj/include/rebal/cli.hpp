#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rebal/market_model.hpp"

namespace rebal {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNoMatch = 2;
inline constexpr int kNumerical = 3;
}  // namespace exit_code

/// Exact against asymptotic turnover on [y* - 3 eps^(1/3), y* + 3 eps^(1/3)].
struct Comparison {
  struct Row {
    double y;
    double u_exact;
    double u_asym;
    double abs_err;
    double rel_err;  // abs_err / max |u_exact| over the window
  };
  std::vector<Row> rows;
  double beta_exact = 0.0;
  double beta_asym = 0.0;
  double y_minus_exact = 0.0;
  double y_minus_asym = 0.0;
  double y_plus_exact = 0.0;
  double y_plus_asym = 0.0;
  double max_rel_err = 0.0;
};

Comparison compare_exact_asymptotic(const MarketParams& params, int points,
                                    std::optional<double> k_override = std::nullopt);

/// Entry point of the rebal tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rebal
