#pragma once

// Small-cost expansion around the Merton weight. With lambda = K eps^(4/3)
// the rescaled variables z = (y - y*) eps^(-1/3), q = eps r(z) and
// beta = mu^2/(2 gamma sigma^2) - eps^(2/3) l reduce the HJB equation to a
// Riccati equation on the buy side, solved by a ratio of Whittaker W
// functions, and an explicit cubic inside the no-trade band.

#include <optional>
#include <vector>

#include "rebal/market_model.hpp"

namespace rebal {

struct AsymptoticInputs {
  MarketParams params;
  double K = 0.0;  // lambda / eps^(4/3)
};

/// K = lambda eps^(-4/3), or the override when given. Needs eps > 0.
AsymptoticInputs make_asymptotic_inputs(const MarketParams& params,
                                        std::optional<double> k_override = std::nullopt);

/// sigma^2 y*^2 (1 - y*)^2 / 2, the coefficient of r' in the Riccati equation.
double riccati_coefficient(const MarketParams& params);

/// l as a function of the rescaled buy boundary, from r(z_-) = 1.
double welfare_coefficient(double z_minus, const MarketParams& params);

/// Explicit solution inside the band, (1/A)(gamma sigma^2 z^3/6 - l z).
double midfield_r(double z, double l, const MarketParams& params);

struct WhittakerConstants {
  double a = 0.0;
  double c = 0.0;
  double k = 0.0;
  double S = 0.0;  // sqrt(2 K gamma sigma^2), the far-field slope of r_B
  double C = 0.0;  // coefficient of -1/z in r_B
};
WhittakerConstants whittaker_constants(const AsymptoticInputs& in, double l);

enum class RPath { Whittaker, Riccati };

/// r_B(z, l) for z < 0 from the Whittaker ratio. Throws LossOfSignificance
/// or NumericalFailure when the special functions cannot deliver it.
double r_buy_whittaker(double z, double l, const AsymptoticInputs& in);

/// r_B(z, l) for z < 0 by integrating the Riccati equation from
/// z_far = -10 max(1, |z|) with the far-field start -S z_far + 1.
inline constexpr double kRiccatiRtol = 1e-10;
double r_buy_riccati(double z, double l, const AsymptoticInputs& in, double rtol = kRiccatiRtol);

/// Whittaker path with the Riccati integration as fallback.
double r_buy(double z, double l, const AsymptoticInputs& in, RPath* used = nullptr);

/// r_S(z) = r_B(z) - 2, evaluated through the odd symmetry as -r_B(-z).
double r_sell(double z, double l, const AsymptoticInputs& in);

struct AsymptoticSolution {
  AsymptoticInputs inputs;
  double z_minus = 0.0;
  double z_plus = 0.0;
  double l = 0.0;
  double a = 0.0;
  double c = 0.0;
  double k = 0.0;
  double x_minus = 0.0;
  double D = 0.0;
  double E = 0.0;
  double F = 0.0;
  double beta_approx = 0.0;
  double y_minus_approx = 0.0;
  double y_plus_approx = 0.0;
  /// Every root of r_B(z, l(z)) = 1 found on the scan, most negative first.
  std::vector<double> roots;
  /// Sign changes rejected because r_B has a pole there.
  std::vector<double> poles;
  /// Scan points where the Riccati fallback was needed.
  int riccati_evaluations = 0;
};

struct ScanOptions {
  double z_scan = 0.0;  // 0 selects 50 (y*(1-y*))^(2/3)
  double z_eps = 1e-4;
  int points = 20000;
  double z_tol = 1e-12;
  bool parallel = true;  // false: serial reference, same result bit for bit
};

/// Most negative root of r_B(z, l(z)) = 1 plus the derived constants.
/// Throws NoRootError with the scan trace when no root exists.
AsymptoticSolution find_z_minus(const AsymptoticInputs& in, const ScanOptions& opts = {});

/// Leading-order wealth turnover at risky weight y.
double asymptotic_policy(double y, const AsymptoticSolution& sol);

/// du/dy just outside y_- and y_+, F eps^(-2/3) / (2K) on both sides.
struct NearBoundarySlope {
  double buy = 0.0;
  double sell = 0.0;
};
NearBoundarySlope near_boundary_slope(const AsymptoticSolution& sol);

}  // namespace rebal
