#include "rebal/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "rebal/errors.hpp"
#include "rebal/parallel.hpp"
#include "rebal/sdirk.hpp"
#include "rebal/special_functions.hpp"

namespace rebal {

namespace {

constexpr double kWhittakerM = -0.25;

double far_field_slope(const AsymptoticInputs& in) {
  const MarketParams& p = in.params;
  return std::sqrt(2.0 * in.K * p.gamma * p.sigma * p.sigma);
}

// A root is genuine only if the residual there is small; a sign change
// across a pole of the W ratio leaves a large residual behind.
constexpr double kRootResidual = 1e-6;

// The stiff Riccati fallback costs roughly rtol^(-1/2) steps. Scan points
// only need the sign of r_B - 1, so they use a looser tolerance; roots are
// refined at the full one.
constexpr double kScanRiccatiRtol = 1e-8;

}  // namespace

AsymptoticInputs make_asymptotic_inputs(const MarketParams& params, std::optional<double> k_override) {
  if (k_override) {
    if (!(*k_override > 0.0)) throw DomainError("K must be positive");
    return {params, *k_override};
  }
  if (!(params.epsilon > 0.0)) throw DomainError("asymptotic expansion needs epsilon > 0");
  if (!(params.lambda > 0.0)) throw DomainError("asymptotic expansion needs lambda > 0");
  return {params, params.lambda / std::pow(params.epsilon, 4.0 / 3.0)};
}

double riccati_coefficient(const MarketParams& p) {
  const double y = p.merton_weight();
  return 0.5 * p.sigma * p.sigma * y * y * (1.0 - y) * (1.0 - y);
}

double welfare_coefficient(double z_minus, const MarketParams& p) {
  return p.gamma * p.sigma * p.sigma * z_minus * z_minus / 6.0 - riccati_coefficient(p) / z_minus;
}

double midfield_r(double z, double l, const MarketParams& p) {
  return (p.gamma * p.sigma * p.sigma * z * z * z / 6.0 - l * z) / riccati_coefficient(p);
}

WhittakerConstants whittaker_constants(const AsymptoticInputs& in, double l) {
  const double A2 = 2.0 * riccati_coefficient(in.params);  // sigma^2 y*^2 (1-y*)^2
  WhittakerConstants w;
  w.S = far_field_slope(in);
  w.a = 1.0 / (2.0 * in.K * A2);
  w.c = 2.0 * l / A2;
  w.k = 0.25 * w.c / w.S;
  w.C = 1.0 / (2.0 * w.a) + w.c / (2.0 * w.a) / w.S;
  return w;
}

namespace {

// r_B together with the sign of the W(k) denominator; a change in that
// sign between two scan points marks a pole rather than a root.
struct RBuy {
  double r;
  int denominator_sign;
};

RBuy r_buy_whittaker_signed(double z, double l, const AsymptoticInputs& in) {
  if (!(z < 0.0)) throw DomainError("r_B is defined for z < 0");
  const WhittakerConstants w = whittaker_constants(in, l);
  const double x = w.a * w.S * z * z;
  const sf::SignedLog num = sf::whittaker_w_log(w.k + 1.0, kWhittakerM, x);
  const sf::SignedLog den = sf::whittaker_w_log(w.k, kWhittakerM, x);
  if (den.sign == 0) return {std::numeric_limits<double>::infinity(), 0};
  const double ratio =
      num.sign == 0 ? 0.0
                    : static_cast<double>(num.sign * den.sign * std::exp(num.log_abs - den.log_abs));
  return {-w.C / z + 1.0 + w.S * z - 2.0 / (w.a * z) * ratio, den.sign};
}

}  // namespace

double r_buy_whittaker(double z, double l, const AsymptoticInputs& in) {
  return r_buy_whittaker_signed(z, l, in).r;
}

double r_buy_riccati(double z, double l, const AsymptoticInputs& in, double rtol) {
  if (!(z < 0.0)) throw DomainError("r_B is defined for z < 0");
  const MarketParams& p = in.params;
  const double A = riccati_coefficient(p);
  const double g = p.gamma * p.sigma * p.sigma;
  const double S = far_field_slope(in);
  const double z_far = -10.0 * std::max(1.0, std::fabs(z));

  const auto f = [&](double t, double r) {
    return (0.5 * g * t * t - l - (r - 1.0) * (r - 1.0) / (4.0 * in.K)) / A;
  };
  const auto dfdr = [&](double, double r) { return -(r - 1.0) / (2.0 * in.K * A); };

  ode::StepOptions so;
  so.rtol = rtol;
  so.atol = 1e-2 * rtol;
  so.h_init = 1e-6;
  so.h_max = 0.05 * std::fabs(z_far);
  bool diverged = false;
  const auto observe = [&](double, double r) {
    if (r < -1e12) {
      diverged = true;
      return false;
    }
    return true;
  };
  const ode::Outcome out = ode::integrate(f, dfdr, z_far, -S * z_far + 1.0, z, so, observe);
  // Running off to -infinity means the solution passed a pole before z.
  if (diverged) return -std::numeric_limits<double>::infinity();
  if (out.status != ode::Status::Completed) {
    std::ostringstream os;
    os << "Riccati integration for r_B failed at z = " << out.y;
    throw NumericalFailure(os.str());
  }
  return out.q;
}

namespace {

// Riccati results carry denominator sign 0: unknown.
RBuy r_buy_signed(double z, double l, const AsymptoticInputs& in, RPath* used,
                  double riccati_rtol = kRiccatiRtol) {
  try {
    const RBuy r = r_buy_whittaker_signed(z, l, in);
    if (std::isfinite(r.r)) {
      if (used) *used = RPath::Whittaker;
      return r;
    }
  } catch (const LossOfSignificance&) {
  } catch (const NumericalFailure&) {
  }
  if (used) *used = RPath::Riccati;
  try {
    return {r_buy_riccati(z, l, in, riccati_rtol), 0};
  } catch (const NumericalFailure& e) {
    std::ostringstream os;
    os << "r_B(" << z << ", " << l << "): Whittaker and Riccati paths both failed (" << e.what()
       << ")";
    throw NumericalFailure(os.str());
  }
}

}  // namespace

double r_buy(double z, double l, const AsymptoticInputs& in, RPath* used) {
  return r_buy_signed(z, l, in, used).r;
}

double r_sell(double z, double l, const AsymptoticInputs& in) { return -r_buy(-z, l, in); }

AsymptoticSolution find_z_minus(const AsymptoticInputs& in, const ScanOptions& opts) {
  const MarketParams& p = in.params;
  if (!(in.K > 0.0)) throw DomainError("K must be positive");
  const double y_star = p.merton_weight();
  if (!(y_star > 0.0 && y_star < 1.0)) throw DomainError("expansion needs 0 < y* < 1");

  const double z_lo =
      opts.z_scan > 0.0 ? -opts.z_scan : -50.0 * std::pow(y_star * (1.0 - y_star), 2.0 / 3.0);
  const double z_hi = -opts.z_eps;
  const int n = std::max(opts.points, 2);

  const auto residual = [&](double z, RPath* used) {
    return r_buy(z, welfare_coefficient(z, p), in, used) - 1.0;
  };

  std::vector<double> zs(n), gs(n);
  std::vector<int> den_sign(n, 0);
  std::vector<unsigned char> riccati(n, 0);
#pragma omp parallel for schedule(dynamic, 64) num_threads(thread_budget()) if (opts.parallel)
  for (int i = 0; i < n; ++i) {
    const double z = z_lo + (z_hi - z_lo) * i / (n - 1);
    zs[i] = z;
    RPath used = RPath::Whittaker;
    try {
      const RBuy r = r_buy_signed(z, welfare_coefficient(z, p), in, &used, kScanRiccatiRtol);
      gs[i] = r.r - 1.0;
      den_sign[i] = r.denominator_sign;
    } catch (const NumericalFailure&) {
      gs[i] = std::numeric_limits<double>::quiet_NaN();
    }
    riccati[i] = used == RPath::Riccati;
  }

  AsymptoticSolution sol;
  sol.inputs = in;
  for (unsigned char r : riccati) sol.riccati_evaluations += r;

  const auto tol = [&](double a, double b) { return std::fabs(b - a) <= opts.z_tol; };
  for (int i = 0; i + 1 < n; ++i) {
    const double g0 = gs[i];
    const double g1 = gs[i + 1];
    if (std::isnan(g0) || std::isnan(g1)) continue;
    if (g0 == 0.0) {
      sol.roots.push_back(zs[i]);
      continue;
    }
    if (std::signbit(g0) == std::signbit(g1)) continue;
    const bool pole = den_sign[i] * den_sign[i + 1] < 0;
    if (std::isinf(g0) || std::isinf(g1) || pole) {
      sol.poles.push_back(0.5 * (zs[i] + zs[i + 1]));
      continue;
    }
    std::uintmax_t iters = 200;
    double root;
    try {
      const auto [a, b] = boost::math::tools::toms748_solve(
          [&](double z) { return residual(z, nullptr); }, zs[i], zs[i + 1], g0, g1, tol, iters);
      root = 0.5 * (a + b);
    } catch (const std::exception&) {
      sol.poles.push_back(0.5 * (zs[i] + zs[i + 1]));
      continue;
    }
    double r;
    try {
      r = residual(root, nullptr);
    } catch (const NumericalFailure&) {
      r = std::numeric_limits<double>::infinity();
    }
    if (std::fabs(r) <= kRootResidual) {
      sol.roots.push_back(root);
    } else {
      sol.poles.push_back(root);
    }
  }

  if (sol.roots.empty()) {
    std::vector<std::pair<double, double>> trace;
    trace.reserve(n);
    for (int i = 0; i < n; ++i) trace.emplace_back(zs[i], gs[i]);
    std::ostringstream os;
    os << "r_B(z, l(z)) = 1 has no root on [" << z_lo << ", " << z_hi << "] for K = " << in.K;
    throw NoRootError(os.str(), std::move(trace));
  }
  std::sort(sol.roots.begin(), sol.roots.end());

  const double zm = sol.roots.front();
  const WhittakerConstants w = whittaker_constants(in, welfare_coefficient(zm, p));
  const double eps = p.epsilon;
  const double e13 = std::cbrt(eps);
  sol.z_minus = zm;
  sol.z_plus = -zm;
  sol.l = welfare_coefficient(zm, p);
  sol.a = w.a;
  sol.c = w.c;
  sol.k = w.k;
  sol.x_minus = w.a * w.S * zm * zm;
  const double m = kWhittakerM;
  const double x = sol.x_minus;
  const double kk = w.k;
  sol.D = 0.5 * (1.0 - w.C / (w.S * zm * zm));
  sol.E = sol.D * (sol.D - 2.0 / x -
                   1.0 / (x * x) *
                       (1.0 / sol.D * (m - (kk + 1.0) + 0.5) * (m + (kk + 1.0) - 0.5) -
                        (2.0 * (kk + 1.0) * x - x * x)));
  sol.F = w.C / (zm * zm) + w.S - 2.0 * w.S * (sol.D + 2.0 * w.a * w.S * sol.E * zm * zm);
  sol.beta_approx = baseline(p).frictionless_esr - e13 * e13 * sol.l;
  sol.y_minus_approx = y_star + zm * e13;
  sol.y_plus_approx = y_star - zm * e13;
  return sol;
}

double asymptotic_policy(double y, const AsymptoticSolution& sol) {
  const MarketParams& p = sol.inputs.params;
  const double e13 = std::cbrt(p.epsilon);
  const double z = (y - p.merton_weight()) / e13;
  const double scale = 1.0 / (2.0 * sol.inputs.K * e13);
  if (z < sol.z_minus) return scale * (r_buy(z, sol.l, sol.inputs) - 1.0);
  if (z > sol.z_plus) return scale * (r_sell(z, sol.l, sol.inputs) + 1.0);
  return 0.0;
}

NearBoundarySlope near_boundary_slope(const AsymptoticSolution& sol) {
  const double e23 = std::pow(sol.inputs.params.epsilon, 2.0 / 3.0);
  const double s = sol.F / (2.0 * sol.inputs.K * e23);
  return {s, s};
}

}  // namespace rebal
