#pragma once

// Gamma, Kummer 1F1 and Whittaker M/W on the real line, restricted to what
// the small-cost expansion needs: real k, m = +-1/4 and x > 0.
//
// Below kSeriesSwitch the Whittaker W function is evaluated from its
// defining combination of two M functions in long double, with a monitor
// on the digits lost to cancellation. Above it, W uses the large-x
// asymptotic series, truncated at its smallest term.

namespace rebal::sf {

inline constexpr double kSeriesSwitch = 30.0;
inline constexpr double kMaxCancelledDigits = 10.0;
/// Relative truncation error accepted from the large-x expansion of W.
inline constexpr double kAsymptoticTolerance = 1e-6;

/// A real number stored as sign * exp(log_abs). sign == 0 encodes zero.
struct SignedLog {
  int sign = 0;
  long double log_abs = 0.0L;

  double value() const;
};

/// Euler Gamma. Throws PoleError at non-positive integers.
double gamma_fn(double x);

/// log|Gamma(x)| with the sign of Gamma(x). Throws PoleError at poles.
SignedLog log_gamma(long double x);

/// 1/Gamma(x); exactly zero (sign 0) at the poles of Gamma.
SignedLog log_reciprocal_gamma(long double x);

struct KummerSum {
  long double value = 0.0L;
  /// Sum of |terms|; abs_sum/|value| measures cancellation inside the series.
  long double abs_sum = 0.0L;
  int terms = 0;
};

/// Compensated summation of the 1F1 series without a range check.
KummerSum kummer_series(long double a, long double b, long double x);

/// Kummer 1F1(a, b, x) for |x| <= kSeriesSwitch. Throws PoleError when b is
/// a non-positive integer and RangeError beyond the switch point.
double kummer_1f1(double a, double b, double x);

/// M(k, m, x) = x^(1/2+m) e^(-x/2) 1F1(1/2+m-k, 1+2m, x), x > 0.
double whittaker_m(double k, double m, double x);

/// W(k, m, x) from the defining M-combination, any x > 0. Throws
/// LossOfSignificance when more than kMaxCancelledDigits cancel.
SignedLog whittaker_w_series(double k, double m, double x);

/// W(k, m, x) from the large-x expansion x^k e^(-x/2) 2F0(...; -1/x).
/// Throws NumericalFailure if the smallest term exceeds kAsymptoticTolerance.
SignedLog whittaker_w_asymptotic(double k, double m, double x);

/// W(k, m, x) choosing the series below kSeriesSwitch and the expansion above.
SignedLog whittaker_w_log(double k, double m, double x);

/// W(k, m, x) as a double; may under- or overflow where the log form does not.
double whittaker_w(double k, double m, double x);

/// W(k_num, m, x) / W(k_den, m, x) computed in log form.
double whittaker_w_ratio(double k_num, double k_den, double m, double x);

}  // namespace rebal::sf
