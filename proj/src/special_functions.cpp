#include "rebal/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "rebal/errors.hpp"

namespace rebal::sf {

namespace {

constexpr long double kPi = std::numbers::pi_v<long double>;
constexpr long double kHalfLog2Pi = 0.918938533204672741780329736405617639861L;

// Shift target for the Stirling series; at z >= 20 ten correction terms
// leave a truncation error below 1e-22.
constexpr long double kStirlingFloor = 20.0L;

// B_{2j} / (2j (2j - 1)), j = 1..10.
constexpr std::array<long double, 10> kStirlingCoefficients = {
    1.0L / 12.0L,
    -1.0L / 360.0L,
    1.0L / 1260.0L,
    -1.0L / 1680.0L,
    1.0L / 1188.0L,
    -691.0L / 360360.0L,
    1.0L / 156.0L,
    -3617.0L / 122400.0L,
    43867.0L / 244188.0L,
    -174611.0L / 125400.0L,
};

bool is_nonpositive_integer(long double x) { return x <= 0.0L && x == std::floor(x); }

long double sin_pi(long double x) {
  const long double r = x - 2.0L * std::nearbyint(x / 2.0L);  // exact, r in [-1, 1]
  return std::sin(kPi * r);
}

long double stirling_log_gamma(long double z) {
  const long double inv = 1.0L / z;
  const long double inv2 = inv * inv;
  long double series = 0.0L;
  long double power = inv;
  for (long double c : kStirlingCoefficients) {
    series += c * power;
    power *= inv2;
  }
  return (z - 0.5L) * std::log(z) - z + kHalfLog2Pi + series;
}

// log Gamma(x) for x > 0 via upward recurrence into the Stirling range.
long double log_gamma_positive(long double x) {
  if (x >= kStirlingFloor) return stirling_log_gamma(x);
  long double product = 1.0L;
  long double z = x;
  while (z < kStirlingFloor) {
    product *= z;
    z += 1.0L;
  }
  return stirling_log_gamma(z) - std::log(product);
}

// Neumaier's variant of Kahan summation.
struct CompensatedSum {
  long double sum = 0.0L;
  long double compensation = 0.0L;

  void add(long double v) {
    const long double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  long double total() const { return sum + compensation; }
};

SignedLog multiply(SignedLog a, SignedLog b) {
  if (a.sign == 0 || b.sign == 0) return {};
  return {a.sign * b.sign, a.log_abs + b.log_abs};
}

SignedLog from_value(long double v) {
  if (v == 0.0L) return {};
  return {v > 0.0L ? 1 : -1, std::log(std::fabs(v))};
}

void check_whittaker_args(double m, double x) {
  if (!(x > 0.0)) throw DomainError("Whittaker functions require x > 0");
  const double two_m = 2.0 * m;
  if (two_m == std::round(two_m)) {
    throw DomainError("Whittaker W requires 2m to be non-integer");
  }
}

// log of x^(1/2+m) e^(-x/2) 1F1(1/2+m-k, 1+2m, x), plus the cancellation
// ratio of the series.
struct LogM {
  SignedLog value;
  long double condition;
};

LogM log_whittaker_m(long double k, long double m, long double x) {
  const KummerSum f = kummer_series(0.5L + m - k, 1.0L + 2.0L * m, x);
  const long double prefactor = (0.5L + m) * std::log(x) - 0.5L * x;
  SignedLog v = from_value(f.value);
  if (v.sign != 0) v.log_abs += prefactor;
  const long double condition =
      f.value == 0.0L ? std::numeric_limits<long double>::infinity() : f.abs_sum / std::fabs(f.value);
  return {v, condition};
}

}  // namespace

double SignedLog::value() const {
  if (sign == 0) return 0.0;
  return static_cast<double>(sign * std::exp(log_abs));
}

SignedLog log_gamma(long double x) {
  if (is_nonpositive_integer(x)) {
    std::ostringstream os;
    os << "Gamma has a pole at " << static_cast<double>(x);
    throw PoleError(os.str());
  }
  if (x > 0.0L) return {1, log_gamma_positive(x)};
  // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x), with Gamma(1-x) > 0.
  const long double s = sin_pi(x);
  return {s > 0.0L ? 1 : -1, std::log(kPi) - std::log(std::fabs(s)) - log_gamma_positive(1.0L - x)};
}

SignedLog log_reciprocal_gamma(long double x) {
  if (is_nonpositive_integer(x)) return {};
  const SignedLog g = log_gamma(x);
  return {g.sign, -g.log_abs};
}

double gamma_fn(double x) {
  if (std::isnan(x)) return x;
  return log_gamma(static_cast<long double>(x)).value();
}

KummerSum kummer_series(long double a, long double b, long double x) {
  if (is_nonpositive_integer(b)) {
    std::ostringstream os;
    os << "1F1 undefined for b = " << static_cast<double>(b);
    throw PoleError(os.str());
  }
  constexpr int kMaxTerms = 200000;
  constexpr long double kRelTol = 1e-21L;

  CompensatedSum sum;
  sum.add(1.0L);
  long double abs_sum = 1.0L;
  long double term = 1.0L;
  int n = 0;
  for (; n < kMaxTerms; ++n) {
    const long double ratio = (a + n) * x / ((b + n) * (n + 1));
    term *= ratio;
    if (term == 0.0L) break;  // a is a non-positive integer: polynomial
    sum.add(term);
    abs_sum += std::fabs(term);
    // Past this point every further ratio is below 1/2, so the tail is
    // bounded by the current term.
    if (std::fabs(ratio) < 0.5L && n + 1 > std::fabs(x) &&
        std::fabs(term) <= kRelTol * std::fabs(sum.total())) {
      break;
    }
  }
  if (n == kMaxTerms) throw NumericalFailure("1F1 series did not converge");
  return {sum.total(), abs_sum, n + 1};
}

double kummer_1f1(double a, double b, double x) {
  if (std::fabs(x) > kSeriesSwitch) {
    throw RangeError("1F1 series evaluation limited to |x| <= 30; use the asymptotic path");
  }
  const KummerSum direct = kummer_series(a, b, x);
  if (x >= 0.0) return static_cast<double>(direct.value);
  // Alternating series: Kummer's transformation e^x 1F1(b-a, b, -x) is
  // usually far better conditioned. Keep whichever cancels less.
  const KummerSum flipped = kummer_series(static_cast<long double>(b) - a, b, -x);
  const auto condition = [](const KummerSum& s) {
    return s.value == 0.0L ? std::numeric_limits<long double>::infinity()
                           : s.abs_sum / std::fabs(s.value);
  };
  if (condition(flipped) < condition(direct)) {
    return static_cast<double>(std::exp(static_cast<long double>(x)) * flipped.value);
  }
  return static_cast<double>(direct.value);
}

double whittaker_m(double k, double m, double x) {
  if (!(x > 0.0)) throw DomainError("Whittaker M requires x > 0");
  if (std::fabs(x) > kSeriesSwitch) {
    throw RangeError("Whittaker M series evaluation limited to x <= 30");
  }
  return log_whittaker_m(k, m, x).value.value();
}

SignedLog whittaker_w_series(double k, double m, double x) {
  check_whittaker_args(m, x);
  const long double kl = k;
  const long double ml = m;
  const long double xl = x;

  // W = pi/sin(2 m pi) * ( -M(k,m,x) / (G(1/2-m-k) G(1+2m))
  //                        + M(k,-m,x) / (G(1/2+m-k) G(1-2m)) )
  const long double s = sin_pi(2.0L * ml);
  const SignedLog pre = {s > 0.0L ? 1 : -1, std::log(kPi) - std::log(std::fabs(s))};

  const LogM m_plus = log_whittaker_m(kl, ml, xl);
  const LogM m_minus = log_whittaker_m(kl, -ml, xl);

  SignedLog t1 = multiply(multiply(pre, m_plus.value),
                          multiply(log_reciprocal_gamma(0.5L - ml - kl),
                                   log_reciprocal_gamma(1.0L + 2.0L * ml)));
  t1.sign = -t1.sign;
  const SignedLog t2 = multiply(multiply(pre, m_minus.value),
                                multiply(log_reciprocal_gamma(0.5L + ml - kl),
                                         log_reciprocal_gamma(1.0L - 2.0L * ml)));

  long double condition = 1.0L;
  if (t1.sign != 0) condition = std::max(condition, m_plus.condition);
  if (t2.sign != 0) condition = std::max(condition, m_minus.condition);

  if (t1.sign == 0 && t2.sign == 0) return {};
  if (t1.sign == 0 || t2.sign == 0) {
    const SignedLog only = t1.sign != 0 ? t1 : t2;
    const double digits = static_cast<double>(std::log10(condition));
    if (digits > kMaxCancelledDigits) {
      throw LossOfSignificance("Whittaker W series lost too many digits", digits);
    }
    return only;
  }

  const long double top = std::max(t1.log_abs, t2.log_abs);
  const long double w =
      t1.sign * std::exp(t1.log_abs - top) + t2.sign * std::exp(t2.log_abs - top);
  const double digits = w == 0.0L ? std::numeric_limits<double>::infinity()
                                  : static_cast<double>(std::log10(condition / std::fabs(w)));
  if (digits > kMaxCancelledDigits) {
    throw LossOfSignificance("Whittaker W combination cancelled too many digits", digits);
  }
  return {w > 0.0L ? 1 : -1, top + std::log(std::fabs(w))};
}

SignedLog whittaker_w_asymptotic(double k, double m, double x) {
  check_whittaker_args(m, x);
  const long double kl = k;
  const long double ml = m;
  const long double xl = x;
  const long double p = 0.5L - kl + ml;
  const long double q = 0.5L - kl - ml;

  // Terms may grow before they shrink when |k| is comparable to x, and the
  // series diverges once n passes about x. Sum up to the smallest term at
  // or beyond the second correction and report that term as the error.
  const int n_max = static_cast<int>(std::min(10000.0L, 2.0L * xl + 2.0L * std::fabs(kl) + 40.0L));
  std::vector<long double> terms{1.0L};
  terms.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n < n_max; ++n) {
    const long double next = terms.back() * (p + n) * (q + n) / ((n + 1) * -xl);
    terms.push_back(next);
    if (next == 0.0L) break;  // terminating expansion: exact
    if (n >= 3 && std::fabs(next) <= 1e-22L) break;
  }
  std::size_t cut = std::min<std::size_t>(3, terms.size() - 1);
  for (std::size_t n = cut; n < terms.size(); ++n) {
    if (std::fabs(terms[n]) < std::fabs(terms[cut])) cut = n;
  }
  CompensatedSum sum;
  long double largest = 0.0L;
  for (std::size_t n = 0; n < cut; ++n) {
    sum.add(terms[n]);
    largest = std::max(largest, std::fabs(terms[n]));
  }
  long double omitted = std::fabs(terms[cut]);
  if (terms[cut] == 0.0L || cut + 1 == terms.size()) {
    // Ran to an exact zero or to the term cap: include the last term.
    sum.add(terms[cut]);
    omitted = terms[cut] == 0.0L ? 0.0L : std::fabs(terms[cut]);
  }
  const long double total = sum.total();
  // When |k| is large against sqrt(x) the early terms grow enormously and
  // cancel; treat that like the series path does.
  if (total != 0.0L && std::log10(largest / std::fabs(total)) > kMaxCancelledDigits) {
    throw LossOfSignificance("large-x expansion of W cancelled too many digits",
                             static_cast<double>(std::log10(largest / std::fabs(total))));
  }
  if (total == 0.0L || omitted > kAsymptoticTolerance * std::fabs(total)) {
    std::ostringstream os;
    os << "large-x expansion of W(" << k << ", " << m << ", " << x << ") not accurate enough";
    throw NumericalFailure(os.str());
  }
  return {total > 0.0L ? 1 : -1, kl * std::log(xl) - 0.5L * xl + std::log(std::fabs(total))};
}

SignedLog whittaker_w_log(double k, double m, double x) {
  return x <= kSeriesSwitch ? whittaker_w_series(k, m, x) : whittaker_w_asymptotic(k, m, x);
}

double whittaker_w(double k, double m, double x) { return whittaker_w_log(k, m, x).value(); }

double whittaker_w_ratio(double k_num, double k_den, double m, double x) {
  const SignedLog num = whittaker_w_log(k_num, m, x);
  const SignedLog den = whittaker_w_log(k_den, m, x);
  if (den.sign == 0) throw DomainError("Whittaker W ratio: denominator vanishes");
  if (num.sign == 0) return 0.0;
  return static_cast<double>(num.sign * den.sign * std::exp(num.log_abs - den.log_abs));
}

}  // namespace rebal::sf
