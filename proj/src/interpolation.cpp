#include "rebal/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "rebal/errors.hpp"

namespace rebal {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> f)
    : x_(std::move(x)), f_(std::move(f)) {
  check();
  const std::size_t n = x_.size();
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = (f_[1] - f_[0]) / (x_[1] - x_[0]);
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double s0 = (f_[i] - f_[i - 1]) / (x_[i] - x_[i - 1]);
    const double s1 = (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
    d_[i] = s0 * s1 <= 0.0 ? 0.0 : 0.5 * (s0 + s1);
  }
  d_[0] = (f_[1] - f_[0]) / (x_[1] - x_[0]);
  d_[n - 1] = (f_[n - 1] - f_[n - 2]) / (x_[n - 1] - x_[n - 2]);
  limit();
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> f, std::vector<double> df)
    : x_(std::move(x)), f_(std::move(f)), d_(std::move(df)) {
  check();
  if (d_.size() != x_.size()) throw DomainError("interpolant: slope count differs from nodes");
  limit();
}

void MonotoneCubic::check() const {
  if (x_.size() < 2 || x_.size() != f_.size()) {
    throw DomainError("interpolant needs at least two nodes with matching values");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw DomainError("interpolant nodes must increase strictly");
  }
}

void MonotoneCubic::limit() {
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double secant = (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
    if (secant == 0.0) {
      d_[i] = d_[i + 1] = 0.0;
      continue;
    }
    if (d_[i] * secant < 0.0) d_[i] = 0.0;
    if (d_[i + 1] * secant < 0.0) d_[i + 1] = 0.0;
    const double a = d_[i] / secant;
    const double b = d_[i + 1] / secant;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      d_[i] = tau * a * secant;
      d_[i + 1] = tau * b * secant;
    }
  }
}

std::size_t MonotoneCubic::interval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin(), 1));
  return std::min(idx, x_.size() - 1) - 1;
}

double MonotoneCubic::operator()(double x) const {
  if (x <= x_.front()) return f_.front();
  if (x >= x_.back()) return f_.back();
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
         (-2 * t3 + 3 * t2) * f_[i + 1] + (t3 - t2) * h * d_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  if (x < x_.front() || x > x_.back()) return 0.0;
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) * f_[i] / h + (3 * t2 - 4 * t + 1) * d_[i] +
         (-6 * t2 + 6 * t) * f_[i + 1] / h + (3 * t2 - 2 * t) * d_[i + 1];
}

}  // namespace rebal
