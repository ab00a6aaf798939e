#pragma once

#include <vector>

namespace rebal {

/// Piecewise cubic Hermite interpolant on strictly increasing nodes. Node
/// derivatives are either supplied or estimated from secants; either way the
/// Fritsch-Carlson limiter is applied so monotone data stays monotone.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> f);
  MonotoneCubic(std::vector<double> x, std::vector<double> f, std::vector<double> df);

  /// Evaluation outside [front, back] clamps to the end values.
  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return f_; }
  const std::vector<double>& slopes() const { return d_; }
  bool empty() const { return x_.empty(); }

 private:
  void check() const;
  void limit();
  std::size_t interval(double x) const;

  std::vector<double> x_;
  std::vector<double> f_;
  std::vector<double> d_;
};

}  // namespace rebal
