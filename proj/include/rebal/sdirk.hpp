#pragma once

// Scalar L-stable SDIRK4(3) integrator (Hairer & Wanner, Solving ODEs II,
// Table 6.5, gamma = 1/4). The slope field here is stiff near y = 0 and
// y = 1 and inside both trading regions, so explicit schemes crawl.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "rebal/errors.hpp"

namespace rebal::ode {

struct StepOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-8;
  double h_max = 1e-2;
  double h_min = 1e-16;
  long max_steps = 2'000'000;
};

enum class Status { Completed, Stopped, StepUnderflow, MaxSteps };

struct Outcome {
  Status status = Status::Completed;
  double y = 0.0;
  double q = 0.0;
  long accepted = 0;
  long rejected = 0;
  /// Largest normalised local error among accepted steps.
  double max_error = 0.0;
  /// Message of the last evaluation failure, if any.
  std::string last_failure;
};

namespace detail {

inline constexpr int kStages = 5;
inline constexpr double kGamma = 0.25;
inline constexpr std::array<double, kStages> kC = {0.25, 0.75, 11.0 / 20.0, 0.5, 1.0};
inline constexpr std::array<std::array<double, kStages>, kStages> kA = {{
    {0.25, 0.0, 0.0, 0.0, 0.0},
    {0.5, 0.25, 0.0, 0.0, 0.0},
    {17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0},
    {371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0},
    {25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25},
}};
inline constexpr std::array<double, kStages> kBHat = {59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0,
                                                      -85.0 / 12.0, 0.0};

}  // namespace detail

/// Integrates q' = f(y, q) from (y0, q0) to y_end (either direction).
/// dfdq is the partial derivative used by the stage Newton solves.
/// Steps land exactly on every breakpoint between y0 and y_end.
/// observe(y, q) runs after each accepted step; returning false stops.
/// Evaluations that throw DomainError count as failed steps.
template <class F, class J, class Observer>
Outcome integrate(F&& f, J&& dfdq, double y0, double q0, double y_end, const StepOptions& opt,
                  std::span<const double> breakpoints, Observer&& observe) {
  using namespace detail;
  Outcome out;
  out.y = y0;
  out.q = q0;
  if (y0 == y_end) return out;

  const double dir = y_end > y0 ? 1.0 : -1.0;
  double y = y0;
  double q = q0;
  double h = std::min(opt.h_init, opt.h_max);

  const auto next_stop = [&](double from) {
    double stop = y_end;
    for (double b : breakpoints) {
      if (dir * (b - from) > 0.0 && dir * (b - stop) < 0.0) stop = b;
    }
    return stop;
  };

  while (dir * (y_end - y) > 0.0) {
    if (out.accepted + out.rejected >= opt.max_steps) {
      out.status = Status::MaxSteps;
      break;
    }
    if (h < opt.h_min) {
      out.status = Status::StepUnderflow;
      break;
    }

    const double stop = next_stop(y);
    double step = std::min(h, std::fabs(stop - y));
    const bool lands = step >= std::fabs(stop - y) * (1.0 - 1e-14);
    const double hs = dir * step;

    std::array<double, kStages> k{};
    double q_new = q;
    double jac0 = 0.0;
    bool ok = true;
    try {
      jac0 = dfdq(y, q);
      double guess = q;
      for (int i = 0; i < kStages && ok; ++i) {
        double base = q;
        for (int j = 0; j < i; ++j) base += hs * kA[i][j] * k[j];
        const double yi = y + kC[i] * hs;
        const double hg = hs * kGamma;
        double Q = i == 0 ? base : guess;
        bool converged = false;
        for (int it = 0; it < 12; ++it) {
          const double g = Q - base - hg * f(yi, Q);
          const double dg = 1.0 - hg * dfdq(yi, Q);
          if (!(std::isfinite(g) && std::isfinite(dg)) || dg == 0.0) break;
          const double dq = g / dg;
          Q -= dq;
          if (std::fabs(dq) <= 1e-3 * (opt.atol + opt.rtol * std::fabs(Q))) {
            converged = true;
            break;
          }
        }
        if (!converged || !std::isfinite(Q)) {
          ok = false;
          break;
        }
        k[i] = (Q - base) / hg;
        guess = Q;
        if (i == kStages - 1) q_new = Q;  // stiffly accurate
      }
    } catch (const DomainError& e) {
      out.last_failure = e.what();
      ok = false;
    }

    if (!ok) {
      ++out.rejected;
      h = step * 0.25;
      continue;
    }

    double diff = 0.0;
    for (int i = 0; i < kStages; ++i) diff += (kA[kStages - 1][i] - kBHat[i]) * k[i];
    // Filtering through (1 - h gamma J)^-1 keeps the estimate bounded for
    // stiff components, as in RADAU5.
    const double filtered = hs * diff / std::fabs(1.0 - hs * kGamma * jac0);
    const double scale = opt.atol + opt.rtol * std::max(std::fabs(q), std::fabs(q_new));
    const double err = std::fabs(filtered) / scale;

    const double factor =
        err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.25), 0.2, 5.0);
    if (err > 1.0) {
      ++out.rejected;
      h = step * std::min(factor, 0.9);
      continue;
    }

    ++out.accepted;
    out.max_error = std::max(out.max_error, err);
    y = lands ? stop : y + hs;
    q = q_new;
    out.y = y;
    out.q = q;
    const double proposed = std::min(step * factor, opt.h_max);
    h = lands ? std::max(h, proposed) : proposed;  // a short landing step says little about h
    if (!observe(y, q)) {
      out.status = Status::Stopped;
      return out;
    }
  }
  return out;
}

/// Same as above without breakpoints.
template <class F, class J, class Observer>
Outcome integrate(F&& f, J&& dfdq, double y0, double q0, double y_end, const StepOptions& opt,
                  Observer&& observe) {
  return integrate(std::forward<F>(f), std::forward<J>(dfdq), y0, q0, y_end, opt,
                   std::span<const double>{}, std::forward<Observer>(observe));
}

}  // namespace rebal::ode
