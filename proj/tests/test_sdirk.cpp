#include <doctest.h>

#include <cmath>
#include <vector>

#include "rebal/sdirk.hpp"

using namespace rebal;
using namespace rebal::ode;

TEST_CASE("exponential decay") {
  StepOptions opt;
  opt.rtol = 1e-10;
  const auto out = integrate([](double, double q) { return -q; }, [](double, double) { return -1.0; },
                             0.0, 1.0, 2.0, opt, [](double, double) { return true; });
  CHECK(out.status == Status::Completed);
  CHECK(out.y == 2.0);
  CHECK(out.q == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("backward direction") {
  const auto out = integrate([](double y, double) { return 3.0 * y * y; },
                             [](double, double) { return 0.0; }, 1.0, 1.0, 0.0, StepOptions{},
                             [](double, double) { return true; });
  CHECK(out.q == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("stiff relaxation onto a slow manifold") {
  // q' = -L (q - cos y) - sin y has the solution cos y for every L.
  const double L = 1e6;
  StepOptions opt;
  opt.rtol = 1e-8;
  opt.atol = 1e-10;
  const auto out = integrate(
      [&](double y, double q) { return -L * (q - std::cos(y)) - std::sin(y); },
      [&](double, double) { return -L; }, 0.0, 1.0, 1.5, opt, [](double, double) { return true; });
  CHECK(out.status == Status::Completed);
  CHECK(out.q == doctest::Approx(std::cos(1.5)).epsilon(1e-7));
  // L-stability: step count stays modest despite L h >> 1.
  CHECK(out.accepted < 2000);
}

TEST_CASE("breakpoints are landed on exactly") {
  std::vector<double> seen;
  const std::vector<double> bps = {0.3, 0.71};
  integrate([](double, double q) { return q; }, [](double, double) { return 1.0; }, 0.0, 1.0, 1.0,
            StepOptions{}, bps, [&](double y, double) {
              seen.push_back(y);
              return true;
            });
  for (double b : bps) {
    CHECK(std::find(seen.begin(), seen.end(), b) != seen.end());
  }
}

TEST_CASE("observer can stop the integration") {
  const auto out = integrate([](double, double) { return 1.0; }, [](double, double) { return 0.0; },
                             0.0, 0.0, 10.0, StepOptions{}, [](double, double q) { return q < 2.0; });
  CHECK(out.status == Status::Stopped);
  CHECK(out.q >= 2.0);
  CHECK(out.y < 10.0);
}

TEST_CASE("domain errors shrink the step until it underflows") {
  // Finite-time blow-up q = 1/(1 - y) with a wall at q = 100.
  const auto f = [](double, double q) {
    if (q > 100.0) throw DomainError("outside the domain");
    return q * q;
  };
  const auto out = integrate(f, [](double, double q) { return 2.0 * q; }, 0.0, 1.0, 2.0,
                             StepOptions{}, [](double, double) { return true; });
  CHECK(out.status == Status::StepUnderflow);
  CHECK(out.y < 1.0);
  CHECK(out.rejected > 0);
  CHECK_FALSE(out.last_failure.empty());
}
