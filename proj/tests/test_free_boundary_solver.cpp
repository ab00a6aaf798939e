#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <variant>

#include "rebal/errors.hpp"
#include "rebal/free_boundary_solver.hpp"

using namespace rebal;

namespace {

MarketParams market(double eps, double lam) { return {0.08, 0.16, 5.0, eps, lam}; }

// Checks every structural property a solution must have.
void check_solution(const FreeBoundarySolution& s) {
  const auto& p = s.params;
  const auto br = welfare_bracket(p);
  CHECK(s.beta >= br.low);
  CHECK(s.beta <= br.high);
  CHECK(0.0 <= s.y_minus);
  CHECK(s.y_minus <= s.y_plus);
  CHECK(s.y_plus <= 1.0);
  CHECK(std::abs(s.q_at(s.y_minus) - buy_band(s.y_minus, p.epsilon)) <= 1e-8);
  CHECK(std::abs(s.q_at(s.y_plus) - sell_band(s.y_plus, p.epsilon)) <= 1e-8);
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    const double y = s.y[i], q = s.q[i];
    CHECK(q * y < 1.0);
    if (y < s.y_minus) {
      CHECK(q > buy_band(y, p.epsilon));
    } else if (y <= s.y_plus) {
      CHECK(q <= buy_band(y, p.epsilon) + 1e-10);
      CHECK(q >= sell_band(y, p.epsilon) - 1e-10);
    } else {
      CHECK(q <= sell_band(y, p.epsilon));
    }
  }
}

}  // namespace

TEST_CASE("frictionless limit") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = solve(market(1e-8, 1e-8));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(std::abs(s.beta - 0.025) <= 1e-4);
  CHECK(std::abs(s.y_minus - 0.625) <= 1e-2);
  CHECK(std::abs(s.y_plus - 0.625) <= 1e-2);
  CHECK(secs < 5.0);
  check_solution(s);
}

TEST_CASE("reference market: no-trade region around the Merton weight") {
  const auto s = solve(market(1e-3, 1e-4));
  check_solution(s);
  CHECK(s.y_minus < 0.625);
  CHECK(s.y_plus > 0.625);
  CHECK(s.diagnostics.sign_low == -1);
  CHECK(s.diagnostics.sign_high == 1);
  CHECK(s.diagnostics.matching_residual < 1e-8);
}

TEST_CASE("band collapses as the spread vanishes") {
  const auto s = solve(market(1e-9, 1e-4));
  check_solution(s);
  CHECK(s.y_plus - s.y_minus < 1e-3);
}

TEST_CASE("structural invariants on a friction grid") {
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    for (double lam : {1e-4, 1e-3, 1e-2}) {
      CAPTURE(eps);
      CAPTURE(lam);
      check_solution(solve(market(eps, lam)));
    }
  }
}

TEST_CASE("interpolated q satisfies the ODE off the grid") {
  for (auto p : {market(1e-3, 1e-4), market(1e-2, 1e-2)}) {
    const SolverOptions opts;
    const auto s = solve(p, opts);
    const OdeContext ctx{p, s.beta};
    std::mt19937_64 rng(21);
    const double lo = 10 * opts.delta, hi = 1 - 10 * opts.delta;
    std::uniform_real_distribution<double> uy(lo, hi);
    for (int i = 0; i < 1000; ++i) {
      const double y = uy(rng);
      const auto r = ode_residual(ctx, y, s.q_at(y), s.dq_at(y));
      CHECK(std::abs(r.residual) <= 10 * opts.rtol * r.scale);
    }
  }
}

TEST_CASE("comparative statics of the band width") {
  double prev = 1.0;
  for (double lam : {1e-5, 1e-4, 1e-3}) {
    const auto s = solve(market(1e-3, lam));
    CHECK(s.y_plus - s.y_minus <= prev);
    prev = s.y_plus - s.y_minus;
  }
  prev = 0.0;
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    const auto s = solve(market(eps, 1e-4));
    CHECK(s.y_plus - s.y_minus > prev);
    prev = s.y_plus - s.y_minus;
  }
}

TEST_CASE("vanishing spread reduces to pure price impact") {
  const auto tiny = solve(market(1e-10, 1e-4));
  const auto pure = solve(market(0.0, 1e-4));
  CHECK(std::abs(tiny.beta - pure.beta) <= 1e-8 * pure.beta);
  const TradingPolicy u(tiny);
  for (double d : {-0.2, 0.2}) {
    const double y = 0.625 + d;
    const double far = 0.16 * std::sqrt(5.0 / 2.0) * (0.625 - y) / std::sqrt(1e-4);
    CHECK(std::abs(u(y) - far) <= 0.02 * std::abs(far));
  }
}

TEST_CASE("policy sign structure and boundary values") {
  const auto s = solve(market(1e-3, 1e-4));
  const TradingPolicy u(s);
  CHECK(u(0.0) == doctest::Approx(std::sqrt(s.beta / 1e-4)).epsilon(1e-6));
  CHECK(u(1.0) < 0.0);
  for (double y = 0.0; y <= 1.0; y += 1e-3) {
    if (y < s.y_minus) CHECK(u(y) >= 0.0);
    if (y >= s.y_minus && y <= s.y_plus) CHECK(u(y) == 0.0);
    if (y > s.y_plus) CHECK(u(y) <= 0.0);
  }
  // Continuous through both boundaries.
  CHECK(std::abs(u(s.y_minus - 1e-9)) < 1e-4);
  CHECK(std::abs(u(s.y_plus + 1e-9)) < 1e-4);
}

TEST_CASE("forward shooting at the ends of the welfare bracket") {
  const auto p = market(1e-3, 1e-4);
  const auto br = welfare_bracket(p);
  const double ys = p.merton_weight();
  const double q1 = [&] {
    const auto b = shoot_backward(p, br.high, ys);
    return std::get<Trajectory>(b).q.back();
  }();
  const auto top = shoot_forward(p, br.high, ys);
  if (const auto* tr = std::get_if<Trajectory>(&top)) {
    CHECK(tr->q.back() > q1);
  } else {
    CHECK(std::get<BlowUpEvent>(top).kind == BlowUp::Upper);
  }
  CHECK(matching_sign(p, br.high) == 1);

  const double low = br.low + 1e-6 * (br.high - br.low);
  const auto bottom = shoot_forward(p, low, ys);
  const auto back = shoot_backward(p, low, ys);
  if (const auto* tr = std::get_if<Trajectory>(&bottom)) {
    REQUIRE(std::holds_alternative<Trajectory>(back));
    CHECK(tr->q.back() < std::get<Trajectory>(back).q.back());
  } else {
    CHECK(std::get<BlowUpEvent>(bottom).kind == BlowUp::Lower);
  }
  CHECK(matching_sign(p, low) == -1);
}

TEST_CASE("forward trajectory decreases through the band near y*") {
  const auto p = market(1e-3, 1e-4);
  const auto s = solve(p);
  const OdeContext ctx{p, s.beta};
  for (double y = s.y_minus; y <= s.y_plus; y += (s.y_plus - s.y_minus) / 50) {
    CHECK(slope(ctx, y, s.q_at(y)) < 0.0);
  }
}

TEST_CASE("backward shooting") {
  auto p = market(1e-3, 1e-10);
  const auto near = shoot_backward(p, 0.0249, 0.999);
  REQUIRE(std::holds_alternative<Trajectory>(near));
  CHECK(std::get<Trajectory>(near).q.front() == doctest::Approx(-1e-3 / (1 - 1e-3)).epsilon(1e-5));

  // Reaches y* from the solved beta upwards; below it the leg runs into
  // the upper guard, which is what gives the low bracket end its sign.
  p = market(1e-3, 1e-4);
  const double beta = solve(p).beta;
  for (double b : {beta, 0.5 * (beta + 0.025), 0.025}) {
    const auto res = shoot_backward(p, b, 0.625);
    REQUIRE(std::holds_alternative<Trajectory>(res));
    const auto& t = std::get<Trajectory>(res);
    CHECK(t.q.front() < 0.0);
    CHECK(t.y.back() == 0.625);
  }
  const auto low = shoot_backward(p, 0.02, 0.625);
  REQUIRE(std::holds_alternative<BlowUpEvent>(low));
  CHECK(std::get<BlowUpEvent>(low).kind == BlowUp::Upper);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(solve(market(1e-3, 0.0)), DomainError);
  MarketParams risky = market(1e-3, 1e-4);
  risky.mu = 0.2;
  CHECK_THROWS_AS(solve(risky), DomainError);
  try {
    solve(market(0.99, 1.0));
    FAIL("expected NoMatchError");
  } catch (const NoMatchError& e) {
    CHECK(e.sign_low() == e.sign_high());
  }
}
