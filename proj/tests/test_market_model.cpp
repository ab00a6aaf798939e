#include <doctest.h>

#include <random>

#include "rebal/errors.hpp"
#include "rebal/market_model.hpp"

using namespace rebal;

namespace {
const MarketParams kMarket{0.08, 0.16, 5.0, 0.01, 0.01};
}

TEST_CASE("validate accepts the reference market") {
  CHECK(validate(kMarket) == kMarket);
}

TEST_CASE("validate names every violated constraint") {
  MarketParams log_utility = kMarket;
  log_utility.gamma = 1.0;
  CHECK_THROWS_AS(validate(log_utility), ValidationError);

  MarketParams bad = kMarket;
  bad.sigma = 0.0;
  bad.epsilon = -1.0;
  try {
    validate(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 2);
  }
}

TEST_CASE("frictionless baseline") {
  const auto b = baseline(kMarket);
  CHECK(b.merton_weight == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(b.frictionless_esr == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(b.full_risky_esr == doctest::Approx(0.016).epsilon(1e-15));

  MarketParams zero = kMarket;
  zero.mu = 0.0;
  CHECK(baseline(zero).merton_weight == 0.0);
  CHECK(baseline(zero).frictionless_esr == 0.0);

  MarketParams edge = kMarket;
  edge.mu = 0.128;
  CHECK(baseline(edge).merton_weight == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("degenerate regimes") {
  CHECK(degenerate_regime(kMarket) == MarketRegime::Interior);

  MarketParams safe = kMarket;
  safe.mu = -0.02;
  CHECK(degenerate_regime(safe) == MarketRegime::FullSafe);
  CHECK(buy_and_hold_esr(safe, MarketRegime::FullSafe) == 0.0);

  MarketParams risky = kMarket;
  risky.mu = 0.2;
  CHECK(degenerate_regime(risky) == MarketRegime::FullRisky);
  CHECK(buy_and_hold_esr(risky, MarketRegime::FullRisky) == doctest::Approx(0.136).epsilon(1e-14));

  CHECK_THROWS_AS(buy_and_hold_esr(kMarket, MarketRegime::Interior), DomainError);
}

TEST_CASE("welfare bracket is ordered for random interior markets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sig(0.05, 0.6), gam(0.2, 20.0), w(0.001, 0.999);
  for (int i = 0; i < 2000; ++i) {
    MarketParams p{0.0, sig(rng), gam(rng), 0.0, 0.0};
    if (std::abs(p.gamma - 1.0) < 1e-3) continue;
    p.mu = w(rng) * p.gamma * p.sigma * p.sigma;
    REQUIRE(degenerate_regime(p) == MarketRegime::Interior);
    const auto br = welfare_bracket(p);
    CHECK(br.low <= br.high);
  }
}

TEST_CASE("JSON parameter records") {
  const auto doc = to_json(kMarket);
  CHECK(params_from_json(doc) == kMarket);

  auto extra = doc;
  extra["rho"] = 0.1;
  CHECK_THROWS_AS(params_from_json(extra), ValidationError);

  auto missing = doc;
  missing.erase("lambda");
  CHECK_THROWS_AS(params_from_json(missing), ValidationError);

  auto text = doc;
  text["mu"] = "8%";
  CHECK_THROWS_AS(params_from_json(text), ValidationError);
}
