#include "rebal/simulator.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <span>
#include <string>

#include "rebal/errors.hpp"
#include "rebal/parallel.hpp"

namespace rebal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

constexpr std::uint64_t kBootstrapStream = 0xB0075754A9ULL;

double start_weight(const MarketParams& p, const SimConfig& cfg) {
  return std::isnan(cfg.y0) ? p.merton_weight() : cfg.y0;
}

PathSummary simulate_one(const MarketParams& p, const PolicyTable& policy, const SimConfig& cfg,
                         long path, long steps, long burn_steps) {
  const long stream = cfg.antithetic ? path / 2 : path;
  const double sign = cfg.antithetic && (path % 2 == 1) ? -1.0 : 1.0;
  std::mt19937_64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(stream)));
  std::normal_distribution<double> normal;

  const double dt = cfg.dt;
  const double sdt = std::sqrt(dt);
  const double var = p.sigma * p.sigma;
  double y = start_weight(p, cfg);
  double log_x = 0.0;
  long nt_steps = 0;
  double turnover = 0.0;
  PathSummary s;
  for (long n = 0; n < steps; ++n) {
    const double dw = sign * sdt * normal(rng);
    const double u = policy(y);
    const double au = std::fabs(u);
    if (u == 0.0) ++nt_steps;
    turnover += au;
    log_x += (y * p.mu - 0.5 * y * y * var - p.epsilon * au - p.lambda * u * u) * dt +
             y * p.sigma * dw;
    const double omy = 1.0 - y;
    y += (y * omy * (p.mu - y * var) + u + p.epsilon * au * y + p.lambda * y * u * u) * dt +
         y * omy * p.sigma * dw;
    if (y < 0.0 || y > 1.0) {
      ++s.violations;
      y = std::clamp(y, 0.0, 1.0);
    }
    if (n + 1 == burn_steps) s.log_x_burn_in = log_x;
  }
  s.log_x_final = log_x;
  s.time_in_nt = static_cast<double>(nt_steps) / static_cast<double>(steps);
  s.turnover_avg = turnover / static_cast<double>(steps);
  return s;
}

PathEnsemble prepare(const SimConfig& cfg, long& steps, long& burn_steps) {
  validate(cfg);
  steps = std::lround(cfg.horizon / cfg.dt);
  burn_steps = std::lround(cfg.burn_in / cfg.dt);
  PathEnsemble e;
  e.paths.resize(static_cast<std::size_t>(cfg.n_paths));
  e.burn_in = static_cast<double>(burn_steps) * cfg.dt;
  e.horizon = static_cast<double>(steps) * cfg.dt;
  e.steps = steps;
  e.antithetic = cfg.antithetic;
  return e;
}

// Pairwise sum with a shape fixed by the length alone.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double two_horizon(const std::vector<double>& early, const std::vector<double>& late,
                   double gamma, double span) {
  return (certainty_equivalent_log(late, gamma) - certainty_equivalent_log(early, gamma)) / span;
}

}  // namespace

void validate(const SimConfig& cfg) {
  std::vector<std::string> v;
  if (!(cfg.dt > 0.0)) v.emplace_back("dt must be positive");
  if (!(cfg.burn_in > 0.0)) v.emplace_back("burn-in horizon must be positive");
  if (!(cfg.horizon > cfg.burn_in)) v.emplace_back("horizon must exceed the burn-in horizon");
  if (cfg.n_paths < 2) v.emplace_back("at least two paths are needed");
  if (cfg.antithetic && cfg.n_paths % 2 != 0) {
    v.emplace_back("antithetic runs need an even path count");
  }
  if (!std::isnan(cfg.y0) && !(cfg.y0 > 0.0 && cfg.y0 < 1.0)) {
    v.emplace_back("y0 must lie in (0, 1)");
  }
  if (cfg.bootstrap_resamples < 2) v.emplace_back("at least two bootstrap resamples are needed");
  if (cfg.dt > 0.0 && cfg.horizon > cfg.burn_in && cfg.burn_in > 0.0 &&
      std::lround(cfg.burn_in / cfg.dt) < 1) {
    v.emplace_back("burn-in horizon is shorter than one step");
  }
  if (!v.empty()) throw ValidationError(std::move(v));
}

PathEnsemble simulate_paths_serial(const MarketParams& params, const PolicyTable& policy,
                                   const SimConfig& cfg) {
  long steps = 0, burn = 0;
  PathEnsemble e = prepare(cfg, steps, burn);
  for (long i = 0; i < cfg.n_paths; ++i) {
    e.paths[static_cast<std::size_t>(i)] = simulate_one(params, policy, cfg, i, steps, burn);
  }
  return e;
}

PathEnsemble simulate_paths(const MarketParams& params, const PolicyTable& policy,
                            const SimConfig& cfg) {
  long steps = 0, burn = 0;
  PathEnsemble e = prepare(cfg, steps, burn);
  const long n = cfg.n_paths;
#pragma omp parallel for schedule(static) num_threads(thread_budget())
  for (long i = 0; i < n; ++i) {
    e.paths[static_cast<std::size_t>(i)] = simulate_one(params, policy, cfg, i, steps, burn);
  }
  return e;
}

double certainty_equivalent_log(const std::vector<double>& log_x, double gamma) {
  if (log_x.empty()) throw DomainError("empty ensemble");
  const double a = 1.0 - gamma;
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : log_x) shift = std::max(shift, a * v);
  if (!std::isfinite(shift)) throw NumericalFailure("degenerate ensemble: X^(1-gamma) is not finite");
  std::vector<double> w(log_x.size());
  for (std::size_t i = 0; i < log_x.size(); ++i) w[i] = std::exp(a * log_x[i] - shift);
  const double mean = pairwise_sum(w) / static_cast<double>(w.size());
  return (shift + std::log(mean)) / a;
}

SimulationReport estimate_esr(const PathEnsemble& ensemble, double gamma, const SimConfig& cfg) {
  const std::size_t n = ensemble.paths.size();
  if (n < 2) throw DomainError("estimate_esr needs at least two paths");
  const double span = ensemble.horizon - ensemble.burn_in;
  if (!(span > 0.0)) throw DomainError("horizon must exceed the burn-in horizon");

  std::vector<double> early(n), late(n);
  SimulationReport r;
  std::vector<double> nt(n), turn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PathSummary& p = ensemble.paths[i];
    early[i] = p.log_x_burn_in;
    late[i] = p.log_x_final;
    nt[i] = p.time_in_nt;
    turn[i] = p.turnover_avg;
    r.y_range_violations += p.violations;
  }
  r.esr_estimate = two_horizon(early, late, gamma, span);
  r.fraction_time_in_nt = pairwise_sum(nt) / static_cast<double>(n);
  r.mean_turnover = pairwise_sum(turn) / static_cast<double>(n);
  r.n_paths = static_cast<long>(n);
  r.steps_per_path = ensemble.steps;

  // Resampling units: single paths, or mirrored pairs.
  const std::size_t unit = ensemble.antithetic ? 2 : 1;
  const std::size_t units = n / unit;
  std::mt19937_64 rng(stream_seed(cfg.seed, kBootstrapStream));
  std::uniform_int_distribution<std::size_t> pick(0, units - 1);
  std::vector<double> be(units * unit), bl(units * unit);
  std::vector<double> estimates(static_cast<std::size_t>(cfg.bootstrap_resamples));
  for (double& est : estimates) {
    for (std::size_t j = 0; j < units; ++j) {
      const std::size_t src = pick(rng) * unit;
      for (std::size_t o = 0; o < unit; ++o) {
        be[j * unit + o] = early[src + o];
        bl[j * unit + o] = late[src + o];
      }
    }
    est = two_horizon(be, bl, gamma, span);
  }
  const double mean = pairwise_sum(estimates) / static_cast<double>(estimates.size());
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  r.esr_stderr = std::sqrt(ss / static_cast<double>(estimates.size() - 1));
  return r;
}

void write_path_csv(std::ostream& out, const PathEnsemble& ensemble) {
  out << "path_id,logX_T,time_in_NT,turnover_avg\n";
  const auto precision = out.precision(17);
  for (std::size_t i = 0; i < ensemble.paths.size(); ++i) {
    const PathSummary& p = ensemble.paths[i];
    out << i << ',' << p.log_x_final << ',' << p.time_in_nt << ',' << p.turnover_avg << '\n';
  }
  out.precision(precision);
}

}  // namespace rebal
