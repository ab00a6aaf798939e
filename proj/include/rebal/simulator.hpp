#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "rebal/market_model.hpp"

namespace rebal {

struct SimConfig {
  double horizon = 100.0;  // T, years
  double burn_in = 20.0;   // T1 < T, years
  double dt = 1e-3;
  long n_paths = 100000;
  std::uint64_t seed = 42;
  double y0 = std::numeric_limits<double>::quiet_NaN();  // NaN: start at y*
  bool antithetic = false;  // paths 2i and 2i+1 use mirrored increments
  int bootstrap_resamples = 200;
};

/// Throws ValidationError unless dt > 0, T > T1 > 0, n_paths >= 2,
/// y0 in (0, 1) and an even path count for antithetic runs.
void validate(const SimConfig& cfg);

/// A turnover policy sampled on a uniform grid over [0, 1] and evaluated
/// by linear interpolation, so the simulation loop never calls back into
/// the solver.
class PolicyTable {
 public:
  static constexpr std::size_t kDefaultCells = 1u << 16;

  template <class F>
  explicit PolicyTable(F&& policy, std::size_t cells = kDefaultCells) : u_(cells + 1) {
    for (std::size_t i = 0; i <= cells; ++i) {
      u_[i] = policy(static_cast<double>(i) / static_cast<double>(cells));
    }
  }

  double operator()(double y) const {
    const double s = y * static_cast<double>(u_.size() - 1);
    if (s <= 0.0) return u_.front();
    const auto i = static_cast<std::size_t>(s);
    if (i >= u_.size() - 1) return u_.back();
    const double t = s - static_cast<double>(i);
    const double a = u_[i];
    const double b = u_[i + 1];
    return a == b ? a : a + t * (b - a);
  }

  std::size_t cells() const { return u_.size() - 1; }

 private:
  std::vector<double> u_;
};

struct PathSummary {
  double log_x_burn_in = 0.0;  // log X at T1
  double log_x_final = 0.0;    // log X at T
  double time_in_nt = 0.0;     // fraction of [0, T] with zero turnover
  double turnover_avg = 0.0;   // time average of |u| over [0, T]
  long violations = 0;         // steps where Y left [0, 1] before clamping
};

struct PathEnsemble {
  std::vector<PathSummary> paths;
  double burn_in = 0.0;
  double horizon = 0.0;
  long steps = 0;  // per path
  bool antithetic = false;
};

/// Euler-Maruyama in (log X, Y), paths run in parallel with OpenMP.
/// Output is bit-identical to simulate_paths_serial.
PathEnsemble simulate_paths(const MarketParams& params, const PolicyTable& policy,
                            const SimConfig& cfg);
PathEnsemble simulate_paths_serial(const MarketParams& params, const PolicyTable& policy,
                                   const SimConfig& cfg);

struct SimulationReport {
  double esr_estimate = 0.0;
  double esr_stderr = 0.0;
  double mean_turnover = 0.0;
  double fraction_time_in_nt = 0.0;
  long y_range_violations = 0;
  long n_paths = 0;
  long steps_per_path = 0;
};

/// (1/(1-gamma)) log mean exp((1-gamma) v), with a max shift and a
/// pairwise sum of fixed shape so the result does not depend on threads.
double certainty_equivalent_log(const std::vector<double>& log_x, double gamma);

/// Two-horizon estimate [L(T) - L(T1)] / (T - T1) with a path-level
/// bootstrap (pairs are resampled together for antithetic ensembles).
SimulationReport estimate_esr(const PathEnsemble& ensemble, double gamma, const SimConfig& cfg);

/// "path_id,logX_T,time_in_NT,turnover_avg"
void write_path_csv(std::ostream& out, const PathEnsemble& ensemble);

}  // namespace rebal
