#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "khintchine/bigfloat.hpp"
#include "khintchine/ifs.hpp"
#include "khintchine/lattice.hpp"

namespace khl {

enum class ExcursionFlavor { walk, diagonal };
std::string to_string(ExcursionFlavor f);

// One excursion between consecutive returns to the window. Record 0 runs
// from the starting point (step 0) to the first return.
struct ExcursionRecord {
  int index = 0;
  long start_step = 0;
  long end_step = 0;
  long length = 0;
  double peak = 0.0;        // diagonal only: certified upper bound on the continuous maximum
  double peak_slack = 0.0;  // Lipschitz correction already added to `peak`
  ExcursionFlavor flavor = ExcursionFlavor::walk;
};

// 1-based steps n <= max_steps with heights[n-1] <= window level.
std::vector<long> return_times(std::span<const double> heights, const CompactWindow& window, long max_steps);

// Lengths between consecutive returns, starting from step 0.
std::vector<ExcursionRecord> excursions(std::span<const long> returns,
                                        ExcursionFlavor flavor = ExcursionFlavor::walk);

struct DiagonalExcursions {
  std::vector<long> returns;
  std::vector<ExcursionRecord> records;  // completed excursions only
  std::vector<double> sample_heights;    // l at t_1 .. t_{n_max}
  long censored = 0;                     // 1 if the orbit ends outside the window
};

// Excursions of a_t u_x sampled at t_n = n * step_time(kappa, d). Peaks are
// grid maxima at spacing step/grid_refine plus the slack (spacing/2) max(1, 1/d).
DiagonalExcursions diagonal_excursions(const std::vector<BigFloat>& x, double kappa, const CompactWindow& window,
                                       long n_max, int grid_refine);
// Double input, promoted to the precision the orbit needs.
DiagonalExcursions diagonal_excursions(const Vec& x, double kappa, const CompactWindow& window, long n_max,
                                       int grid_refine);

// Upper bound on the peak of an excursion of `length` steps from the window.
double growth_bound(long length, const CompactWindow& window, double kappa, int d);
// Records whose peak exceeds growth_bound + peak_slack + 1e-6.
std::vector<ExcursionRecord> growth_bound_check(std::span<const ExcursionRecord> records, const CompactWindow& window,
                                                double kappa, int d);

struct TailReport {
  std::vector<double> thresholds;
  std::vector<double> empirical_tail;
  std::vector<long> tail_counts;
  std::vector<double> chebyshev_bound;
  double fitted_rate = 0.0;
  double fitted_rate_lo = 0.0;  // 95% interval
  double fitted_rate_hi = 0.0;
  double theta_hat = 0.0;      // may overflow to inf; log_theta_hat is always finite
  double log_theta_hat = 0.0;
  double exponent = 0.0;  // delta / m
  long samples = 0;
  long censored = 0;
  long walks_with_returns = 0;
};

// Excursion lengths pooled over `walks` random walks of `steps` steps from
// u_z, z uniform in [0,1]^d. Walk w uses seed task_seed(seed, w).
TailReport tail_report(const IfsSystem& sys, const CompactWindow& window, int walks, int steps, std::uint64_t seed,
                       int m, double delta, int workers = 1);
// Same statistics from excursion lengths grouped by walk.
TailReport tail_from_lengths(const std::vector<std::vector<long>>& lengths_by_walk, double exponent);

struct DriftEstimate {
  double a_hat, a_se;
  double b_hat, b_se;
  int points;
};

// Fits E[f(a_{m t} u_x y)] ~ A f(y) + B for f = Delta^{-beta_exp}, x drawn from the IFS measure.
DriftEstimate drift_estimate(const IfsSystem& sys, double beta_exp, int m, int samples, std::uint64_t seed,
                             int inner = 64, int workers = 1);

struct RateBudget {
  double kappa = 0, d = 0, varpi = 0, log_Cc = 0;
  double eps = 0, rho = 0, eta = 0;
  int m = 0;
  double delta = 0;
  double D = 0;
  double gamma_max = 0;
  int m_threshold = 0;
  bool inequality_holds = false;
};

// Smallest m at which the delta range is nonempty and the exponent
// inequality is guaranteed.
int rate_budget_threshold(double kappa, int d, double varpi, double log_Cc, double eps);
RateBudget rate_budget(double kappa, int d, double varpi, double log_Cc, double eps, int m);

}  // namespace khl
