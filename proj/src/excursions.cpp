#include "khintchine/excursions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "khintchine/errors.hpp"
#include "khintchine/homogeneous.hpp"
#include "khintchine/orbit.hpp"
#include "khintchine/parallel.hpp"
#include "khintchine/random.hpp"

namespace khl {

std::string to_string(ExcursionFlavor f) { return f == ExcursionFlavor::walk ? "walk" : "diagonal"; }

std::vector<long> return_times(std::span<const double> heights, const CompactWindow& window, long max_steps) {
  if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
  std::vector<long> out;
  const long n = std::min<long>(max_steps, long(heights.size()));
  for (long i = 0; i < n; ++i)
    if (in_window(heights[std::size_t(i)], window)) out.push_back(i + 1);
  return out;
}

std::vector<ExcursionRecord> excursions(std::span<const long> returns, ExcursionFlavor flavor) {
  std::vector<ExcursionRecord> out;
  long prev = 0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (returns[i] <= prev) throw InvalidArgument("return times must be positive and strictly increasing");
    ExcursionRecord r;
    r.index = int(i);
    r.start_step = prev;
    r.end_step = returns[i];
    r.length = returns[i] - prev;
    r.flavor = flavor;
    out.push_back(r);
    prev = returns[i];
  }
  return out;
}

DiagonalExcursions diagonal_excursions(const std::vector<BigFloat>& x, double kappa, const CompactWindow& window,
                                       long n_max, int grid_refine) {
  if (grid_refine < 1) throw InvalidArgument("grid_refine must be at least 1");
  if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
  if (x.empty()) throw DimensionError("empty point");
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  const int d = int(x.size());
  const double step = step_time(kappa, d);
  const mpfr_prec_t bits = diagonal_bits(double(n_max + 1) * step, d);
  std::vector<BigFloat> xp;
  for (const auto& v : x) {
    BigFloat c(bits);
    c.set(v);
    xp.push_back(std::move(c));
  }
  DiagonalOrbit orbit(xp, step_time_mp(kappa, d, bits));

  const double spacing = step / grid_refine;
  const double slack = 0.5 * spacing * std::max(1.0, 1.0 / d);
  // interval_max[n]: grid maximum over [t_n, t_{n+1}].
  std::vector<double> interval_max(static_cast<std::size_t>(n_max));
  DiagonalExcursions out;
  out.sample_heights.reserve(std::size_t(n_max));
  double prev = orbit.height();
  for (long n = 0; n < n_max; ++n) {
    double mx = prev;
    for (int k = 1; k < grid_refine; ++k) mx = std::max(mx, orbit.height_at_offset(k * spacing));
    orbit.advance();
    prev = orbit.height();
    mx = std::max(mx, prev);
    interval_max[std::size_t(n)] = mx;
    out.sample_heights.push_back(prev);
  }

  out.returns = return_times(out.sample_heights, window, n_max);
  out.records = excursions(out.returns, ExcursionFlavor::diagonal);
  for (auto& r : out.records) {
    double mx = -std::numeric_limits<double>::infinity();
    for (long n = r.start_step; n < r.end_step; ++n) mx = std::max(mx, interval_max[std::size_t(n)]);
    r.peak = mx + slack;
    r.peak_slack = slack;
  }
  out.censored = (out.returns.empty() || out.returns.back() < n_max) ? 1 : 0;
  return out;
}

DiagonalExcursions diagonal_excursions(const Vec& x, double kappa, const CompactWindow& window, long n_max,
                                       int grid_refine) {
  const int d = int(x.size());
  const mpfr_prec_t bits = diagonal_bits(double(std::max<long>(n_max, 1) + 1) * step_time(kappa, std::max(d, 1)),
                                         std::max(d, 1));
  return diagonal_excursions(to_big(x, bits), kappa, window, n_max, grid_refine);
}

double growth_bound(long length, const CompactWindow& window, double kappa, int d) {
  // l rises at rate <= 1 and falls at rate <= 1/d along a_t.
  return double(length) * step_time(kappa, d) / (d + 1) + window.q_const();
}

std::vector<ExcursionRecord> growth_bound_check(std::span<const ExcursionRecord> records, const CompactWindow& window,
                                                double kappa, int d) {
  std::vector<ExcursionRecord> bad;
  for (const auto& r : records)
    if (r.peak > growth_bound(r.length, window, kappa, d) + r.peak_slack + 1e-6) bad.push_back(r);
  return bad;
}

namespace {

struct LineFit {
  double slope, slope_se, intercept, intercept_se;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0)) throw NoData("degenerate regression: all abscissae equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - intercept - slope * xs[i];
    rss += e * e;
  }
  const double s2 = xs.size() > 2 ? rss / (n - 2) : 0.0;
  return {slope, std::sqrt(s2 / sxx), intercept, std::sqrt(s2 * (1.0 / n + mx * mx / sxx))};
}

}  // namespace

TailReport tail_from_lengths(const std::vector<std::vector<long>>& lengths_by_walk, double exponent) {
  if (!(exponent > 0)) throw InvalidArgument("delta/m must be positive");
  TailReport rep;
  rep.exponent = exponent;
  long max_len = 0;
  rep.log_theta_hat = -std::numeric_limits<double>::infinity();
  for (const auto& walk : lengths_by_walk) {
    if (walk.empty()) continue;
    ++rep.walks_with_returns;
    // log of the mean of e^{exponent * sigma}, stabilized by its largest term.
    const long top = *std::max_element(walk.begin(), walk.end());
    double acc = 0;
    for (long s : walk) acc += std::exp(exponent * double(s - top));
    const double log_mean = exponent * double(top) + std::log(acc / double(walk.size()));
    rep.log_theta_hat = std::max(rep.log_theta_hat, log_mean);
    rep.samples += long(walk.size());
    max_len = std::max(max_len, top);
  }
  if (rep.samples == 0) throw NoData("the window was never visited");
  rep.theta_hat = std::exp(rep.log_theta_hat);

  std::vector<long> hist(std::size_t(max_len) + 2, 0);
  for (const auto& walk : lengths_by_walk)
    for (long s : walk) ++hist[std::size_t(s)];
  long above = rep.samples;  // count of sigma >= s
  for (long s = 1; s <= max_len; ++s) {
    above -= hist[std::size_t(s - 1)];
    rep.thresholds.push_back(double(s));
    rep.tail_counts.push_back(above);
    rep.empirical_tail.push_back(double(above) / double(rep.samples));
    rep.chebyshev_bound.push_back(std::exp(rep.log_theta_hat - exponent * double(s)));
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rep.thresholds.size(); ++i)
    if (rep.tail_counts[i] >= 5) {
      xs.push_back(rep.thresholds[i]);
      ys.push_back(std::log(rep.empirical_tail[i]));
    }
  if (xs.size() >= 3) {
    const LineFit f = least_squares(xs, ys);
    rep.fitted_rate = -f.slope;
    rep.fitted_rate_lo = -f.slope - 1.96 * f.slope_se;
    rep.fitted_rate_hi = -f.slope + 1.96 * f.slope_se;
  } else {
    rep.fitted_rate = std::numeric_limits<double>::quiet_NaN();
    rep.fitted_rate_lo = -std::numeric_limits<double>::infinity();
    rep.fitted_rate_hi = std::numeric_limits<double>::infinity();
  }
  return rep;
}

TailReport tail_report(const IfsSystem& sys, const CompactWindow& window, int walks, int steps, std::uint64_t seed,
                       int m, double delta, int workers) {
  if (!(delta > 0)) throw InvalidArgument("delta must be positive");
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (walks < 1 || steps < 1) throw InvalidArgument("walks and steps must be positive");
  const int d = sys.dimension();
  struct WalkResult {
    std::vector<long> lengths;
    long censored = 0;
  };
  const auto results = parallel_map(std::size_t(walks), workers, [&](std::size_t w) {
    Rng rng(task_seed(seed, w));
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = rng.uniform();
    const auto heights = walk_heights(sys, z, steps, rng.bits());
    const auto returns = return_times(heights, window, steps);
    WalkResult r;
    for (const auto& rec : excursions(returns)) r.lengths.push_back(rec.length);
    // The open segment after the last return is dropped.
    r.censored = (returns.empty() || returns.back() < steps) ? 1 : 0;
    return r;
  });
  std::vector<std::vector<long>> lengths;
  long censored = 0;
  for (const auto& r : results) {
    lengths.push_back(r.lengths);
    censored += r.censored;
  }
  TailReport rep = tail_from_lengths(lengths, delta / m);
  rep.censored = censored;
  return rep;
}

DriftEstimate drift_estimate(const IfsSystem& sys, double beta_exp, int m, int samples, std::uint64_t seed, int inner,
                             int workers) {
  if (!(beta_exp > 0)) throw InvalidArgument("beta_exp must be positive");
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (samples < 3 || inner < 1) throw InvalidArgument("need at least 3 outer samples and 1 inner sample");
  const int d = sys.dimension();
  const double t = m * step_time(sys.ratio(), d);
  // Starting lattices a_s u_z with s spread over [0, 6] so that f(y) varies.
  constexpr double kMaxStart = 6.0;
  struct Point {
    double fy, response;
  };
  const auto pts = parallel_map(std::size_t(samples), workers, [&](std::size_t i) {
    Rng rng(task_seed(seed, i));
    Vec z(d);
    for (int k = 0; k < d; ++k) z(k) = rng.uniform();
    const double s = kMaxStart * (double(i) + rng.uniform()) / samples;
    const GroupElement y = diagonal_point(z, s);
    const double fy = std::exp(beta_exp * height(y));
    const auto xs = sample_fractal(sys, sys.default_depth(), rng.bits(), inner);
    double acc = 0;
    for (const auto& x : xs) acc += std::exp(beta_exp * height(GroupElement(diagonal_point(x, t).matrix * y.matrix)));
    return Point{fy, acc / inner};
  });
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.fy);
    ys.push_back(p.response);
  }
  const LineFit f = least_squares(xs, ys);
  return {f.slope, f.slope_se, f.intercept, f.intercept_se, samples};
}

int rate_budget_threshold(double kappa, int d, double varpi, double log_Cc, double eps) {
  if (!(eps > 0 && eps < 1)) throw InvalidArgument("eps must lie in (0, 1)");
  if (!(varpi > 0)) throw InvalidArgument("varpi must be positive");
  if (!(kappa > 0 && kappa < 1)) throw InvalidArgument("kappa must lie in (0, 1)");
  if (d < 1) throw InvalidArgument("d must be at least 1");
  if (!(log_Cc >= 0)) throw InvalidArgument("log_Cc must be nonnegative");
  const double D = double(d + 1) * double(d + 1) * (log_Cc + 1) / (-d * std::log(kappa));
  const double gamma_max = varpi * (d + 1) / d;
  // With eta <= 1 the exponent falls short of rho*gamma_max by at most D/m,
  // and rho*gamma_max - (1-eps)*gamma_max = (eps/2)*gamma_max.
  const double m = std::floor(D / (0.5 * eps * gamma_max)) + 1;
  if (m > 1e9) throw InfeasibleBudget("budget threshold is out of range");
  return int(m);
}

RateBudget rate_budget(double kappa, int d, double varpi, double log_Cc, double eps, int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  RateBudget b;
  b.m_threshold = rate_budget_threshold(kappa, d, varpi, log_Cc, eps);
  b.kappa = kappa;
  b.d = d;
  b.varpi = varpi;
  b.log_Cc = log_Cc;
  b.eps = eps;
  b.m = m;
  b.rho = 1 - eps / 2;
  const double lk = std::log(kappa);
  const double top = -m * b.rho * varpi * lk / (d + 1) - log_Cc;
  if (!(top > 0)) throw InfeasibleBudget("the delta range is empty for this m");
  b.eta = std::min(0.5, top / 2);
  b.delta = top - b.eta;
  b.D = double(d + 1) * double(d + 1) * (log_Cc + 1) / (-d * lk);
  b.gamma_max = varpi * (d + 1) / d;
  const double lhs = b.delta * (d + 1) * (d + 1) / (m * d * lk);
  b.inequality_holds = lhs <= -(1 - eps) * b.gamma_max;
  return b;
}

}  // namespace khl
