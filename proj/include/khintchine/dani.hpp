#pragma once

#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace khl {

// Non-increasing positive psi on [x0, inf).
class ApproxFunction {
 public:
  enum class Family { power_log, tabulated, callable };

  // c x^{-a} (log(e + x))^{-b}
  static ApproxFunction power_log(double c, double a, double b = 0.0, double x0 = 1.0);
  // Piecewise linear in (log x, log psi); extended past the ends with the end slopes.
  static ApproxFunction tabulated(std::vector<double> xs, std::vector<double> values);
  static ApproxFunction callable(std::function<double(double)> f, double x0, std::string label);

  Family family() const { return family_; }
  double x0() const { return x0_; }
  double c() const { return c_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double operator()(double x) const;
  double log_value(double x) const;
  // log psi(e^u)
  double log_value_at_log(double u) const;
  std::string describe() const;
  nlohmann::json to_json() const;

 private:
  ApproxFunction() = default;

  Family family_ = Family::power_log;
  double c_ = 1, a_ = 0, b_ = 0, x0_ = 1;
  std::vector<double> log_x_, log_y_;
  std::function<double(double)> fn_;
  std::string label_;
};

ApproxFunction approx_function_from_json(const nlohmann::json& j);

// The time at which e^{t - r(t)} = x0: t0 = d/(d+1) (log x0 - log psi(x0)).
double t0_of(const ApproxFunction& psi, int d);

// Unique root of log psi(e^{t-r}) + t/d + r = 0, for t >= t0_of(psi, d).
double r_from_psi(const ApproxFunction& psi, int d, double t);

// r = s t + l log t + O(1) as t grows.
struct RateAsymptotics {
  double slope;
  double log_coef;
};

class RateFunction {
 public:
  enum class Kind { affine, logarithmic, tabulated, from_psi };

  // r(t) = slope t + intercept
  static RateFunction affine(double slope, double intercept, double t_start = 0.0);
  // r(t) = coef log(1 + t) + intercept
  static RateFunction logarithmic(double coef, double intercept = 0.0, double t_start = 0.0);
  // Piecewise linear through the nodes, continued with the end slopes.
  static RateFunction tabulated(std::vector<double> ts, std::vector<double> rs);
  static RateFunction from_psi(const ApproxFunction& psi, int d);

  Kind kind() const { return kind_; }
  double t_start() const { return t_start_; }
  double operator()(double t) const;
  // Closed form except for rates built from tabulated or callable psi, which are fitted.
  RateAsymptotics asymptotics() const;
  bool closed_form_asymptotics() const;
  std::string describe() const;

 private:
  RateFunction() = default;

  Kind kind_ = Kind::affine;
  double p_ = 0, q_ = 0, t_start_ = 0;
  std::vector<double> ts_, rs_;
  std::optional<ApproxFunction> psi_;
  int d_ = 1;
};

// psi(x) = e^{-t/d - r(t)} where t - r(t) = log x.
double psi_from_r(const RateFunction& rate, int d, double x);

// Items 1 and 2 of the correspondence on an n-point grid of [t_lo, t_hi].
struct MonotonicityReport {
  bool t_minus_r_increasing;
  bool t_over_d_plus_r_nondecreasing;
};
MonotonicityReport check_rate_monotonicity(const RateFunction& rate, int d, double t_lo, double t_hi, int n = 1000);

enum class SeriesVerdict { converges, diverges, numeric };
std::string to_string(SeriesVerdict v);

struct SeriesClassification {
  SeriesVerdict verdict;
  bool converging_partial_sums = false;  // meaningful for numeric verdicts
  double exponent = 0.0;                 // power of x (or slope of r) driving the verdict
  std::string reason;
  // Converges, counting a numeric verdict by its partial-sum diagnostic.
  bool converges() const {
    return verdict == SeriesVerdict::converges || (verdict == SeriesVerdict::numeric && converging_partial_sums);
  }
};

// sum over x >= 1 of x^{alpha/d - 1} psi(x)^alpha
SeriesClassification classify_khintchine_series(const ApproxFunction& psi, int d, double alpha);
// sum over t >= 1 of exp(-gamma r(t))
SeriesClassification classify_rate_series(const RateFunction& rate, double gamma);

// Convergence of int (log x)^q psi dx and int t^q e^{-(d+1) r(t)} dt, power-log psi only.
struct IntegralPair {
  bool psi_integral_converges;
  bool rate_integral_converges;
};
IntegralPair dani_integral_pair(const ApproxFunction& psi, int d, int q);
struct EquivalenceRow {
  double T;
  double X;            // e^{T - r(T)}
  double i_psi;        // integral of x^{alpha/d - 1} psi^alpha over [x0, X]
  double i_r;          // integral of exp(-gamma r) over [t0, T]
  double identity_residual;  // i_psi - i_r - (e^{-gamma r(T)} - e^{-gamma r(t0)})/gamma, relative
  double ratio;        // i_psi / i_r
};

struct EquivalenceReport {
  double gamma;
  std::vector<EquivalenceRow> rows;
  SeriesClassification psi_side;
  SeriesClassification rate_side;
  bool verdicts_agree;
  double max_identity_residual;
  // Integral pair with q = 0, for power-log psi. The equivalence holds for every psi only when d = 1.
  std::optional<IntegralPair> q0;
};

EquivalenceReport equivalence_check(const ApproxFunction& psi, int d, double alpha, const std::vector<double>& grid);

}  // namespace khl
