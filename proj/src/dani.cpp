#include "khintchine/dani.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "khintchine/errors.hpp"

namespace khl {

namespace {

constexpr double kE = 2.718281828459045;

// log(log(e + e^u)) without overflow for large u.
double log_log_e_plus_exp(double u) {
  const double inner = u > 1.0 ? u + std::log1p(std::exp(1.0 - u)) : std::log(kE + std::exp(u));
  return std::log(inner);
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const std::size_t n = xs.size();
  std::size_t hi = std::size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  hi = std::clamp<std::size_t>(hi, 1, n - 1);
  const std::size_t lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw InvalidArgument(std::string(what) + " must be strictly increasing");
}

}  // namespace

ApproxFunction ApproxFunction::power_log(double c, double a, double b, double x0) {
  if (!(c > 0) || !(a >= 0) || !(b >= 0) || !(x0 > 0) || !std::isfinite(c) || !std::isfinite(a) ||
      !std::isfinite(b) || !std::isfinite(x0))
    throw InvalidPsi("power_log needs c > 0, a >= 0, b >= 0, x0 > 0");
  ApproxFunction f;
  f.family_ = Family::power_log;
  f.c_ = c;
  f.a_ = a;
  f.b_ = b;
  f.x0_ = x0;
  return f;
}

ApproxFunction ApproxFunction::tabulated(std::vector<double> xs, std::vector<double> values) {
  if (xs.size() < 2 || xs.size() != values.size()) throw InvalidPsi("tabulated psi needs at least two matching nodes");
  if (!(xs.front() > 0)) throw InvalidPsi("tabulated psi needs positive abscissae");
  require_increasing(xs, "tabulated abscissae");
  ApproxFunction f;
  f.family_ = Family::tabulated;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(values[i] > 0)) throw InvalidPsi("tabulated psi must be positive");
    if (i && values[i] > values[i - 1]) throw InvalidPsi("tabulated psi must be non-increasing");
    f.log_x_.push_back(std::log(xs[i]));
    f.log_y_.push_back(std::log(values[i]));
  }
  f.x0_ = xs.front();
  return f;
}

ApproxFunction ApproxFunction::callable(std::function<double(double)> fn, double x0, std::string label) {
  if (!fn || !(x0 > 0)) throw InvalidPsi("callable psi needs a function and x0 > 0");
  ApproxFunction f;
  f.family_ = Family::callable;
  f.fn_ = std::move(fn);
  f.x0_ = x0;
  f.label_ = std::move(label);
  return f;
}

double ApproxFunction::log_value_at_log(double u) const {
  if (u < std::log(x0_) - 1e-9) throw InvalidArgument("psi evaluated below its domain");
  switch (family_) {
    case Family::power_log:
      return std::log(c_) - a_ * u - (b_ == 0.0 ? 0.0 : b_ * log_log_e_plus_exp(u));
    case Family::tabulated:
      return interpolate(log_x_, log_y_, u);
    case Family::callable: {
      const double v = fn_(std::exp(u));
      if (!(v > 0)) throw InvalidPsi("callable psi returned a non-positive value");
      return std::log(v);
    }
  }
  return 0.0;
}

double ApproxFunction::log_value(double x) const {
  if (!(x > 0)) throw InvalidArgument("psi needs x > 0");
  return log_value_at_log(std::log(x));
}

double ApproxFunction::operator()(double x) const { return std::exp(log_value(x)); }

std::string ApproxFunction::describe() const {
  std::ostringstream os;
  switch (family_) {
    case Family::power_log:
      os << "power_log(c=" << c_ << ", a=" << a_ << ", b=" << b_ << ", x0=" << x0_ << ")";
      break;
    case Family::tabulated:
      os << "tabulated(" << log_x_.size() << " nodes, x0=" << x0_ << ")";
      break;
    case Family::callable:
      os << "callable(" << label_ << ", x0=" << x0_ << ")";
      break;
  }
  return os.str();
}

nlohmann::json ApproxFunction::to_json() const {
  switch (family_) {
    case Family::power_log:
      return {{"family", "power_log"}, {"c", c_}, {"a", a_}, {"b", b_}, {"x0", x0_}};
    case Family::tabulated: {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < log_x_.size(); ++i) {
        xs.push_back(std::exp(log_x_[i]));
        ys.push_back(std::exp(log_y_[i]));
      }
      return {{"family", "tabulated"}, {"x", xs}, {"psi", ys}};
    }
    case Family::callable:
      return {{"family", "callable"}, {"label", label_}, {"x0", x0_}};
  }
  return {};
}

ApproxFunction approx_function_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) throw ConfigError("psi must be an object with a family");
  const std::string fam = j.at("family").get<std::string>();
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
        throw ConfigError("unknown psi key: " + it.key());
  };
  try {
    if (fam == "power_log") {
      check_keys({"family", "c", "a", "b", "x0"});
      return ApproxFunction::power_log(j.value("c", 1.0), j.value("a", 0.0), j.value("b", 0.0), j.value("x0", 1.0));
    }
    if (fam == "tabulated") {
      check_keys({"family", "x", "psi"});
      return ApproxFunction::tabulated(j.at("x").get<std::vector<double>>(), j.at("psi").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed psi: ") + e.what());
  }
  throw ConfigError("unknown psi family: " + fam);
}

double t0_of(const ApproxFunction& psi, int d) {
  if (d < 1) throw InvalidArgument("d must be at least 1");
  const double lx = std::log(psi.x0());
  return d * (lx - psi.log_value_at_log(lx)) / (d + 1);
}

double r_from_psi(const ApproxFunction& psi, int d, double t) {
  const double t0 = t0_of(psi, d);
  if (t < t0 - 1e-9 * std::max(1.0, std::fabs(t0))) throw InvalidArgument("r_from_psi needs t >= t0");
  // G is strictly increasing in r; psi is only defined for r <= t - log x0.
  auto G = [&](double r) { return psi.log_value_at_log(t - r) + t / d + r; };
  double hi = t - std::log(psi.x0());
  const double ghi = G(hi);
  if (ghi < -1e-9 * std::max(1.0, std::fabs(t))) throw InvalidPsi("no root: psi is not monotone on the bracket");
  if (ghi <= 0) return hi;
  double width = std::fabs(t) + 1;
  double lo = hi - width;
  int grow = 0;
  while (G(lo) >= 0) {
    if (++grow > 200) throw InvalidPsi("bracket for r could not be grown");
    width *= 2;
    lo = hi - width;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (G(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RateFunction RateFunction::affine(double slope, double intercept, double t_start) {
  RateFunction r;
  r.kind_ = Kind::affine;
  r.p_ = slope;
  r.q_ = intercept;
  r.t_start_ = t_start;
  return r;
}

RateFunction RateFunction::logarithmic(double coef, double intercept, double t_start) {
  if (!(t_start > -1)) throw InvalidArgument("logarithmic rate needs t_start > -1");
  RateFunction r;
  r.kind_ = Kind::logarithmic;
  r.p_ = coef;
  r.q_ = intercept;
  r.t_start_ = t_start;
  return r;
}

RateFunction RateFunction::tabulated(std::vector<double> ts, std::vector<double> rs) {
  if (ts.size() < 2 || ts.size() != rs.size()) throw InvalidArgument("tabulated rate needs at least two matching nodes");
  require_increasing(ts, "tabulated times");
  RateFunction r;
  r.kind_ = Kind::tabulated;
  r.t_start_ = ts.front();
  r.ts_ = std::move(ts);
  r.rs_ = std::move(rs);
  return r;
}

RateFunction RateFunction::from_psi(const ApproxFunction& psi, int d) {
  RateFunction r;
  r.kind_ = Kind::from_psi;
  r.psi_ = psi;
  r.d_ = d;
  r.t_start_ = t0_of(psi, d);
  return r;
}

double RateFunction::operator()(double t) const {
  if (t < t_start_ - 1e-9 * std::max(1.0, std::fabs(t_start_))) throw InvalidArgument("rate evaluated before t_start");
  switch (kind_) {
    case Kind::affine:
      return p_ * t + q_;
    case Kind::logarithmic:
      return p_ * std::log1p(t) + q_;
    case Kind::tabulated:
      return interpolate(ts_, rs_, t);
    case Kind::from_psi:
      return r_from_psi(*psi_, d_, std::max(t, t_start_));
  }
  return 0.0;
}

RateAsymptotics RateFunction::asymptotics() const {
  switch (kind_) {
    case Kind::affine:
      return {p_, 0.0};
    case Kind::logarithmic:
      return {0.0, p_};
    case Kind::tabulated: {
      const std::size_t n = ts_.size();
      return {(rs_[n - 1] - rs_[n - 2]) / (ts_[n - 1] - ts_[n - 2]), 0.0};
    }
    case Kind::from_psi:
      break;
  }
  const ApproxFunction& psi = *psi_;
  if (psi.family() == ApproxFunction::Family::power_log) {
    // (1+a) r = (a - 1/d) t - log c + b log log(e + e^{t-r})
    const double a = psi.a();
    return {(a - 1.0 / d_) / (1 + a), psi.b() / (1 + a)};
  }
  // Least squares r ~ s t + l log t + c on a geometric grid.
  const int n = 40;
  const double t_lo = std::max(t_start_, 1.0) + 100, t_hi = t_lo * 100;
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double t = t_lo * std::pow(t_hi / t_lo, double(i) / (n - 1));
    A(i, 0) = t;
    A(i, 1) = std::log(t);
    A(i, 2) = 1.0;
    y(i) = (*this)(t);
  }
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(y);
  return {sol(0), sol(1)};
}

bool RateFunction::closed_form_asymptotics() const {
  return kind_ != Kind::from_psi || psi_->family() == ApproxFunction::Family::power_log;
}

std::string RateFunction::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::affine:
      os << "affine(slope=" << p_ << ", intercept=" << q_ << ")";
      break;
    case Kind::logarithmic:
      os << "logarithmic(coef=" << p_ << ", intercept=" << q_ << ")";
      break;
    case Kind::tabulated:
      os << "tabulated(" << ts_.size() << " nodes)";
      break;
    case Kind::from_psi:
      os << "from_psi(" << psi_->describe() << ", d=" << d_ << ")";
      break;
  }
  return os.str();
}

double psi_from_r(const RateFunction& rate, int d, double x) {
  if (!(x > 0)) throw InvalidArgument("psi_from_r needs x > 0");
  const double lx = std::log(x);
  const double t0 = rate.t_start();
  auto h = [&](double t) { return t - rate(t) - lx; };
  const double h0 = h(t0);
  if (h0 > 1e-12 * std::max(1.0, std::fabs(lx))) throw InvalidArgument("x is below the domain of psi");
  double lo = t0, hi = t0 + 1;
  int grow = 0;
  while (h(hi) < 0) {
    if (++grow > 200) throw InvalidArgument("t - r(t) does not reach log x");
    lo = hi;
    hi = t0 + 2 * (hi - t0);
  }
  for (int it = 0; it < 400 && hi - lo > 1e-13 * std::max(1.0, std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (h(mid) < 0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  return std::exp(-t / d - rate(t));
}

MonotonicityReport check_rate_monotonicity(const RateFunction& rate, int d, double t_lo, double t_hi, int n) {
  if (n < 2 || !(t_hi > t_lo)) throw InvalidArgument("monotonicity grid needs n >= 2 and t_hi > t_lo");
  MonotonicityReport rep{true, true};
  double prev_a = 0, prev_b = 0;
  for (int i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (n - 1);
    const double r = rate(t);
    const double a = t - r, b = t / d + r;
    if (i) {
      if (!(a > prev_a)) rep.t_minus_r_increasing = false;
      if (b < prev_b - 1e-12 * std::max(1.0, std::fabs(b))) rep.t_over_d_plus_r_nondecreasing = false;
    }
    prev_a = a;
    prev_b = b;
  }
  return rep;
}

std::string to_string(SeriesVerdict v) {
  switch (v) {
    case SeriesVerdict::converges:
      return "converges";
    case SeriesVerdict::diverges:
      return "diverges";
    case SeriesVerdict::numeric:
      return "numeric";
  }
  return "?";
}

namespace {

constexpr double kExact = 1e-12;

// Cauchy condensation on log terms log(2^k f(2^k)), k = 0..kmax: the tail is
// judged convergent when the late condensed terms shrink geometrically.
SeriesClassification condensation_verdict(const std::function<double(double)>& log_term, int kmax,
                                          const std::string& what) {
  std::vector<double> lc;
  for (int k = 0; k <= kmax; ++k) lc.push_back(k * std::log(2.0) + log_term(std::ldexp(1.0, k)));
  const int tail = 10;
  const double drop = (lc[std::size_t(kmax)] - lc[std::size_t(kmax - tail)]) / tail;
  SeriesClassification c;
  c.verdict = SeriesVerdict::numeric;
  c.converging_partial_sums = drop < std::log(0.95);
  c.exponent = drop / std::log(2.0);
  c.reason = what + ": condensed terms change by a factor " + std::to_string(std::exp(drop)) + " per doubling";
  return c;
}

}  // namespace

SeriesClassification classify_khintchine_series(const ApproxFunction& psi, int d, double alpha) {
  if (!(alpha > 0)) throw InvalidArgument("alpha must be positive");
  if (d < 1) throw InvalidArgument("d must be at least 1");
  if (psi.family() == ApproxFunction::Family::power_log) {
    // Terms behave like c^alpha x^e (log x)^{-b alpha}.
    const double e = alpha / d - 1 - psi.a() * alpha;
    SeriesClassification c;
    c.exponent = e;
    const bool conv = e < -1 - kExact || (std::fabs(e + 1) <= kExact && psi.b() * alpha > 1 + kExact);
    c.verdict = conv ? SeriesVerdict::converges : SeriesVerdict::diverges;
    c.reason = "power exponent " + std::to_string(e) + ", log exponent " + std::to_string(-psi.b() * alpha);
    return c;
  }
  const double start = std::max(1.0, psi.x0());
  return condensation_verdict(
      [&](double x) { return (alpha / d - 1) * std::log(x * start) + alpha * psi.log_value(x * start); }, 60,
      "khintchine series");
}

SeriesClassification classify_rate_series(const RateFunction& rate, double gamma) {
  if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
  if (rate.closed_form_asymptotics()) {
    const RateAsymptotics as = rate.asymptotics();
    SeriesClassification c;
    c.exponent = as.slope;
    bool conv;
    if (as.slope > kExact)
      conv = true;
    else if (as.slope < -kExact)
      conv = false;
    else
      conv = gamma * as.log_coef > 1 + kExact;
    c.verdict = conv ? SeriesVerdict::converges : SeriesVerdict::diverges;
    c.reason = "rate slope " + std::to_string(as.slope) + ", log coefficient " + std::to_string(as.log_coef);
    return c;
  }
  const double start = std::max(1.0, rate.t_start());
  return condensation_verdict([&](double t) { return -gamma * rate(t * start); }, 40, "rate series");
}

IntegralPair dani_integral_pair(const ApproxFunction& psi, int d, int q) {
  if (psi.family() != ApproxFunction::Family::power_log) throw InvalidArgument("integral pair needs a power_log psi");
  if (q < 0) throw InvalidArgument("q must be nonnegative");
  const double a = psi.a(), b = psi.b();
  IntegralPair p;
  // int (log x)^{q-b} x^{-a} dx
  p.psi_integral_converges = a > 1 + kExact || (std::fabs(a - 1) <= kExact && b - q > 1 + kExact);
  // int t^q e^{-(d+1)(s t + l log t)} dt
  const double s = (a - 1.0 / d) / (1 + a), l = b / (1 + a);
  p.rate_integral_converges = s > kExact || (std::fabs(s) <= kExact && (d + 1) * l - q > 1 + kExact);
  return p;
}

EquivalenceReport equivalence_check(const ApproxFunction& psi, int d, double alpha, const std::vector<double>& grid) {
  if (!(alpha > 0)) throw InvalidArgument("alpha must be positive");
  using boost::math::quadrature::gauss_kronrod;
  EquivalenceReport rep;
  rep.gamma = alpha * (d + 1) / d;
  const double g = rep.gamma;
  const RateFunction rate = RateFunction::from_psi(psi, d);
  const double t0 = rate.t_start();
  const double u0 = std::log(psi.x0());
  const double e0 = std::exp(-g * (t0 - u0));  // r(t0) = t0 - log x0

  std::vector<double> ts(grid);
  std::sort(ts.begin(), ts.end());
  double prev_t = t0, prev_u = u0, i_r = 0, i_psi = 0;
  rep.max_identity_residual = 0;
  for (double T : ts) {
    if (T <= t0) continue;
    const double rT = rate(T);
    const double uT = T - rT;
    i_r += gauss_kronrod<double, 31>::integrate([&](double t) { return std::exp(-g * rate(t)); }, prev_t, T, 15,
                                                1e-13);
    i_psi += gauss_kronrod<double, 31>::integrate(
        [&](double u) { return std::exp(u * alpha / d + alpha * psi.log_value_at_log(u)); }, prev_u, uT, 15, 1e-13);
    prev_t = T;
    prev_u = uT;
    EquivalenceRow row;
    row.T = T;
    row.X = std::exp(uT);
    row.i_psi = i_psi;
    row.i_r = i_r;
    row.identity_residual = std::fabs(i_psi - i_r - (std::exp(-g * rT) - e0) / g) / std::max(1.0, std::fabs(i_psi));
    row.ratio = i_psi / i_r;
    rep.max_identity_residual = std::max(rep.max_identity_residual, row.identity_residual);
    rep.rows.push_back(row);
  }
  rep.psi_side = classify_khintchine_series(psi, d, alpha);
  rep.rate_side = classify_rate_series(rate, g);
  rep.verdicts_agree = rep.psi_side.converges() == rep.rate_side.converges();
  if (psi.family() == ApproxFunction::Family::power_log) rep.q0 = dani_integral_pair(psi, d, 0);
  return rep;
}

}  // namespace khl
