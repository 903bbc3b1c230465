// Acceptance checks. Prints one PASS/FAIL line per criterion with its
// wall time and limit; exits nonzero if any criterion fails.
// Usage: acceptance [A1 A7 ...] to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "khintchine/approx.hpp"
#include "khintchine/constants.hpp"
#include "khintchine/dani.hpp"
#include "khintchine/excursions.hpp"
#include "khintchine/homogeneous.hpp"
#include "khintchine/lattice.hpp"
#include "khintchine/orbit.hpp"
#include "khintchine/random.hpp"
#include "khintchine/runner.hpp"
#include "oracles.hpp"

using namespace khl;

namespace {

const double kS = std::log(2.0) / std::log(3.0);

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double limit_seconds;
  std::function<Outcome()> body;
};

int workers() {
  const int env = default_workers();
  if (env > 1) return env;
  return std::max(1, int(std::thread::hardware_concurrency()));
}

std::string fmt(double v) { return format_number(v); }

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Mat random_rotation(Rng& rng, int d) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

Vec random_vec(Rng& rng, int d, double lo, double hi) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

// rho action and P-decomposition identities on random elements.
Outcome a1() {
  Rng rng(101);
  double formula = 0, action = 0, roundtrip = 0, diag = 0, gt = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + int(rng.below(3));
    const double t = rng.uniform(-2, 2);
    const Mat o = random_rotation(rng, d);
    const Vec alpha = random_vec(rng, d, -2, 2), beta = random_vec(rng, d, -2, 2);
    const Mat p = diag_matrix(t, d) * rotation_matrix(o) * unipotent_matrix(alpha);

    // a_t k_O u_alpha acts by beta -> e^{(d+1)t/d} (beta - alpha) O^T.
    const Vec expect = std::exp((d + 1) * t / d) * (beta - alpha) * o.transpose();
    formula = std::max(formula, max_abs(Vec(rho_apply(p, beta) - expect)) / std::max(1.0, max_abs(expect)));
    const Mat q = diag_matrix(rng.uniform(-2, 2), d) * rotation_matrix(random_rotation(rng, d)) *
                  unipotent_matrix(random_vec(rng, d, -2, 2));
    const Vec lhs = rho_apply(p * q, beta), rhs = rho_apply(p, rho_apply(q, beta));
    action = std::max(action, max_abs(Vec(lhs - rhs)) / std::max(1.0, max_abs(rhs)));

    const auto dec = decompose_P(p);
    const Mat back = diag_matrix(dec.t, d) * rotation_matrix(dec.rotation) * unipotent_matrix(dec.alpha);
    roundtrip = std::max(roundtrip, max_abs(Mat(back - p)) / std::max(1.0, max_abs(p)));

    const double s = rng.uniform(-3, 3), u = rng.uniform(-3, 3);
    const Mat ds = diag_matrix(s + u, d);
    diag = std::max(diag, max_abs(Mat(diag_matrix(s, d) * diag_matrix(u, d) - ds)) / max_abs(ds));
    const double gs = rng.uniform(0.05, 3), gu = rng.uniform(0.05, 3);
    const Mat gp = gt_matrix(gs * gu, d);
    gt = std::max(gt, max_abs(Mat(gt_matrix(gs, d) * gt_matrix(gu, d) - gp)) / max_abs(gp));
  }
  const double worst = std::max({formula, action, roundtrip, diag, gt});
  return {worst <= 1e-10, "formula " + fmt(formula) + ", action " + fmt(action) + ", decomposition " +
                              fmt(roundtrip) + ", a_s a_t " + fmt(diag) + ", g_s g_t " + fmt(gt)};
}

// The inverse walk element acts as the composed coding map.
Outcome a2() {
  Rng rng(202);
  double worst = 0;
  long checks = 0;
  for (int word_index = 0; word_index < 100; ++word_index) {
    const int d = 1 + word_index % 2;
    const auto sys = cantor_product(d);
    const auto steps = walk_steps(sys);
    const auto word = SymbolStream(sys, rng.bits()).take(40);
    const auto prefixes = walk_prefixes(steps, word);
    const Vec beta = random_vec(rng, d, 0, 1);
    for (int n = 1; n <= 40; ++n) {
      const SymbolWord head(word.begin(), word.begin() + n);
      const Vec lhs = rho_apply(prefixes[std::size_t(n)].inverse(), beta);
      const Vec rhs = coding_point(sys, head, beta).point;
      worst = std::max(worst, max_abs(Vec(lhs - rhs)));
      ++checks;
    }
  }
  return {worst <= 1e-8, fmt(double(checks)) + " prefixes, max residual " + fmt(worst)};
}

// The A-component of h_{b_1^n} is a_{n t_1}.
Outcome a3() {
  Rng rng(303);
  double worst_t = 0, worst_k = 0;
  for (int d = 1; d <= 2; ++d) {
    const auto sys = cantor_product(d);
    const auto steps = walk_steps(sys);
    const double t1 = d == 1 ? std::log(3.0) / 2 : 2 * std::log(3.0) / 3;
    for (int rep = 0; rep < 20; ++rep) {
      const auto word = SymbolStream(sys, rng.bits()).take(100);
      const auto prefixes = walk_prefixes(steps, word);
      for (int n = 1; n <= 100; ++n) {
        const auto dec = decompose_P(prefixes[std::size_t(n)]);
        worst_t = std::max(worst_t, std::fabs(dec.t - n * t1));
        worst_k = std::max(worst_k, max_abs(Mat(dec.rotation - Mat::Identity(d, d))));
      }
    }
  }
  return {worst_t <= 1e-10 && worst_k <= 1e-10,
          "max |t - n t_1| " + fmt(worst_t) + ", max rotation residual " + fmt(worst_k)};
}

// Multiprecision walk factorization identity on 100 streams per dimension.
Outcome a4() {
  double worst = 0;
  for (int d = 1; d <= 2; ++d) {
    const auto sys = cantor_product(d);
    for (std::uint64_t s = 0; s < 100; ++s)
      for (int n : {1, 2, 5, 10, 20, 35, 50}) worst = std::max(worst, appendix_identity_check(sys, task_seed(404, s), n));
  }
  return {worst <= 1e-6, "max residual " + fmt(worst)};
}

// Certified shortest vector against brute force, and unimodular invariance.
Outcome a5() {
  Rng rng(505);
  int tested = 0, mismatches = 0, invariance_failures = 0, skipped = 0;
  double worst = 0, worst_inv = 0;
  while (tested < 1000) {
    const int n = 2 + tested % 3;
    GroupElement g;
    if (tested % 2 == 0) {
      g = GroupElement(oracle::random_unimodular_real(rng, n));
    } else {
      g = diagonal_point(random_vec(rng, n - 1, 0, 1), rng.uniform(0, 2.5));
    }
    const Mat basis = lattice_basis(g);
    // Any lattice vector bounds the minimum; coefficients of a vector v are v g.
    double upper = INFINITY;
    for (int i = 0; i < n; ++i) upper = std::min(upper, basis.row(i).cwiseAbs().maxCoeff());
    const double colsum = g.matrix.cwiseAbs().colwise().sum().maxCoeff();
    const int box = int(std::floor(colsum * upper * (1 + 1e-12))) + 1;
    const int cap = n == 2 ? 400 : n == 3 ? 40 : 12;
    if (box > cap) {
      ++skipped;
      continue;
    }
    ++tested;
    const auto sv = shortest_vector_of_basis(basis);
    const double bf = oracle::brute_force_delta(basis, box);
    const double gap = std::fabs(sv.delta - bf) / bf;
    worst = std::max(worst, gap);
    if (gap > 1e-12) ++mismatches;
    if (std::fabs(max_abs(Vec(sv.witness.cast<double>() * basis)) - sv.delta) > 1e-12 * sv.delta) ++mismatches;

    const Mat gamma = oracle::random_integer_unimodular(rng, n, 12);
    const double moved = shortest_vector(GroupElement(g.matrix * gamma)).delta;
    const double inv = std::fabs(moved - sv.delta) / sv.delta;
    worst_inv = std::max(worst_inv, inv);
    if (inv > 1e-9) ++invariance_failures;
  }
  return {mismatches == 0 && invariance_failures == 0,
          fmt(tested) + " points (" + fmt(skipped) + " redrawn), max relative gap " + fmt(worst) +
              ", max invariance gap " + fmt(worst_inv)};
}

// Closed forms of the rate function.
Outcome a6() {
  double closed = 0, critical = 0, roundtrip = 0;
  for (int d = 1; d <= 5; ++d)
    for (double a : {0.0, 0.3, 1.0, 2.0, 3.5}) {
      const auto psi = ApproxFunction::power_log(1.0, a);
      const auto rate = RateFunction::from_psi(psi, d);
      for (double t : {0.0, 0.7, 3.0, 25.0, 400.0}) {
        const double expect = (a - 1.0 / d) * t / (1 + a);
        closed = std::max(closed, std::fabs(r_from_psi(psi, d, t) - expect) / std::max(1.0, std::fabs(expect)));
      }
      for (double x : {1.0, 2.0, 10.0, 1e3, 1e8}) {
        const double back = psi_from_r(rate, d, x);
        roundtrip = std::max(roundtrip, std::fabs(back - psi(x)) / psi(x));
      }
      const auto crit = ApproxFunction::power_log(1.0, 1.0 / d);
      for (double t : {0.0, 1.0, 10.0, 100.0, 1e4}) critical = std::max(critical, std::fabs(r_from_psi(crit, d, t)));
    }
  return {closed <= 1e-9 && critical <= 1e-9 && roundtrip <= 1e-8,
          "closed form " + fmt(closed) + ", critical |r| " + fmt(critical) + ", round trip " + fmt(roundtrip)};
}

// Hits and heights agree in both directions.
Outcome a7() {
  const std::vector<std::pair<std::string, ApproxPoint>> points = {{"0", ApproxPoint::rational(0, 1)},
                                                                   {"1/2", ApproxPoint::rational(1, 2)},
                                                                   {"3/7", ApproxPoint::rational(3, 7)},
                                                                   {"golden", ApproxPoint::golden()}};
  const std::vector<std::pair<std::string, ApproxFunction>> psis = {{"1/q", ApproxFunction::power_log(1.0, 1.0)},
                                                                    {"q^-1.5", ApproxFunction::power_log(1.0, 1.5)},
                                                                    {"0.44/q", ApproxFunction::power_log(0.44, 1.0)}};
  Outcome out;
  long checked = 0, converse = 0, crossings = 0;
  std::ostringstream bad;
  for (const auto& [xn, x] : points)
    for (const auto& [pn, psi] : psis) {
      const auto rep = dani_cross_check(x, psi, 1, 10000, 1e-6);
      checked += rep.checked;
      converse += rep.converse_times;
      crossings += rep.converse_crossings;
      if (rep.violations || rep.converse_violations) {
        out.ok = false;
        bad << " [" << xn << ", " << pn << ": " << rep.violations << " + " << rep.converse_violations << "]";
      }
    }
  out.detail = fmt(double(checked)) + " hits checked, " + fmt(double(converse)) + " converse times, " +
               fmt(double(crossings)) + " crossings" + (out.ok ? ", no violations" : ", violations" + bad.str());
  return out;
}

Outcome a8() {
  auto qs = [](const std::vector<HitRecord>& hits) {
    std::vector<long long> v;
    for (const auto& h : hits) v.push_back(h.q);
    return v;
  };
  const auto half = qs(scan_hits(ApproxPoint::rational(1, 2), ApproxFunction::power_log(1.0, 1.0), 10));
  const auto golden = qs(scan_hits(ApproxPoint::golden(), ApproxFunction::power_log(0.44, 1.0), 100000));
  auto show = [](const std::vector<long long>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
  };
  return {half == std::vector<long long>{1, 2, 4, 6, 8, 10} && golden == std::vector<long long>{1, 3},
          "1/2: " + show(half) + ", golden: " + show(golden)};
}

// Growth bound on diagonal orbits of Cantor points.
Outcome a9() {
  const long n_max = 2000;
  long violations = 0, records = 0;
  double worst_margin = -INFINITY;
  for (int d = 1; d <= 2; ++d) {
    const auto sys = cantor_product(d);
    const double kappa = sys.ratio();
    const mpfr_prec_t bits = diagonal_bits(step_time(kappa, d) * double(n_max + 1), d);
    const int depth = coding_depth_for_bits(bits, kappa);
    for (double level : {1.0, 3.0}) {
      const CompactWindow window(level);
      for (std::uint64_t o = 0; o < 100; ++o) {
        const auto word = SymbolStream(sys, task_seed(909 + std::uint64_t(d), o)).take(depth);
        const auto ex = diagonal_excursions(coding_point_mp(sys, word, bits), kappa, window, n_max, 8);
        violations += long(growth_bound_check(ex.records, window, kappa, d).size());
        for (const auto& r : ex.records) {
          ++records;
          worst_margin = std::max(worst_margin, r.peak - growth_bound(r.length, window, kappa, d) - r.peak_slack);
        }
      }
    }
  }
  return {violations == 0 && records > 0, fmt(double(records)) + " excursions over 400 orbits, " +
                                              fmt(double(violations)) + " violations, max peak - bound " +
                                              fmt(worst_margin)};
}

// Excursion tails under the Chebyshev envelope.
Outcome a10() {
  const auto sys = cantor_product(1);
  const auto b = rate_budget(1.0 / 3, 1, kS, 0.0, 0.5, 12);
  const auto rep = tail_report(sys, CompactWindow(3.0), 200, 5000, 1010, b.m, b.delta, workers());
  bool dominated = true;
  for (std::size_t i = 0; i < rep.thresholds.size(); ++i)
    dominated = dominated && rep.empirical_tail[i] <= rep.chebyshev_bound[i];
  return {dominated && rep.fitted_rate_lo > 0,
          fmt(double(rep.samples)) + " excursions, delta/m " + fmt(rep.exponent) + ", tail dominated: " +
              (dominated ? "yes" : "no") + ", fitted rate " + fmt(rep.fitted_rate) + " [" + fmt(rep.fitted_rate_lo) +
              ", " + fmt(rep.fitted_rate_hi) + "]"};
}

Outcome a11() {
  Outcome out;
  std::ostringstream det;

  double varpi_gap = 0;
  for (int d = 1; d <= 4; ++d) {
    const double exact = d * kS;
    varpi_gap = std::max(varpi_gap, std::fabs(varpi_of(cantor_alphas(d), d) - exact) / exact);
  }
  out.ok = varpi_gap <= 4 * std::numeric_limits<double>::epsilon();
  det << "varpi gap " << fmt(varpi_gap);

  Rng rng(1111);
  long certs = 0, over = 0;
  for (int d = 1; d <= 3; ++d)
    for (int n = 1; n <= 8; ++n) {
      std::vector<std::pair<Vec, double>> planes;
      planes.emplace_back(Vec::Ones(d), 1.0);
      planes.emplace_back(Vec::Ones(d), d / 2.0);
      Vec e0 = Vec::Zero(d);
      e0(0) = 1;
      planes.emplace_back(e0, 0.0);
      planes.emplace_back(e0, 2.0 / 3);
      for (int k = 0; k < (d == 3 ? 4 : 12); ++k) planes.emplace_back(random_vec(rng, d, -1, 1), rng.uniform(-0.5, 1.5));
      for (const auto& [c, rhs] : planes) {
        const auto cert = cover_hyperplane(c, rhs, n);
        ++certs;
        if (double(cert.count) > cert.count_bound() || cert.bound_constant != 3 * std::ldexp(1.0, d - 1)) ++over;
      }
    }
  out.ok = out.ok && over == 0;
  det << "; " << certs << " certificates, " << over << " over the bound";

  const auto est = alpha_estimate(cantor_product(2), 1, 2, 8, 200, 1111, 1000000, workers());
  out.ok = out.ok && est.slope >= 0.58 && est.slope <= 0.68;
  det << "; alpha_1 slope " << fmt(est.slope) << " (se " << fmt(est.slope_se) << ")";
  out.detail = det.str();
  return out;
}

// Series verdicts agree across the change of variables.
Outcome a12() {
  int cases = 0, agree = 0, expected = 0;
  for (int d = 1; d <= 3; ++d) {
    const double alpha = d * kS;
    for (double a : {0.5 / d, 1.0 / d, 2.0 / d}) {
      const auto psi = ApproxFunction::power_log(1.0, a);
      const auto k = classify_khintchine_series(psi, d, alpha);
      const auto r = classify_rate_series(RateFunction::from_psi(psi, d), alpha * (d + 1) / d);
      ++cases;
      if (k.verdict == r.verdict) ++agree;
      // Sum of x^{alpha/d - 1 - a alpha} converges iff a > 1/d.
      const auto want = a > 1.0 / d ? SeriesVerdict::converges : SeriesVerdict::diverges;
      if (k.verdict == want) ++expected;
    }
  }
  return {agree == cases && expected == cases,
          fmt(agree) + "/" + fmt(cases) + " agree, " + fmt(expected) + "/" + fmt(cases) + " match the exponent test"};
}

Outcome a13() {
  const auto sys = cantor_product(1);
  const auto conv = survey(sys, ApproxFunction::power_log(1.0, 1.5), 1000, 10000, sys.default_depth(), 1, kS, workers());
  const auto ctrl = survey(sys, ApproxFunction::power_log(1.0, 0.0), 1000, 10000, sys.default_depth(), 1, kS, workers());
  bool monotone = true;
  std::ostringstream series;
  for (std::size_t i = 0; i < conv.bands.size(); ++i) {
    if (conv.bands[i].k < 5) continue;
    series << (conv.bands[i].k == 5 ? "" : " ") << fmt(conv.bands[i].fraction);
    if (conv.bands[i].k > 5 && conv.bands[i].fraction > conv.bands[i - 1].fraction) monotone = false;
  }
  const double top = conv.bands.back().fraction;
  bool control = true;
  for (const auto& b : ctrl.bands) control = control && b.fraction == 1.0;
  return {monotone && top <= 0.05 && control && conv.series.verdict == SeriesVerdict::converges,
          "fractions k>=5: " + series.str() + "; top band " + fmt(top) + "; control all ones: " +
              (control ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"A1", "rho action and decomposition identities", 1, a1},
      {"A2", "walk inverse equals composed coding map", 5, a2},
      {"A3", "diagonal projection of walk elements", 1, a3},
      {"A4", "walk factorization identity", 30, a4},
      {"A5", "shortest vector vs brute force", 60, a5},
      {"A6", "rate function closed forms", 5, a6},
      {"A7", "hit/height cross-check", 60, a7},
      {"A8", "brute-force approximability examples", 30, a8},
      {"A9", "growth bound on diagonal orbits", 300, a9},
      {"A10", "excursion tails", 300, a10},
      {"A11", "fractal constants", 600, a11},
      {"A12", "series verdict equivalence", 1, a12},
      {"A13", "statistical survey", 600, a13},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.ok && in_time;
    if (!pass) ++failed;
    std::printf("%-4s %s  %.2fs (limit %gs)  %s: %s%s\n", c.id.c_str(), pass ? "PASS" : "FAIL", secs, c.limit_seconds,
                c.title.c_str(), o.detail.c_str(), in_time ? "" : " [over time limit]");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
