#include <cmath>

#include "doctest.h"
#include "khintchine/constants.hpp"
#include "khintchine/errors.hpp"
#include "khintchine/random.hpp"

using namespace khl;

namespace {

const double kS = std::log(2.0) / std::log(3.0);

// Points of the Cantor product inside the neighborhood, by rejection.
std::vector<Vec> neighborhood_points(int d, const Vec& coeffs, double rhs, int n, int want, std::uint64_t seed) {
  const auto q = SubspaceQuery::hyperplane(coeffs, rhs, std::pow(3.0, -n));
  const auto sys = cantor_product(d);
  std::vector<Vec> out;
  for (std::uint64_t round = 0; int(out.size()) < want && round < 200; ++round)
    for (const auto& p : sample_fractal(sys, 40, task_seed(seed, round), 20000))
      if (q.contains(p) && int(out.size()) < want) out.push_back(p);
  return out;
}

// Admissible level-n squares meeting {|a x + b y - num/den| < (|a| + |b|) 3^-n}, all in integers.
long brute_force_count(long a, long b, long num, long den, int n) {
  long p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  std::vector<long> cells;
  for (long i = 0; i < p; ++i) {
    bool ok = true;
    for (long v = i; v > 0; v /= 3) ok = ok && v % 3 != 1;
    if (ok) cells.push_back(i);
  }
  const long l1 = std::labs(a) + std::labs(b);
  long count = 0;
  for (long i : cells)
    for (long j : cells) {
      // Units of 1/(den p): a x + b y over the square, against num p.
      const long base = den * (a * i + b * j);
      const long lo = base + den * (std::min(a, 0L) + std::min(b, 0L));
      const long hi = base + den * (std::max(a, 0L) + std::max(b, 0L));
      if (lo < num * p + den * l1 && hi > num * p - den * l1) ++count;
    }
  return count;
}

}  // namespace

TEST_CASE("cover_hyperplane examples") {
  const auto c1 = cover_hyperplane(Vec::Constant(1, 1.0), 0.5, 3);
  CHECK(c1.count <= 3);
  CHECK(c1.bound_constant == 3.0);
  const auto c1a = cover_hyperplane(Vec::Constant(1, 1.0), 0.5, 1);
  CHECK(c1a.count == 2);  // (1/6, 5/6) meets both first-level intervals

  Vec xy(2);
  xy << 1.0, 1.0;
  const auto c2 = cover_hyperplane(xy, 1.0, 3);
  CHECK(c2.bound_constant == 6.0);
  CHECK(c2.count <= 48);
  CHECK(c2.count == brute_force_count(1, 1, 2, 2, 3));
  CHECK(measure_upper_bound(c2, 2) == double(c2.count) / 64);

  Vec xyz(3);
  xyz << 1.0, -2.0, 0.5;
  const auto c3 = cover_hyperplane(xyz, 0.25, 2);
  CHECK(c3.bound_constant == 12.0);
  CHECK(c3.count <= 192);
  for (long i = 0; i < c3.count; ++i) CHECK(c3.admissible(i));
  CHECK(c3.word_string(0).size() == 7);
}

TEST_CASE("cover counts match a brute-force square count") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const long a = long(rng.below(9)) - 4, b = 1 + long(rng.below(4)), num = long(rng.below(13)) - 4, den = 1L << rng.below(3);  // dyadic, so the double rhs is exact
    const int n = 1 + int(rng.below(4));
    Vec c(2);
    c << double(a), double(b);
    CHECK(cover_hyperplane(c, double(num) / den, n).count == brute_force_count(a, b, num, den, n));
  }
}

TEST_CASE("certificate words and coverage of known points") {
  Vec xy(2);
  xy << 1.0, 1.0;
  const auto c = cover_hyperplane(xy, 1.0, 2);
  // (0, 1) and (1, 0) lie on x + y = 1 and in the Cantor square.
  Vec a(2), b(2), far(2);
  a << 0.0, 1.0;
  b << 1.0, 0.0;
  far << 0.0, 0.0;
  CHECK(c.covers(a));
  CHECK(c.covers(b));
  CHECK_FALSE(c.covers(far));
  for (long i = 0; i < c.count; ++i) {
    const auto w = c.word(i);
    CHECK(w.size() == 4);
  }
}

TEST_CASE("count bound holds for every certificate, n <= 10, d <= 3") {
  Rng rng(8);
  for (int d = 1; d <= 3; ++d)
    for (int n = 1; n <= 10; ++n)
      for (int trial = 0; trial < (d < 3 ? 10 : n <= 8 ? 3 : 1); ++trial) {
        Vec c(d);
        for (int j = 0; j < d; ++j) c(j) = rng.uniform(-1, 1);
        if (trial == 0) c.setOnes();
        const double rhs = trial == 0 ? 1.0 : rng.uniform(-0.5, 1.5);
        const auto cert = cover_hyperplane(c, rhs, n);
        CHECK(double(cert.count) <= cert.count_bound());
        // The alpha upper chain: log mu / log eps >= s - log C_d/(n log 3).
        const double mu = measure_upper_bound(cert, d);
        if (mu > 0) CHECK(std::log(mu) / std::log(std::pow(3.0, -n)) >= kS - std::log(cert.bound_constant) / (n * std::log(3.0)) - 1e-12);
      }
}

TEST_CASE("certificate soundness on sampled neighborhood points") {
  Rng rng(29);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 3; ++trial) {
      Vec c(d);
      for (int j = 0; j < d; ++j) c(j) = trial == 0 ? 1.0 : rng.uniform(-1, 1);
      // Through a point of the set, so the neighborhood has mass.
      const Vec p = sample_fractal(cantor_product(d), 40, 100 + trial, 1)[0];
      const double rhs = trial == 0 ? (d == 1 ? 2.0 / 3 : 1.0) : c.dot(p);
      const int n = d == 3 ? 3 : 4;
      const auto cert = cover_hyperplane(c, rhs, n);
      const auto pts = neighborhood_points(d, c, rhs, n, 10000 / 3, 7 * d + trial);
      CHECK(pts.size() > 100);
      long missed = 0;
      for (const auto& x : pts) missed += cert.covers(x) ? 0 : 1;
      CHECK(missed == 0);
    }
  }
}

TEST_CASE("cover_hyperplane errors") {
  CHECK_THROWS_AS(cover_hyperplane(Vec::Zero(2), 1.0, 3), InvalidArgument);
  CHECK_THROWS_AS(cover_hyperplane(Vec::Ones(2), 1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(cover_hyperplane(Vec::Ones(3), 1.0, 20), ResourceError);
  CHECK_THROWS_AS(cover_hyperplane(Vec::Ones(1), 0.5, 30), ResourceError);
  Vec wide(2);
  wide << 1.0, 1e-30;
  CHECK_THROWS_AS(cover_hyperplane(wide, 0.5, 3), InvalidArgument);
}

TEST_CASE("measure and axis bounds") {
  CoverCertificate cert;
  cert.d = 1;
  cert.n = 4;
  cert.count = 3;
  CHECK(measure_upper_bound(cert, 1) == 3.0 / 16);
  cert.count = 0;
  CHECK(measure_upper_bound(cert, 1) == 0.0);
  CHECK_THROWS_AS(measure_upper_bound(cert, 2), DimensionError);

  CHECK(axis_subspace_measure(2, 1, 2) == std::pair<double, double>(1.0 / 8, 1.0 / 4));
  CHECK(axis_subspace_measure(1, 1, 5) == std::pair<double, double>(std::ldexp(1.0, -6), std::ldexp(1.0, -5)));
  CHECK(axis_subspace_measure(3, 3, 0) == std::pair<double, double>(0.125, 1.0));
  CHECK_THROWS_AS(axis_subspace_measure(2, 3, 1), InvalidArgument);
}

TEST_CASE("axis bounds sandwich empirical masses") {
  for (int d = 1; d <= 3; ++d) {
    const auto sys = cantor_product(d);
    const int N = 200000;
    const auto pts = sample_fractal(sys, 40, 55 + d, N);
    for (int l = 1; l <= d; ++l)
      for (int n = 0; n <= 6; ++n) {
        // Between 3^{-(n+1)} and 3^{-n}.
        const double eps = 0.5 * (std::pow(3.0, -n) + std::pow(3.0, -(n + 1)));
        std::vector<int> coords;
        for (int j = d - l; j < d; ++j) coords.push_back(j);
        const auto q = SubspaceQuery::coordinate(d, coords, Vec::Zero(l), eps);
        long k = 0;
        for (const auto& p : pts) k += q.contains(p) ? 1 : 0;
        const auto [lo, hi] = axis_subspace_measure(d, l, n);
        const double mu = double(k) / N, sd = std::sqrt(hi * (1 - lo) / N);
        CHECK(mu >= lo - 3 * sd);
        CHECK(mu <= hi + 3 * sd);
      }
  }
}

TEST_CASE("subspace queries") {
  Vec n(2);
  n << 3.0, 4.0;
  const auto q = SubspaceQuery::hyperplane(n, 5.0, 0.1);
  CHECK(q.normal_rows.row(0).norm() == doctest::Approx(1.0));
  Vec x(2);
  x << 1.0, 0.5;  // 3 + 2 - 5 = 0
  CHECK(q.distance(x) == doctest::Approx(0.0));
  x << 1.0, 1.0;  // sup distance |7 - 5|/7
  CHECK(q.distance(x) == doctest::Approx(2.0 / 7));
  SubspaceQuery bad{Mat::Ones(1, 2), Vec::Zero(1), 0.1};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  SubspaceQuery tilted{Mat::Identity(2, 3), Vec::Zero(2), 0.1};
  tilted.normal_rows.row(0) << std::sqrt(0.5), std::sqrt(0.5), 0;
  CHECK_THROWS_AS(tilted.validate(), InvalidArgument);
  CHECK_THROWS_AS(SubspaceQuery::hyperplane(n, 0, 0.0), InvalidArgument);
}

TEST_CASE("varpi_of and cantor alphas") {
  const auto a2 = cantor_alphas(2);
  CHECK(varpi_of(a2, 2) == doctest::Approx(1.2618595071429148).epsilon(1e-15));
  CHECK(varpi_of(cantor_alphas(1), 1) == doctest::Approx(0.6309297535714574).epsilon(1e-15));
  for (int d = 1; d <= 4; ++d) CHECK(varpi_of(cantor_alphas(d), d) == d * kS);
  CHECK(varpi_of({1.0, 1.0, 1.0}, 3) == 1.0);
  CHECK_THROWS_AS(varpi_of({1.0, 1.0}, 3), InvalidArgument);
}

TEST_CASE("is_cantor_product") {
  CHECK(is_cantor_product(cantor_product(1)));
  CHECK(is_cantor_product(cantor_product(3)));
  const auto c = cantor_product(1);
  CHECK_FALSE(is_cantor_product(IfsSystem(c.maps(), {0.3, 0.7})));
}

TEST_CASE("alpha estimate on the Cantor set") {
  const auto est = alpha_estimate(cantor_product(1), 1, 2, 7, 40, 3, 200000, 2);
  REQUIRE(est.rows.size() == 6);
  CHECK(est.slope == doctest::Approx(kS).epsilon(0.08));
  for (const auto& r : est.rows) {
    CHECK(r.mass <= r.certified_upper);
    CHECK(r.ratio_lo <= r.ratio);
    CHECK(r.ratio <= r.ratio_hi);
  }
  // Worker invariance.
  const auto one = alpha_estimate(cantor_product(1), 1, 2, 7, 40, 3, 200000, 1);
  for (std::size_t k = 0; k < one.rows.size(); ++k) CHECK(one.rows[k].hits == est.rows[k].hits);
}

TEST_CASE("alpha estimate: no hyperplane beats the certified bound") {
  const auto est = alpha_estimate(cantor_product(2), 1, 2, 6, 80, 11, 200000, 2);
  for (const auto& r : est.rows) {
    CHECK(r.mass_lo <= r.certified_upper);
    CHECK(r.random_mass <= r.certified_upper);
    CHECK(r.axis_mass >= std::ldexp(1.0, -r.n) * 0.9);
  }
  const auto codim2 = alpha_estimate(cantor_product(2), 2, 1, 4, 20, 11, 100000, 1);
  CHECK(codim2.slope == doctest::Approx(2 * kS).epsilon(0.1));
  CHECK_THROWS_AS(alpha_estimate(cantor_product(2), 3, 1, 4, 20, 11, 100, 1), InvalidArgument);
}
