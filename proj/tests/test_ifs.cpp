#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "khintchine/errors.hpp"
#include "khintchine/ifs.hpp"
#include "oracles.hpp"

using namespace khl;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

SimilarityMap map1d(double k, double y) { return {k, Mat::Identity(1, 1), v1(y)}; }

Mat rot2(double a) {
  Mat o(2, 2);
  o << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
  return o;
}

}  // namespace

TEST_CASE("compose") {
  const auto phi = map1d(1.0 / 3, 2.0 / 3);
  const auto id = compose(SimilarityMap::identity(1), phi);
  CHECK(id.ratio() == doctest::Approx(phi.ratio()));
  CHECK(id.translation()(0) == doctest::Approx(phi.translation()(0)));

  // x/3 after (x+2)/3 is x/9 + 2/9.
  const auto c = compose(map1d(1.0 / 3, 0.0), map1d(1.0 / 3, 2.0 / 3));
  CHECK(c.ratio() == doctest::Approx(1.0 / 9));
  CHECK(c.translation()(0) == doctest::Approx(2.0 / 9));
  CHECK(c(v1(0.5))(0) == doctest::Approx(0.5 / 9 + 2.0 / 9));

  CHECK_THROWS_AS(compose(SimilarityMap::identity(1), SimilarityMap::identity(2)), DimensionError);
}

TEST_CASE("compose agrees with pointwise application in 2d") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    SimilarityMap a(rng.uniform(0.1, 0.9), rot2(rng.uniform(0, 6.3)), Vec::Random(2));
    SimilarityMap b(rng.uniform(0.1, 0.9), rot2(rng.uniform(0, 6.3)), Vec::Random(2));
    Vec x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    CHECK((compose(a, b)(x) - a(b(x))).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("similarity map validation") {
  CHECK_THROWS_AS(SimilarityMap(0.0, Mat::Identity(1, 1), v1(0)), InvalidArgument);
  Mat bad(2, 2);
  bad << 1, 0.1, 0, 1;
  CHECK_THROWS_AS(SimilarityMap(0.5, bad, Vec::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(SimilarityMap(0.5, Mat::Identity(2, 2), Vec::Zero(3)), DimensionError);
}

TEST_CASE("cantor_product") {
  const auto c1 = cantor_product(1);
  REQUIRE(c1.size() == 2);
  CHECK(c1.ratio() == doctest::Approx(1.0 / 3));
  CHECK(c1.map(0).translation()(0) == 0.0);
  CHECK(c1.map(1).translation()(0) == doctest::Approx(2.0 / 3));
  const auto c2 = cantor_product(2);
  CHECK(c2.size() == 4);
  for (double w : c2.weights()) CHECK(w == 0.25);
  CHECK(c1.diameter_estimate() >= 1.0);
  CHECK(c1.diameter_estimate() <= 1.0 + 1e-3);
  CHECK(c1.base_point()(0) == 0.0);
  CHECK(c1.default_depth() == 66);
  CHECK(c1.similarity_dimension() == doctest::Approx(std::log(2.0) / std::log(3.0)));
  CHECK_THROWS_AS(cantor_product(0), InvalidArgument);
}

TEST_CASE("ifs validation") {
  CHECK_THROWS_AS(IfsSystem({map1d(0.5, 0), map1d(1.0 / 3, 0.5)}, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(IfsSystem({map1d(0.5, 0), map1d(0.5, 0.5)}, {0.6, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(IfsSystem({map1d(0.5, 0), map1d(0.5, 0.5)}, {1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(IfsSystem({map1d(1.0, 0)}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(IfsSystem({}, {}), InvalidArgument);
}

TEST_CASE("coding_point examples") {
  const auto c = cantor_product(1);
  const SymbolWord zeros(25, 0);
  const auto p0 = coding_point(c, zeros, v1(0.0));
  CHECK(p0.point(0) == 0.0);
  CHECK(p0.error_bound == doctest::Approx(std::pow(3.0, -25) * c.diameter_estimate()));

  const auto p1 = coding_point(c, SymbolWord(20, 1), v1(0.0));
  CHECK(std::fabs(p1.point(0) - 1.0) <= std::pow(3.0, -20) + 1e-15);

  SymbolWord alt;
  for (int i = 0; i < 30; ++i) alt.push_back(i % 2 == 0 ? 1 : 0);
  CHECK(std::fabs(coding_point(c, alt).point(0) - 0.75) <= std::pow(3.0, -30) + 1e-16);
  CHECK_THROWS_AS(coding_point(c, SymbolWord{}), InvalidArgument);
  CHECK_THROWS_AS(coding_point(c, SymbolWord{2}), InvalidArgument);
}

TEST_CASE("coding_point concatenation property") {
  Rng rng(5);
  for (int d = 1; d <= 2; ++d) {
    const auto sys = cantor_product(d);
    for (int trial = 0; trial < 200; ++trial) {
      SymbolStream st(sys, rng.bits());
      const auto u = st.take(1 + int(rng.below(30)));
      const auto v = st.take(1 + int(rng.below(30)));
      SymbolWord uv = u;
      uv.insert(uv.end(), v.begin(), v.end());
      const Vec lhs = coding_point(sys, uv).point;
      const Vec rhs = coding_point(sys, u, coding_point(sys, v).point).point;
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("multiprecision coding point matches an exact integer oracle") {
  const auto c = cantor_product(1);
  SymbolStream st(c, 99);
  const auto w = st.take(40);
  // sum 2 s_k 3^{40-k} as an exact integer, then divide by 3^40.
  unsigned __int128 num = 0;
  for (int s : w) num = num * 3 + unsigned(2 * s);
  long double pow3 = 1;
  for (int k = 0; k < 40; ++k) pow3 *= 3;
  const auto mp = coding_point_mp(c, w, 256);
  const long double expect = static_cast<long double>(num) / pow3;
  // The maps use the double nearest 1/3, which moves the point by ~1e-17.
  CHECK(std::fabs(static_cast<double>(mp[0].to_long_double() - expect)) < 1e-15);
  CHECK(std::fabs(coding_point(c, w).point(0) - mp[0].to_double()) < 1e-15);
}

TEST_CASE("sample_fractal") {
  const auto c = cantor_product(1);
  const auto pts = sample_fractal(c, 40, 17, 3);
  REQUIRE(pts.size() == 3);
  for (const auto& p : pts) {
    CHECK(p(0) >= 0.0);
    CHECK(p(0) <= 1.0);
    CHECK(oracle::cantor_digits_ok(p(0), 28));
  }
  CHECK(sample_fractal(c, 40, 17, 3) == pts);
  CHECK(sample_fractal(c, 40, 18, 3) != pts);
  CHECK_THROWS_AS(sample_fractal(c, 0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_fractal(c, 10, 1, 0), InvalidArgument);
}

TEST_CASE("sample_fractal mean and cylinder frequencies") {
  const auto c = cantor_product(1);
  const int n = 100000;
  const auto words = sample_words(c, 20, 2024, n);
  double mean = 0.0;
  for (const auto& w : words) mean += coding_point(c, w).point(0);
  mean /= n;
  CHECK(std::fabs(mean - 0.5) < 0.01);

  // Chi-square over depth-k cylinders against the uniform weight products.
  for (int k = 1; k <= 4; ++k) {
    std::vector<double> counts(std::size_t(1) << k, 0.0);
    for (const auto& w : words) {
      std::size_t idx = 0;
      for (int i = 0; i < k; ++i) idx = idx * 2 + std::size_t(w[std::size_t(i)]);
      counts[idx] += 1;
    }
    const double expect = double(n) / double(counts.size());
    double chi2 = 0.0;
    for (double o : counts) chi2 += (o - expect) * (o - expect) / expect;
    // 99.9% quantiles for 1, 3, 7, 15 degrees of freedom.
    const double crit[] = {10.83, 16.27, 24.32, 37.70};
    CHECK(chi2 < crit[k - 1]);
  }
}

TEST_CASE("weighted sampling follows the weights") {
  IfsSystem sys({map1d(0.5, 0.0), map1d(0.5, 0.5)}, {0.2, 0.8});
  SymbolStream st(sys, 1);
  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += st.next();
  CHECK(std::fabs(ones / 100000.0 - 0.8) < 0.005);
}

TEST_CASE("samples stay near their cylinders") {
  const auto c = cantor_product(2);
  const auto words = sample_words(c, 30, 8, 200);
  for (const auto& w : words) {
    const Vec p = coding_point(c, w).point;
    for (int n = 1; n <= 10; ++n) {
      const SymbolWord prefix(w.begin(), w.begin() + n);
      // The depth-n cylinder is the image of the unit square under phi_prefix.
      const Vec corner = coding_point(c, prefix, Vec::Zero(2)).point;
      const double side = std::pow(3.0, -n);
      for (int i = 0; i < 2; ++i) {
        CHECK(p(i) >= corner(i) - 1e-12);
        CHECK(p(i) <= corner(i) + side + 1e-12);
      }
    }
  }
}

TEST_CASE("check_hypotheses") {
  const auto c2 = cantor_product(2);
  const auto r = check_hypotheses(c2, 4);
  CHECK(r.common_ratio == Verdict::pass);
  CHECK(r.open_set == Verdict::pass);
  CHECK(r.irreducible == Verdict::pass);

  const std::vector<SimilarityMap> mixed{map1d(0.5, 0.0), map1d(1.0 / 3, 0.5)};
  CHECK(check_hypotheses(mixed, 3).common_ratio == Verdict::fail);

  Mat o(2, 2);
  o << 1, 0, 0, -1;
  const std::vector<SimilarityMap> single{SimilarityMap(0.5, o, Vec::Zero(2))};
  CHECK(check_hypotheses(single, 5).irreducible == Verdict::inconclusive);

  // Overlapping but not exactly: the box candidate fails, no exact overlap.
  const std::vector<SimilarityMap> overlap{map1d(0.6, 0.0), map1d(0.6, 0.4)};
  CHECK(check_hypotheses(overlap, 4).open_set == Verdict::inconclusive);

  // Exact overlap: phi0 phi1 = phi1 phi0 for commuting translations at the same ratio.
  const std::vector<SimilarityMap> exact{map1d(0.5, 0.0), map1d(0.5, 0.25), map1d(0.5, 0.5)};
  CHECK(check_hypotheses(exact, 3).open_set == Verdict::fail);

  // Rotated square pieces, still disjoint: sierpinski-like with a rotation.
  std::vector<SimilarityMap> rot;
  rot.emplace_back(0.25, rot2(0.3), Vec::Zero(2));
  Vec y(2);
  y << 0.75, 0.0;
  rot.emplace_back(0.25, Mat::Identity(2, 2), y);
  y << 0.0, 0.75;
  rot.emplace_back(0.25, Mat::Identity(2, 2), y);
  const auto rr = check_hypotheses(rot, 3);
  CHECK(rr.common_ratio == Verdict::pass);
  CHECK(rr.irreducible == Verdict::pass);
}

TEST_CASE("ifs json round trip and strict schema") {
  const auto c = cantor_product(2);
  const auto j = ifs_to_json(c);
  const auto back = ifs_from_json(j);
  CHECK(back.size() == 4);
  CHECK(back.map(3).translation()(1) == doctest::Approx(2.0 / 3));

  auto bad = j;
  bad["colour"] = 1;
  CHECK_THROWS_AS(ifs_from_json(bad), ConfigError);
  bad = j;
  bad.erase("weights");
  CHECK_THROWS_AS(ifs_from_json(bad), ConfigError);
  bad = j;
  bad["maps"][0]["rotation"] = {1, 0, 0};
  CHECK_THROWS_AS(ifs_from_json(bad), ConfigError);
  bad = j;
  bad["ratio"] = 1.5;
  CHECK_THROWS_AS(ifs_from_json(bad), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "khl_ifs_test.json";
  std::ofstream(path) << j.dump();
  CHECK(resolve_system(path.string()).size() == 4);
  std::filesystem::remove(path);
  CHECK(resolve_system("cantor:3").size() == 8);
  CHECK_THROWS_AS(resolve_system("cantor:x"), ConfigError);
}
