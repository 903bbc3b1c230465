#include "khintchine/approx.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "khintchine/errors.hpp"
#include "khintchine/lattice.hpp"
#include "khintchine/orbit.hpp"
#include "khintchine/parallel.hpp"
#include "khintchine/random.hpp"

namespace khl {

namespace {

using i128 = __int128;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

double to_double(i128 v) { return static_cast<double>(v); }

// Nearest integer to q x for a double x, ties to even, and |q x - p|.
std::pair<long long, double> nearest_real(double x, long long q) {
  const double qd = double(q);
  double p = std::nearbyint(qd * x);
  double e = std::fma(qd, x, -p);  // q x - p rounded once
  if (e > 0.5) {
    p += 1;
    e = std::fma(qd, x, -p);
  } else if (e < -0.5) {
    p -= 1;
    e = std::fma(qd, x, -p);
  }
  if (std::fabs(e) == 0.5 && std::fmod(p, 2.0) != 0.0) {
    p += e > 0 ? 1 : -1;
    e = std::fma(qd, x, -p);
  }
  if (!(std::fabs(p) < 9e18)) throw InvalidArgument("q x is out of the integer range");
  return {static_cast<long long>(p), std::fabs(e)};
}

std::pair<long long, double> nearest_rational(const RationalCoord& c, long long q) {
  const i128 qn = i128(q) * c.num;
  i128 fl = qn / c.den;
  i128 rem = qn - fl * c.den;
  if (rem < 0) {
    fl -= 1;
    rem += c.den;
  }
  i128 p = fl;
  if (2 * rem > c.den || (2 * rem == c.den && (fl % 2 != 0))) p = fl + 1;
  const i128 e = abs128(qn - p * c.den);
  return {static_cast<long long>(p), to_double(e) / double(c.den)};
}

std::pair<long long, double> nearest_big(const BigFloat& x, long long q) {
  BigFloat y = x * double(q);
  const long p = round_even(y);
  y -= double(p);
  return {p, std::fabs(y.to_double())};
}

long long gcd_ll(long long a, long long b) { return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b); }

ApproxPoint::Coord parse_coord(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) throw InvalidArgument("empty coordinate");
  if (s == "golden") return golden_point(256)[0];
  auto parse_ll = [](const std::string& t) {
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw InvalidArgument("bad integer: " + t);
    return v;
  };
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    long long num = parse_ll(s.substr(0, slash)), den = parse_ll(s.substr(slash + 1));
    if (den == 0) throw InvalidArgument("zero denominator: " + s);
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = gcd_ll(num, den);
    return RationalCoord{num / g, den / g};
  }
  // Short plain decimals are taken exactly.
  const bool neg = s[0] == '-';
  const std::string body = neg ? s.substr(1) : s;
  const auto dot = body.find('.');
  const std::string ip = body.substr(0, dot), fp = dot == std::string::npos ? "" : body.substr(dot + 1);
  const bool plain = !ip.empty() && ip.size() + fp.size() <= 18 &&
                     std::all_of(ip.begin(), ip.end(), ::isdigit) && std::all_of(fp.begin(), fp.end(), ::isdigit);
  if (plain) {
    long long num = parse_ll(ip + fp), den = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
    if (neg) num = -num;
    const long long g = gcd_ll(num, den);
    return RationalCoord{num / g, den / g};
  }
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw InvalidArgument("bad coordinate: " + raw);
  return v;
}

}  // namespace

ApproxPoint::ApproxPoint(std::vector<Coord> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw DimensionError("point needs at least one coordinate");
  for (const auto& c : coords_)
    if (const auto* r = std::get_if<RationalCoord>(&c); r && r->den <= 0)
      throw InvalidArgument("rational coordinate needs a positive denominator");
}

ApproxPoint ApproxPoint::rational(long long num, long long den) {
  if (den == 0) throw InvalidArgument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = gcd_ll(num, den);
  return ApproxPoint({RationalCoord{num / g, den / g}});
}

ApproxPoint ApproxPoint::real(const Vec& x) {
  std::vector<Coord> c;
  for (Eigen::Index i = 0; i < x.size(); ++i) c.emplace_back(double(x(i)));
  return ApproxPoint(std::move(c));
}

ApproxPoint ApproxPoint::golden(mpfr_prec_t bits) { return ApproxPoint({golden_point(bits)[0]}); }

ApproxPoint ApproxPoint::parse(const std::string& text) {
  std::vector<Coord> c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) c.push_back(parse_coord(item));
  return ApproxPoint(std::move(c));
}

std::vector<BigFloat> ApproxPoint::to_big(mpfr_prec_t bits) const {
  std::vector<BigFloat> out;
  for (const auto& c : coords_) {
    if (const auto* r = std::get_if<RationalCoord>(&c))
      out.push_back(BigFloat::ratio(long(r->num), long(r->den), bits));
    else if (const auto* d = std::get_if<double>(&c))
      out.emplace_back(*d, bits);
    else {
      BigFloat v(bits);
      v.set(std::get<BigFloat>(c));
      out.push_back(std::move(v));
    }
  }
  return out;
}

Vec ApproxPoint::to_vec() const {
  Vec v(dimension());
  for (int i = 0; i < dimension(); ++i) {
    const auto& c = coords_[std::size_t(i)];
    if (const auto* r = std::get_if<RationalCoord>(&c))
      v(i) = double(r->num) / double(r->den);
    else if (const auto* d = std::get_if<double>(&c))
      v(i) = *d;
    else
      v(i) = std::get<BigFloat>(c).to_double();
  }
  return v;
}

std::string ApproxPoint::describe() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i) os << ",";
    if (const auto* r = std::get_if<RationalCoord>(&coords_[i]))
      os << r->num << "/" << r->den;
    else if (const auto* d = std::get_if<double>(&coords_[i]))
      os << *d;
    else
      os << std::get<BigFloat>(coords_[i]).to_double();
  }
  return os.str();
}

NearestResult nearest_p(const ApproxPoint& x, long long q) {
  if (q < 1) throw InvalidArgument("q must be positive");
  NearestResult res{{}, 0.0};
  for (const auto& c : x.coords()) {
    std::pair<long long, double> r;
    if (const auto* rc = std::get_if<RationalCoord>(&c))
      r = nearest_rational(*rc, q);
    else if (const auto* d = std::get_if<double>(&c))
      r = nearest_real(*d, q);
    else
      r = nearest_big(std::get<BigFloat>(c), q);
    res.p.push_back(r.first);
    res.distance = std::max(res.distance, r.second);
  }
  return res;
}

std::vector<HitRecord> scan_hits(const ApproxPoint& x, const ApproxFunction& psi, long long q_max) {
  if (q_max < 1) throw InvalidArgument("q_max must be at least 1");
  if (psi.x0() > 1.0) throw InvalidArgument("psi must be defined on [1, q_max]");
  const int d = x.dimension();
  std::vector<HitRecord> hits;
  for (long long q = 1; q <= q_max; ++q) {
    const double pq = psi(double(q));
    auto nr = nearest_p(x, q);
    if (!(nr.distance < pq)) continue;
    HitRecord h;
    h.q = q;
    h.p = std::move(nr.p);
    h.error = nr.distance / double(q);
    h.margin = (pq - nr.distance) / double(q);
    h.witness_time = nr.distance > 0 ? d * (std::log(double(q)) - std::log(nr.distance)) / (d + 1)
                                     : std::numeric_limits<double>::infinity();
    hits.push_back(std::move(h));
  }
  return hits;
}

CrossCheckReport dani_cross_check(const ApproxPoint& x, const ApproxFunction& psi, int d, long long q_max, double tol,
                                  double t_lo, double t_hi, double dt) {
  if (d != x.dimension()) throw DimensionError("point dimension does not match d");
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  CrossCheckReport rep;
  const auto hits = scan_hits(x, psi, q_max);
  rep.hits = long(hits.size());
  const RateFunction rate = RateFunction::from_psi(psi, d);
  const double t0 = rate.t_start();

  std::vector<double> times;
  for (const auto& h : hits) {
    if (!std::isfinite(h.witness_time))
      ++rep.degenerate;
    else if (h.witness_time < t0)
      ++rep.out_of_domain;
    else
      times.push_back(h.witness_time);
  }
  std::sort(times.begin(), times.end());
  if (t_hi <= 0) t_hi = std::log(double(q_max));
  t_lo = std::max(t_lo, t0);
  const double t_max = std::max(times.empty() ? 0.0 : times.back(), t_hi) + 1;
  const mpfr_prec_t bits = diagonal_bits(t_max, d) + 64;
  const auto xb = x.to_big(bits);

  {
    DiagonalOrbit orbit(xb, BigFloat(0.5, bits));
    for (double t : times) {
      orbit.advance_to(t);
      const double l = orbit.height(), r = rate(t);
      ++rep.checked;
      rep.worst_gap = std::max(rep.worst_gap, r - l);
      if (l < r - tol) ++rep.violations;
    }
  }

  DiagonalOrbit orbit(xb, BigFloat(0.5, bits), true);
  for (double t = t_lo; t <= t_hi + 1e-12; t += dt) {
    orbit.advance_to(t);
    ++rep.converse_times;
    const double r = rate(t);
    if (orbit.height() < r + tol) continue;
    ++rep.converse_crossings;
    if (rep.crossing_times.size() < 1000) rep.crossing_times.push_back(t);
    if (!orbit.state().transform_valid()) {
      ++rep.converse_violations;
      continue;
    }
    const auto sv = shortest_vector_of_basis(orbit.basis());
    const IntMatrix w = int_product(IntMatrix(sv.witness), orbit.state().transform());
    const long long q = std::llabs(w(0, 0));
    // q <= e^{t - r(t)} and |qx - p| <= psi(e^{t - r(t)}) <= psi(q).
    if (q == 0 || double(q) > std::exp(t - r) * (1 + 1e-9) || nearest_p(x, q).distance > psi(double(q)) * (1 + 1e-9))
      ++rep.converse_violations;
  }
  return rep;
}

SurveyTable survey(const IfsSystem& sys, const ApproxFunction& psi, long sample_count, long long q_max, int depth,
                   std::uint64_t seed, double alpha, int workers) {
  if (sample_count < 0) throw InvalidArgument("sample_count must be nonnegative");
  if (q_max < 1) throw InvalidArgument("q_max must be at least 1");
  if (depth < 1) throw InvalidArgument("depth must be at least 1");
  if (psi.x0() > 1.0) throw InvalidArgument("psi must be defined on [1, q_max]");
  SurveyTable table;
  table.series = classify_khintchine_series(psi, sys.dimension(), alpha);
  table.points = sample_count;
  if (sample_count == 0) return table;

  for (int k = 0; (1LL << k) <= q_max; ++k) {
    SurveyBand b;
    b.k = k;
    b.q_lo = 1LL << k;
    b.q_hi = std::min((1LL << (k + 1)) - 1, q_max);
    table.bands.push_back(b);
  }
  std::vector<double> psi_q(std::size_t(q_max) + 1);
  for (long long q = 1; q <= q_max; ++q) psi_q[std::size_t(q)] = psi(double(q));

  enum : char { none = 0, hit = 1, unsure = 2 };
  const auto states = parallel_map(std::size_t(sample_count), workers, [&](std::size_t i) {
    const auto word = SymbolStream(sys, task_seed(seed, i)).take(depth);
    const CodingPoint cp = coding_point(sys, word);
    // Truncation plus a few ulps of double composition.
    const double delta =
        cp.error_bound + 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, cp.point.cwiseAbs().maxCoeff());
    std::vector<char> st(table.bands.size(), none);
    for (std::size_t bi = 0; bi < table.bands.size(); ++bi) {
      const auto& b = table.bands[bi];
      for (long long q = b.q_lo; q <= b.q_hi && st[bi] != hit; ++q) {
        double dist = 0;
        for (Eigen::Index j = 0; j < cp.point.size(); ++j) dist = std::max(dist, nearest_real(cp.point(j), q).second);
        const double gap = psi_q[std::size_t(q)] - dist;
        if (std::fabs(gap) <= double(q) * delta)
          st[bi] = unsure;
        else if (gap > 0)
          st[bi] = hit;
      }
    }
    return st;
  });
  for (const auto& st : states)
    for (std::size_t bi = 0; bi < st.size(); ++bi) {
      if (st[bi] == hit) ++table.bands[bi].points_with_hits;
      if (st[bi] == unsure) ++table.bands[bi].uncertain;
    }
  for (auto& b : table.bands) {
    const long decided = sample_count - b.uncertain;
    b.fraction = decided > 0 ? double(b.points_with_hits) / double(decided) : 0.0;
  }
  return table;
}

}  // namespace khl
