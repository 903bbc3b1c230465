#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "khintchine/bigfloat.hpp"
#include "khintchine/dani.hpp"
#include "khintchine/ifs.hpp"

namespace khl {

struct RationalCoord {
  long long num;
  long long den;  // > 0
};

// A point of R^d whose coordinates are exact rationals, doubles, or
// multiprecision reals.
class ApproxPoint {
 public:
  using Coord = std::variant<RationalCoord, double, BigFloat>;

  explicit ApproxPoint(std::vector<Coord> coords);
  static ApproxPoint rational(long long num, long long den);
  static ApproxPoint real(const Vec& x);
  static ApproxPoint golden(mpfr_prec_t bits = 256);
  // Comma separated coordinates, each "p/q", a decimal, or "golden".
  static ApproxPoint parse(const std::string& text);

  int dimension() const { return int(coords_.size()); }
  const std::vector<Coord>& coords() const { return coords_; }
  // Coordinates at `bits` of precision (exact inputs are rounded once).
  std::vector<BigFloat> to_big(mpfr_prec_t bits) const;
  Vec to_vec() const;
  std::string describe() const;

 private:
  std::vector<Coord> coords_;
};

struct HitRecord {
  long long q;
  std::vector<long long> p;
  double error;         // |x - p/q|_inf
  double margin;        // psi(q)/q - error
  double witness_time;  // d/(d+1) (log q - log |qx - p|_inf); infinite for exact hits
};

// Nearest integer vector to q x (ties to even) and |q x - p|_inf.
struct NearestResult {
  std::vector<long long> p;
  double distance;
};
NearestResult nearest_p(const ApproxPoint& x, long long q);

// Every q in [1, q_max] with |x - p/q|_inf < psi(q)/q, p nearest.
std::vector<HitRecord> scan_hits(const ApproxPoint& x, const ApproxFunction& psi, long long q_max);

struct CrossCheckReport {
  long hits = 0;
  long checked = 0;        // hits with a finite witness time inside the domain of r
  long degenerate = 0;     // exact hits (qx = p)
  long out_of_domain = 0;  // witness time before t0
  long violations = 0;     // l(t*) < r(t*) - tol
  double worst_gap = 0;    // max of r(t*) - l(t*)
  // Converse: grid times with l >= r + tol must expose a hit through the shortest vector.
  long converse_times = 0;
  long converse_crossings = 0;
  long converse_violations = 0;
  std::vector<double> crossing_times;
};

// Checks the hit/height correspondence for x against r = r_from_psi(psi).
// The converse check samples t on [t_lo, t_hi] with spacing `dt`; t_hi <= 0 picks log(q_max).
CrossCheckReport dani_cross_check(const ApproxPoint& x, const ApproxFunction& psi, int d, long long q_max, double tol,
                                  double t_lo = 0.0, double t_hi = 0.0, double dt = 0.01);

struct SurveyBand {
  int k;
  long long q_lo, q_hi;  // [2^k, min(2^{k+1} - 1, q_max)]
  long points_with_hits = 0;
  long uncertain = 0;  // no certain hit, and some q decided within the coding error
  double fraction = 0;  // points_with_hits / (points - uncertain)
};

struct SurveyTable {
  long points = 0;
  std::vector<SurveyBand> bands;
  SeriesClassification series;  // verdict of the Khintchine series at the survey's alpha
};

// Point i is the coding point of the first `depth` symbols of the stream
// seeded with task_seed(seed, i), so increasing depth refines every point.
SurveyTable survey(const IfsSystem& sys, const ApproxFunction& psi, long sample_count, long long q_max, int depth,
                   std::uint64_t seed, double alpha, int workers = 1);

}  // namespace khl
