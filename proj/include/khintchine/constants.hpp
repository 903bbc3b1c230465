#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "khintchine/ifs.hpp"

namespace khl {

// Affine subspace {x : N x = b} of codimension l with its open sup-norm
// epsilon-neighborhood. General normals are supported for hyperplanes;
// codimension l > 1 requires coordinate subspaces (rows +-e_j).
struct SubspaceQuery {
  Mat normal_rows;  // l x d, orthonormal rows
  Vec offset;       // length l
  double epsilon;

  static SubspaceQuery hyperplane(const Vec& normal, double offset, double epsilon);
  static SubspaceQuery coordinate(int d, const std::vector<int>& coords, const Vec& values, double epsilon);

  int dimension() const { return int(normal_rows.cols()); }
  int codimension() const { return int(normal_rows.rows()); }
  bool axis_aligned() const;
  // Throws InvalidArgument unless rows are orthonormal to 1e-12 and epsilon > 0.
  void validate() const;
  double distance(const Vec& x) const;  // sup-norm distance to the subspace
  bool contains(const Vec& x) const { return distance(x) < epsilon; }
};

// C_1 = 3, C_d = 2 C_{d-1}.
double cover_constant(int d);

// Level-n triadic cubes of the middle-thirds Cantor product.
struct CoverCertificate {
  int d = 0;
  int n = 0;
  long count = 0;
  double bound_constant = 0;  // C_d
  // count x d lower corners in units of 3^-n, sorted lexicographically.
  std::vector<std::uint64_t> corners;

  // Digits of cube i: n groups of d ternary digits, most significant first.
  std::vector<int> word(long i) const;
  // "02.22.20": one group per level.
  std::string word_string(long i) const;
  bool admissible(long i) const;  // every digit in {0, 2}
  double count_bound() const;     // C_d 2^{(d-1) n}
  // Whether x lies in a certificate cube, allowing `tol` at cube faces.
  bool covers(const Vec& x, double tol = 1e-12) const;
};

// Admissible level-n cubes meeting the open 3^-n sup-norm neighborhood of
// {x : coeffs . x = rhs}. Slice membership is decided in exact integer
// arithmetic on the binary expansions of the inputs.
CoverCertificate cover_hyperplane(const Vec& coeffs, double rhs, int n, long max_cubes = 1L << 24);

// count 2^{-d n}
double measure_upper_bound(const CoverCertificate& cert, int d);

// Bounds on mu(L^(eps)) for L = C^{d-l} x {0}^l and eps in (3^{-(n+1)}, 3^{-n}].
std::pair<double, double> axis_subspace_measure(int d, int l, int n);

// Whether sys is the middle-thirds Cantor product with uniform weights.
bool is_cantor_product(const IfsSystem& sys);

// l log 2/log 3 for l = 1..d.
std::vector<double> cantor_alphas(int d);

// min over l of alphas[l-1] (d - l + 1).
double varpi_of(const std::vector<double>& alphas, int d);

struct AlphaRow {
  int n;
  double epsilon;
  long hits;  // samples in the best neighborhood found
  long samples;
  double mass;                    // hits / samples
  double mass_lo, mass_hi;        // 95% Wilson interval
  double ratio;                   // log mass / log epsilon
  double ratio_lo, ratio_hi;      // from the mass interval
  // Best of each family before hill climbing; NaN where a family is not searched.
  double axis_mass, structured_mass, random_mass;
  double certified_upper;         // C_d 2^{-n} for Cantor products, NaN otherwise
  std::string best;               // description of the best subspace
  // Best hyperplane {w.x = b} with ||w||_1 = 1; empty w for coordinate subspaces.
  std::vector<double> best_w;
  double best_b = 0;
};

struct AlphaEstimate {
  int l;
  std::vector<AlphaRow> rows;
  // Least-squares slope of log mass against log epsilon over the rows.
  double slope;
  double slope_se;
  long evaluations;
};

// Monte Carlo estimate of the decay of sup_L mu(L^(eps)) over codimension-l
// subspaces, eps = 3^-n for n in [n_lo, n_hi]. The sup is searched over
// coordinate subspaces, hyperplanes through fixed points of short words,
// random hyperplanes through sample points, and a hill climb from the best
// candidate, within `search_budget` evaluations.
// Heuristic except for the certified upper column.
AlphaEstimate alpha_estimate(const IfsSystem& sys, int l, int n_lo, int n_hi, int search_budget, std::uint64_t seed,
                             long samples, int workers = 1);

}  // namespace khl
