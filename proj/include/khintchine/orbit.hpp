#pragma once

#include <cstdint>
#include <vector>

#include "khintchine/bigfloat.hpp"
#include "khintchine/ifs.hpp"
#include "khintchine/linalg.hpp"

namespace khl {

// Working precision for walks: round-off then only moves the start point
// of the walk by ~2^-120, and the symbol sequence is unaffected.
inline constexpr mpfr_prec_t kShadowBits = 128;

// Precision keeping a_t u_x exact to double resolution for t <= t_max.
mpfr_prec_t diagonal_bits(double t_max, int d);
// Precision keeping an n-step walk from a fixed start exact.
mpfr_prec_t walk_bits(int steps, double kappa);
// Word length whose coding point is accurate to 2^-bits.
int coding_depth_for_bits(mpfr_prec_t bits, double kappa);

// A lattice basis (rows) held in multiprecision and kept LLL-reduced.
// Reduction runs LLL on a double copy and applies the unimodular
// transform exactly, so the multiprecision basis is never rounded into a
// different lattice.
class LatticeState {
 public:
  explicit LatticeState(BigMatrix basis, bool track_transform = false);

  int dim() const { return basis_.rows(); }
  mpfr_prec_t precision() const { return basis_(0, 0).precision(); }
  void right_multiply(const BigMatrix& m);
  void scale_columns(const std::vector<BigFloat>& factors);
  void reduce();

  // Double copy of the current reduced basis.
  const Mat& approx() const { return approx_; }
  const BigMatrix& exact() const { return basis_; }
  // current basis = transform * initial basis, when tracked and in range.
  const IntMatrix& transform() const { return transform_; }
  bool transform_valid() const { return track_ && valid_; }

 private:
  void refresh();

  BigMatrix basis_;
  Mat approx_;
  IntMatrix transform_;
  bool track_;
  bool valid_ = true;
};

// Initial basis u_{-x} (first row (1, x), identity below): the lattice of u_x Gamma.
BigMatrix unipotent_basis(const std::vector<BigFloat>& x);
std::vector<BigFloat> to_big(const Vec& x, mpfr_prec_t bits);
std::vector<BigFloat> golden_point(mpfr_prec_t bits);

// Lattices of a_t u_x Gamma at t = 0, step, 2 step, ...
class DiagonalOrbit {
 public:
  DiagonalOrbit(const std::vector<BigFloat>& x, const BigFloat& step, bool track_transform = false);

  int dimension() const { return d_; }
  double time() const { return double(count_) * step_d_ + extra_; }
  long count() const { return count_; }
  void advance();
  // Advance the orbit to an arbitrary time t >= time() in small pieces.
  void advance_to(double t);

  const Mat& basis() const { return state_.approx(); }
  const LatticeState& state() const { return state_; }
  double height() const;
  // Height at time() + s, from the double basis (0 <= s <= a few steps).
  double height_at_offset(double s) const;

 private:
  void apply(const BigFloat& t);

  int d_;
  BigFloat step_;
  double step_d_;
  std::vector<BigFloat> factors_;
  long count_ = 0;
  double extra_ = 0.0;
  LatticeState state_;
};

// Multiprecision step time -d log(kappa)/(d+1).
BigFloat step_time_mp(double kappa, int d, mpfr_prec_t bits);

// Walk lattices h_{b_1^n} g Gamma with basis B_n = B_{n-1} h_{s_n}^{-1}.
class WalkOrbit {
 public:
  WalkOrbit(const IfsSystem& sys, BigMatrix start_basis);

  void step(int symbol);
  const Mat& basis() const { return state_.approx(); }
  double height() const;

 private:
  std::vector<BigMatrix> inverses_;
  LatticeState state_;
};

// Heights l(h_{b_1^k} u_z Gamma) for k = 1..steps along a random walk from u_z.
std::vector<double> walk_heights(const IfsSystem& sys, const Vec& z, int steps, std::uint64_t seed,
                                 mpfr_prec_t bits = kShadowBits);

}  // namespace khl
