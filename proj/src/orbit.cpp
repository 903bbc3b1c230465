#include "khintchine/orbit.hpp"

#include <cmath>

#include "khintchine/errors.hpp"
#include "khintchine/homogeneous.hpp"
#include "khintchine/lattice.hpp"

namespace khl {

mpfr_prec_t diagonal_bits(double t_max, int d) {
  const double grow = std::max(t_max, 0.0) * (1.0 + 1.0 / d) / std::log(2.0);
  return static_cast<mpfr_prec_t>(96 + std::ceil(grow));
}

mpfr_prec_t walk_bits(int steps, double kappa) {
  return static_cast<mpfr_prec_t>(96 + std::ceil(std::max(steps, 0) * std::log2(1.0 / kappa)));
}

int coding_depth_for_bits(mpfr_prec_t bits, double kappa) {
  return static_cast<int>(std::ceil(double(bits) * std::log(2.0) / -std::log(kappa))) + 8;
}

LatticeState::LatticeState(BigMatrix basis, bool track_transform)
    : basis_(std::move(basis)), track_(track_transform) {
  if (basis_.rows() != basis_.cols() || basis_.rows() < 1) throw DimensionError("lattice basis must be square");
  transform_ = IntMatrix::Identity(basis_.rows(), basis_.rows());
  reduce();
}

void LatticeState::refresh() {
  const int n = dim();
  approx_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) approx_(i, j) = basis_(i, j).to_double();
  if (!approx_.allFinite()) throw SingularBasis("lattice basis left the double range");
}

void LatticeState::right_multiply(const BigMatrix& m) { basis_ = basis_ * m; }

void LatticeState::scale_columns(const std::vector<BigFloat>& factors) {
  for (int i = 0; i < dim(); ++i)
    for (int j = 0; j < dim(); ++j) basis_(i, j) *= factors[std::size_t(j)];
}

void LatticeState::reduce() {
  const int n = dim();
  BigFloat scratch(precision());
  for (int round = 0; round < 16; ++round) {
    refresh();
    const LllResult red = lll_reduce(approx_);
    if (red.transform == IntMatrix::Identity(n, n)) return;
    BigMatrix next(n, n, precision());
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const std::int64_t c = red.transform(i, k);
        if (c == 0) continue;
        for (int j = 0; j < n; ++j) next(i, j).add_multiple(basis_(k, j), static_cast<long>(c), scratch);
      }
    basis_ = std::move(next);
    if (track_ && valid_) {
      try {
        transform_ = int_product(red.transform, transform_);
      } catch (const Error&) {
        valid_ = false;
      }
    }
  }
  refresh();
}

BigMatrix unipotent_basis(const std::vector<BigFloat>& x) {
  const int d = static_cast<int>(x.size());
  BigMatrix b = BigMatrix::identity(d + 1, x.front().precision());
  for (int j = 0; j < d; ++j) b(0, j + 1) = x[std::size_t(j)];
  return b;
}

std::vector<BigFloat> to_big(const Vec& x, mpfr_prec_t bits) {
  std::vector<BigFloat> out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out.emplace_back(x(i), bits);
  return out;
}

std::vector<BigFloat> golden_point(mpfr_prec_t bits) {
  // (sqrt 5 - 1) / 2
  BigFloat g = sqrt(BigFloat(5.0, bits));
  g -= 1.0;
  g *= 0.5;
  return {g};
}

BigFloat step_time_mp(double kappa, int d, mpfr_prec_t bits) {
  BigFloat t = log(BigFloat(kappa, bits));
  t *= double(-d);
  return t / BigFloat(double(d + 1), bits);
}

DiagonalOrbit::DiagonalOrbit(const std::vector<BigFloat>& x, const BigFloat& step, bool track_transform)
    : d_(static_cast<int>(x.size())),
      step_(step),
      step_d_(step.to_double()),
      state_(unipotent_basis(x), track_transform) {
  if (x.empty()) throw DimensionError("diagonal orbit needs d >= 1");
  if (d_ + 1 > kMaxLatticeDim) throw DimensionError("lattice dimension above the certified range");
  const mpfr_prec_t bits = state_.precision();
  factors_.push_back(exp(-step_));
  const BigFloat e = exp(step_ / BigFloat(double(d_), bits));
  for (int j = 0; j < d_; ++j) factors_.push_back(e);
}

void DiagonalOrbit::apply(const BigFloat& t) {
  const mpfr_prec_t bits = state_.precision();
  std::vector<BigFloat> f{exp(-t)};
  const BigFloat e = exp(t / BigFloat(double(d_), bits));
  for (int j = 0; j < d_; ++j) f.push_back(e);
  state_.scale_columns(f);
  state_.reduce();
}

void DiagonalOrbit::advance() {
  state_.scale_columns(factors_);
  state_.reduce();
  ++count_;
}

void DiagonalOrbit::advance_to(double t) {
  const double remaining = t - time();
  if (remaining < -1e-12) throw InvalidArgument("diagonal orbit cannot move backwards");
  if (remaining <= 0.0) return;
  const int pieces = static_cast<int>(std::ceil(remaining / 0.5));
  const double piece = remaining / pieces;
  const mpfr_prec_t bits = state_.precision();
  for (int i = 0; i < pieces; ++i) {
    // The last piece absorbs the rounding of the division.
    const double p = (i + 1 == pieces) ? remaining - piece * (pieces - 1) : piece;
    apply(BigFloat(p, bits));
  }
  extra_ += remaining;
}

double DiagonalOrbit::height() const { return height_of_basis(state_.approx()); }

double DiagonalOrbit::height_at_offset(double s) const {
  Mat b = state_.approx();
  b.col(0) *= std::exp(-s);
  b.rightCols(d_) *= std::exp(s / d_);
  return height_of_basis(b);
}

WalkOrbit::WalkOrbit(const IfsSystem& sys, BigMatrix start_basis) : state_(std::move(start_basis)) {
  if (state_.dim() != sys.dimension() + 1) throw DimensionError("walk start lattice has the wrong size");
  for (const auto& m : sys.maps()) inverses_.push_back(step_inverse_mp(m, state_.precision()));
}

void WalkOrbit::step(int symbol) {
  state_.right_multiply(inverses_.at(std::size_t(symbol)));
  state_.reduce();
}

double WalkOrbit::height() const { return height_of_basis(state_.approx()); }

std::vector<double> walk_heights(const IfsSystem& sys, const Vec& z, int steps, std::uint64_t seed,
                                 mpfr_prec_t bits) {
  WalkOrbit walk(sys, unipotent_basis(to_big(z, bits)));
  SymbolStream stream(sys, seed);
  std::vector<double> out;
  out.reserve(std::size_t(std::max(steps, 0)));
  for (int k = 0; k < steps; ++k) {
    walk.step(stream.next());
    out.push_back(walk.height());
  }
  return out;
}

}  // namespace khl
