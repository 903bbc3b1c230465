#pragma once

#include <mpfr.h>

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace khl {

// Owning wrapper around mpfr_t with an explicit per-object precision.
// Binary operators produce a result at the larger operand precision and
// round to nearest. Compound operators keep the left operand's precision.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t bits = 128) {
    mpfr_init2(v_, bits);
    mpfr_set_zero(v_, 1);
  }
  BigFloat(double x, mpfr_prec_t bits) {
    mpfr_init2(v_, bits);
    mpfr_set_d(v_, x, MPFR_RNDN);
  }
  static BigFloat ratio(long num, long den, mpfr_prec_t bits) {
    BigFloat r(bits);
    mpfr_set_si(r.v_, num, MPFR_RNDN);
    mpfr_div_si(r.v_, r.v_, den, MPFR_RNDN);
    return r;
  }
  static BigFloat parse(const std::string& text, mpfr_prec_t bits);

  BigFloat(const BigFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigFloat(BigFloat&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  BigFloat& operator=(const BigFloat& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  BigFloat& operator=(BigFloat&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigFloat() { mpfr_clear(v_); }

  // Assign a value keeping this object's precision.
  void set(const BigFloat& o) { mpfr_set(v_, o.v_, MPFR_RNDN); }
  void set(double x) { mpfr_set_d(v_, x, MPFR_RNDN); }

  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(v_, MPFR_RNDN); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  // Base-2 exponent e with |x| in [2^(e-1), 2^e); meaningless for zero.
  long exponent() const { return mpfr_get_exp(v_); }

  BigFloat& operator+=(const BigFloat& o) {
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator-=(const BigFloat& o) {
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator*=(const BigFloat& o) {
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator/=(const BigFloat& o) {
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator*=(double x) {
    mpfr_mul_d(v_, v_, x, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator+=(double x) {
    mpfr_add_d(v_, v_, x, MPFR_RNDN);
    return *this;
  }
  BigFloat& operator-=(double x) {
    mpfr_sub_d(v_, v_, x, MPFR_RNDN);
    return *this;
  }

  // this += a * b, rounded once per operation into `scratch`.
  void add_product(const BigFloat& a, const BigFloat& b, BigFloat& scratch) {
    mpfr_mul(scratch.v_, a.v_, b.v_, MPFR_RNDN);
    mpfr_add(v_, v_, scratch.v_, MPFR_RNDN);
  }
  // this += a * k for an integer k.
  void add_multiple(const BigFloat& a, long k, BigFloat& scratch) {
    mpfr_mul_si(scratch.v_, a.v_, k, MPFR_RNDN);
    mpfr_add(v_, v_, scratch.v_, MPFR_RNDN);
  }

  friend BigFloat operator+(const BigFloat& a, const BigFloat& b) {
    BigFloat r(std::max(a.precision(), b.precision()));
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator-(const BigFloat& a, const BigFloat& b) {
    BigFloat r(std::max(a.precision(), b.precision()));
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator*(const BigFloat& a, const BigFloat& b) {
    BigFloat r(std::max(a.precision(), b.precision()));
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator/(const BigFloat& a, const BigFloat& b) {
    BigFloat r(std::max(a.precision(), b.precision()));
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator*(const BigFloat& a, double x) {
    BigFloat r(a);
    r *= x;
    return r;
  }
  friend BigFloat operator-(const BigFloat& a) {
    BigFloat r(a);
    mpfr_neg(r.v_, r.v_, MPFR_RNDN);
    return r;
  }
  friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_less_p(a.v_, b.v_); }
  friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_equal_p(a.v_, b.v_); }

  friend BigFloat exp(const BigFloat& a) {
    BigFloat r(a.precision());
    mpfr_exp(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat log(const BigFloat& a) {
    BigFloat r(a.precision());
    mpfr_log(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat sqrt(const BigFloat& a) {
    BigFloat r(a.precision());
    mpfr_sqrt(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat abs(const BigFloat& a) {
    BigFloat r(a);
    mpfr_abs(r.v_, r.v_, MPFR_RNDN);
    return r;
  }
  // a^e for a > 0.
  friend BigFloat pow(const BigFloat& a, const BigFloat& e) {
    BigFloat r(std::max(a.precision(), e.precision()));
    mpfr_pow(r.v_, a.v_, e.v_, MPFR_RNDN);
    return r;
  }
  // Nearest integer, ties to even. Throws if it does not fit in a long.
  friend long round_even(const BigFloat& a);
  // Floor of a, as a long; throws if out of range.
  friend long floor_long(const BigFloat& a);

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

 private:
  mpfr_t v_;
};

// Dense row-major matrix of BigFloat. Only small sizes are used.
class BigMatrix {
 public:
  BigMatrix() = default;
  BigMatrix(int rows, int cols, mpfr_prec_t bits)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols), BigFloat(bits)) {}

  static BigMatrix identity(int n, mpfr_prec_t bits);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  BigFloat& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
  const BigFloat& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

  friend BigMatrix operator*(const BigMatrix& a, const BigMatrix& b);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<BigFloat> a_;
};

}  // namespace khl
