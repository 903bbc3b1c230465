#include "khintchine/bigfloat.hpp"

#include <climits>

#include "khintchine/errors.hpp"

namespace khl {

BigFloat BigFloat::parse(const std::string& text, mpfr_prec_t bits) {
  BigFloat r(bits);
  if (mpfr_set_str(r.v_, text.c_str(), 10, MPFR_RNDN) != 0) {
    throw InvalidArgument("not a decimal number: " + text);
  }
  return r;
}

long round_even(const BigFloat& a) {
  if (!mpfr_fits_slong_p(a.v_, MPFR_RNDN)) throw Error("value out of integer range");
  return mpfr_get_si(a.v_, MPFR_RNDN);
}

long floor_long(const BigFloat& a) {
  if (!mpfr_fits_slong_p(a.v_, MPFR_RNDD)) throw Error("value out of integer range");
  return mpfr_get_si(a.v_, MPFR_RNDD);
}

BigMatrix BigMatrix::identity(int n, mpfr_prec_t bits) {
  BigMatrix m(n, n, bits);
  for (int i = 0; i < n; ++i) m(i, i).set(1.0);
  return m;
}

BigMatrix operator*(const BigMatrix& a, const BigMatrix& b) {
  if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
  const mpfr_prec_t bits = std::max(a.a_.empty() ? MPFR_PREC_MIN : a.a_[0].precision(),
                                    b.a_.empty() ? MPFR_PREC_MIN : b.a_[0].precision());
  BigMatrix r(a.rows_, b.cols_, bits);
  BigFloat scratch(bits);
  for (int i = 0; i < a.rows_; ++i) {
    for (int k = 0; k < a.cols_; ++k) {
      const BigFloat& aik = a(i, k);
      if (aik.is_zero()) continue;
      for (int j = 0; j < b.cols_; ++j) r(i, j).add_product(aik, b(k, j), scratch);
    }
  }
  return r;
}

}  // namespace khl
