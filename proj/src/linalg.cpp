#include "khintchine/linalg.hpp"

#include <cmath>

#include "khintchine/errors.hpp"

namespace khl {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error("integer transform overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error("integer transform overflow");
  return r;
}

}  // namespace

GramSchmidt gram_schmidt(const Eigen::MatrixXd& basis) {
  const Eigen::Index n = basis.rows();
  GramSchmidt gs{Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)};
  Eigen::MatrixXd star = basis;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double m = basis.row(i).dot(star.row(j)) / gs.norms2(j);
      gs.mu(i, j) = m;
      star.row(i) -= m * star.row(j);
    }
    gs.norms2(i) = star.row(i).squaredNorm();
  }
  return gs;
}

LllResult lll_reduce(const Eigen::MatrixXd& input, double delta) {
  const Eigen::Index n = input.rows();
  LllResult res{input, IntMatrix::Identity(n, n)};
  Eigen::MatrixXd& b = res.basis;
  IntMatrix& u = res.transform;
  if (n == 0) return res;

  const double scale = b.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) throw SingularBasis("degenerate lattice basis");

  GramSchmidt gs = gram_schmidt(b);
  auto check_rank = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(gs.norms2(i) > 1e-300) || !std::isfinite(gs.norms2(i))) {
        throw SingularBasis("numerically singular lattice basis");
      }
    }
  };
  check_rank();

  Eigen::Index k = 1;
  long guard = 0;
  while (k < n) {
    if (++guard > 1000000) throw Error("LLL did not terminate");
    // Size reduction; repeated because one rounded pass can leave |mu| > 1/2.
    for (int pass = 0; pass < 8; ++pass) {
      bool changed = false;
      for (Eigen::Index j = k - 1; j >= 0; --j) {
        const double r = std::nearbyint(gs.mu(k, j));
        if (r == 0.0) continue;
        if (std::fabs(r) > 0x1.0p62) throw Error("integer transform overflow");
        const auto ri = static_cast<std::int64_t>(r);
        b.row(k) -= r * b.row(j);
        for (Eigen::Index c = 0; c < n; ++c) u(k, c) = checked_add(u(k, c), -checked_mul(ri, u(j, c)));
        for (Eigen::Index i = 0; i < j; ++i) gs.mu(k, i) -= r * gs.mu(j, i);
        gs.mu(k, j) -= r;
        changed = true;
      }
      if (!changed) break;
      gs = gram_schmidt(b);
    }
    const double m = gs.mu(k, k - 1);
    if (gs.norms2(k) >= (delta - m * m) * gs.norms2(k - 1)) {
      ++k;
    } else {
      b.row(k).swap(b.row(k - 1));
      u.row(k).swap(u.row(k - 1));
      gs = gram_schmidt(b);
      check_rank();
      k = std::max<Eigen::Index>(k - 1, 1);
    }
  }
  return res;
}

IntMatrix int_product(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("integer product shape mismatch");
  IntMatrix r = IntMatrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (Eigen::Index j = 0; j < b.cols(); ++j) r(i, j) = checked_add(r(i, j), checked_mul(a(i, k), b(k, j)));
    }
  return r;
}

bool is_orthogonal(const Eigen::MatrixXd& o, double tol) {
  if (o.rows() != o.cols()) return false;
  const Eigen::MatrixXd e = o * o.transpose() - Eigen::MatrixXd::Identity(o.rows(), o.cols());
  return e.cwiseAbs().maxCoeff() <= tol;
}

}  // namespace khl
