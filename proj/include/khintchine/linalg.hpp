#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace khl {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntRow = Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>;

struct GramSchmidt {
  Eigen::MatrixXd mu;       // mu(i, j) for j < i; unit diagonal
  Eigen::VectorXd norms2;   // squared lengths of the orthogonalized rows
};

// Gram-Schmidt data for the rows of `basis`.
GramSchmidt gram_schmidt(const Eigen::MatrixXd& basis);

struct LllResult {
  Eigen::MatrixXd basis;  // reduced rows
  IntMatrix transform;    // unimodular, basis = transform * input
};

// LLL reduction of the rows of `basis` (delta = 0.99 by default).
// Throws SingularBasis on dependent rows and Error if the integer
// transform would overflow 64 bits.
LllResult lll_reduce(const Eigen::MatrixXd& basis, double delta = 0.99);

// Integer matrix product with overflow checks.
IntMatrix int_product(const IntMatrix& a, const IntMatrix& b);

bool is_orthogonal(const Eigen::MatrixXd& o, double tol = 1e-12);

}  // namespace khl
