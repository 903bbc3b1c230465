#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "khintchine/bigfloat.hpp"
#include "khintchine/ifs.hpp"

namespace khl {

// Element of SL(d+1, R). Products renormalize onto det = 1 once the
// determinant drifts by more than 1e-11; log_det_drift accumulates the
// removed log|det|.
struct GroupElement {
  Mat matrix;
  double log_det_drift = 0.0;

  GroupElement() = default;
  explicit GroupElement(Mat m, double drift = 0.0) : matrix(std::move(m)), log_det_drift(drift) {}
  static GroupElement identity(int n) { return GroupElement(Mat::Identity(n, n)); }

  int size() const { return static_cast<int>(matrix.rows()); }
  GroupElement inverse() const { return GroupElement(matrix.inverse(), -log_det_drift); }
  friend GroupElement operator*(const GroupElement& a, const GroupElement& b);
};

// a_t = diag(e^t, e^{-t/d} I_d)
Mat diag_matrix(double t, int d);
// u_alpha: first row (1, -alpha), identity below.
Mat unipotent_matrix(const Vec& alpha);
// blockdiag(1, O)
Mat rotation_matrix(const Mat& o);
// g_u = a_{-d log u / (d+1)}
Mat gt_matrix(double u, int d);

struct FlowElement {
  enum class Kind { diag, unipotent, rotation, gt };
  Kind kind;
  double t = 0.0;  // diag time, or the multiplier u for gt
  Vec alpha;
  Mat rotation;
  int d = 1;

  static FlowElement diag(double t, int d) { return {Kind::diag, t, {}, {}, d}; }
  static FlowElement unipotent(Vec alpha) {
    const int d = static_cast<int>(alpha.size());
    return {Kind::unipotent, 0.0, std::move(alpha), {}, d};
  }
  static FlowElement rotation_of(Mat o) {
    const int d = static_cast<int>(o.rows());
    return {Kind::rotation, 0.0, {}, std::move(o), d};
  }
  static FlowElement gt(double u, int d) { return {Kind::gt, u, {}, {}, d}; }

  GroupElement element() const;
};

struct PDecomposition {
  double t;
  Mat rotation;
  Vec alpha;
};

// p = a_t * blockdiag(1, O) * u_alpha. Throws NotInParabolic if p has
// the wrong block shape (1e-10 relative tolerance).
PDecomposition decompose_P(const Mat& p);
inline PDecomposition decompose_P(const GroupElement& g) { return decompose_P(g.matrix); }

// Similarity action of p in P on the row vector beta.
Vec rho_apply(const Mat& p, const Vec& beta);
inline Vec rho_apply(const GroupElement& g, const Vec& beta) { return rho_apply(g.matrix, beta); }

// Diagonal time t = -d log(kappa) / (d+1) of one walk step.
double step_time(double kappa, int d);

// h = phi^{-1} as a group element; requires 0 < ratio < 1.
GroupElement similarity_to_group(const SimilarityMap& phi);

struct WalkStep {
  int symbol;
  GroupElement element;
  double diag_time;
};

std::vector<WalkStep> walk_steps(const IfsSystem& sys);

// h_{s_n} ... h_{s_1}. Throws TrajectoryTooLong once an entry exceeds 1e300.
GroupElement walk_matrix(std::span<const WalkStep> steps, const SymbolWord& word);
// All prefix products h_{b_1^k}, k = 0..n.
std::vector<GroupElement> walk_prefixes(std::span<const WalkStep> steps, const SymbolWord& word);

// a_t * u_x
GroupElement diagonal_point(const Vec& x, double t);

// Largest entrywise residual of h_{b_1^n} = u_{-beta_n} a_{t_n} k_n u_{pi(b)}
// for a random stream, evaluated in multiprecision.
double appendix_identity_check(const IfsSystem& sys, std::uint64_t seed, int n);

// Multiprecision building blocks shared with the orbit engine.
BigMatrix to_big(const Mat& m, mpfr_prec_t bits);
// h_s = phi_s^{-1} and its inverse, with the diagonal factor evaluated from
// kappa at full precision.
BigMatrix step_matrix_mp(const SimilarityMap& phi, mpfr_prec_t bits);
BigMatrix step_inverse_mp(const SimilarityMap& phi, mpfr_prec_t bits);

}  // namespace khl
