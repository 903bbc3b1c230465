#include "khintchine/homogeneous.hpp"

#include <cmath>

#include "khintchine/errors.hpp"
#include "khintchine/linalg.hpp"

namespace khl {

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  if (a.matrix.cols() != b.matrix.rows()) throw DimensionError("group product: size mismatch");
  GroupElement r(a.matrix * b.matrix, a.log_det_drift + b.log_det_drift);
  // Orthogonal blocks may carry det -1, so renormalize |det| only.
  const double det = std::fabs(r.matrix.determinant());
  if (std::isfinite(det) && det > 0.0 && std::fabs(det - 1.0) > 1e-11) {
    r.matrix *= std::pow(det, -1.0 / double(r.matrix.rows()));
    r.log_det_drift += std::log(det);
  }
  return r;
}

Mat diag_matrix(double t, int d) {
  if (d < 1) throw DimensionError("diag: d >= 1 required");
  Mat m = Mat::Identity(d + 1, d + 1) * std::exp(-t / d);
  m(0, 0) = std::exp(t);
  return m;
}

Mat unipotent_matrix(const Vec& alpha) {
  const auto d = alpha.size();
  Mat m = Mat::Identity(d + 1, d + 1);
  m.block(0, 1, 1, d) = -alpha;
  return m;
}

Mat rotation_matrix(const Mat& o) {
  if (!is_orthogonal(o, 1e-12)) throw InvalidArgument("rotation block is not orthogonal");
  const auto d = o.rows();
  Mat m = Mat::Identity(d + 1, d + 1);
  m.block(1, 1, d, d) = o;
  return m;
}

Mat gt_matrix(double u, int d) {
  if (!(u > 0.0)) throw InvalidArgument("g_u needs u > 0");
  return diag_matrix(-d * std::log(u) / (d + 1), d);
}

GroupElement FlowElement::element() const {
  switch (kind) {
    case Kind::diag: return GroupElement(diag_matrix(t, d));
    case Kind::unipotent: return GroupElement(unipotent_matrix(alpha));
    case Kind::rotation: return GroupElement(rotation_matrix(rotation));
    case Kind::gt: return GroupElement(gt_matrix(t, d));
  }
  throw InvalidArgument("unknown flow element");
}

PDecomposition decompose_P(const Mat& p) {
  const auto n = p.rows();
  if (n < 2 || p.cols() != n) throw DimensionError("decompose_P: square matrix of size >= 2 required");
  const auto d = n - 1;
  const double scale = p.cwiseAbs().maxCoeff();
  if (!std::isfinite(scale) || scale == 0.0) throw NotInParabolic("degenerate matrix");
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::fabs(p(i, 0)) > 1e-10 * scale) throw NotInParabolic("lower-left block is not zero");
  if (!(p(0, 0) > 0.0)) throw NotInParabolic("(0,0) entry must be positive");
  PDecomposition out;
  out.t = std::log(p(0, 0));
  out.rotation = std::exp(out.t / double(d)) * p.block(1, 1, d, d);
  if (!is_orthogonal(out.rotation, 1e-10)) throw NotInParabolic("diagonal block is not a scaled rotation");
  out.alpha = -p.block(0, 1, 1, d) / p(0, 0);
  return out;
}

Vec rho_apply(const Mat& p, const Vec& beta) {
  const auto dec = decompose_P(p);
  if (beta.size() != dec.alpha.size()) throw DimensionError("rho_apply: dimension mismatch");
  const double d = double(beta.size());
  return std::exp(dec.t + dec.t / d) * (beta - dec.alpha) * dec.rotation.transpose();
}

double step_time(double kappa, int d) { return -d * std::log(kappa) / (d + 1); }

GroupElement similarity_to_group(const SimilarityMap& phi) {
  const double k = phi.ratio();
  if (!(k < 1.0)) throw InvalidArgument("similarity_to_group: map is not contracting");
  const int d = phi.dimension();
  Mat h = Mat::Zero(d + 1, d + 1);
  h(0, 0) = 1.0 / k;
  h.block(0, 1, 1, d) = -phi.translation() / k;
  h.block(1, 1, d, d) = phi.rotation();
  h *= std::pow(k, 1.0 / (d + 1));
  return GroupElement(h);
}

std::vector<WalkStep> walk_steps(const IfsSystem& sys) {
  std::vector<WalkStep> out;
  const double t = step_time(sys.ratio(), sys.dimension());
  for (int s = 0; s < sys.size(); ++s) out.push_back({s, similarity_to_group(sys.map(s)), t});
  return out;
}

namespace {

void check_finite_range(const GroupElement& g) {
  const double m = g.matrix.cwiseAbs().maxCoeff();
  if (!(m <= 1e300)) throw TrajectoryTooLong("walk product entries exceed 1e300");
}

const WalkStep& step_for(std::span<const WalkStep> steps, int s) {
  for (const auto& st : steps)
    if (st.symbol == s) return st;
  throw InvalidArgument("symbol without a walk step");
}

}  // namespace

std::vector<GroupElement> walk_prefixes(std::span<const WalkStep> steps, const SymbolWord& word) {
  if (steps.empty()) throw InvalidArgument("walk needs at least one step");
  std::vector<GroupElement> out{GroupElement::identity(steps.front().element.size())};
  out.reserve(word.size() + 1);
  for (int s : word) {
    out.push_back(step_for(steps, s).element * out.back());
    check_finite_range(out.back());
  }
  return out;
}

GroupElement walk_matrix(std::span<const WalkStep> steps, const SymbolWord& word) {
  if (steps.empty()) throw InvalidArgument("walk needs at least one step");
  GroupElement h = GroupElement::identity(steps.front().element.size());
  for (int s : word) {
    h = step_for(steps, s).element * h;
    check_finite_range(h);
  }
  return h;
}

GroupElement diagonal_point(const Vec& x, double t) {
  const int d = static_cast<int>(x.size());
  return GroupElement(diag_matrix(t, d) * unipotent_matrix(x));
}

BigMatrix to_big(const Mat& m, mpfr_prec_t bits) {
  BigMatrix r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), bits);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j).set(m(i, j));
  return r;
}

namespace {

// kappa^{e} at full precision.
BigFloat kappa_power(double kappa, double num, double den, mpfr_prec_t bits) {
  BigFloat k(kappa, bits);
  BigFloat e = BigFloat(num, bits) / BigFloat(den, bits);
  return pow(k, e);
}

}  // namespace

BigMatrix step_matrix_mp(const SimilarityMap& phi, mpfr_prec_t bits) {
  const int d = phi.dimension();
  const BigFloat k(phi.ratio(), bits);
  const BigFloat scale = kappa_power(phi.ratio(), 1.0, d + 1, bits);
  BigMatrix h(d + 1, d + 1, bits);
  h(0, 0) = scale / k;
  for (int j = 0; j < d; ++j) h(0, j + 1) = -(BigFloat(phi.translation()(j), bits) * scale / k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h(i + 1, j + 1) = BigFloat(phi.rotation()(i, j), bits) * scale;
  return h;
}

BigMatrix step_inverse_mp(const SimilarityMap& phi, mpfr_prec_t bits) {
  // kappa^{-1/(d+1)} [[kappa, y O^T], [0, O^T]]
  const int d = phi.dimension();
  const BigFloat k(phi.ratio(), bits);
  const BigFloat scale = kappa_power(phi.ratio(), -1.0, d + 1, bits);
  BigMatrix h(d + 1, d + 1, bits);
  h(0, 0) = scale * k;
  BigFloat scratch(bits);
  for (int j = 0; j < d; ++j) {
    BigFloat acc(bits);
    for (int i = 0; i < d; ++i)
      acc.add_product(BigFloat(phi.translation()(i), bits), BigFloat(phi.rotation()(j, i), bits), scratch);
    h(0, j + 1) = acc * scale;
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h(i + 1, j + 1) = BigFloat(phi.rotation()(j, i), bits) * scale;
  return h;
}

double appendix_identity_check(const IfsSystem& sys, std::uint64_t seed, int n) {
  if (n < 1) throw InvalidArgument("appendix_identity_check needs n >= 1");
  const int d = sys.dimension();
  const double tn = n * step_time(sys.ratio(), d);
  const auto bits = static_cast<mpfr_prec_t>(128 + std::ceil(2.0 * tn / std::log(2.0)));

  SymbolStream stream(sys, seed);
  const SymbolWord word = stream.take(n + 40);

  BigMatrix h = BigMatrix::identity(d + 1, bits);
  for (int k = 0; k < n; ++k) h = step_matrix_mp(sys.map(word[std::size_t(k)]), bits) * h;

  // decompose_P at full precision: e^{t_n} = h00, k_n = e^{t_n/d} h[1:,1:].
  const BigFloat& et = h(0, 0);
  const BigFloat et_d = pow(et, BigFloat(1.0, bits) / BigFloat(double(d), bits));
  const auto pi_b = coding_point_mp(sys, word, bits);
  const auto beta_n = coding_point_mp(sys, std::span<const int>(word).subspan(std::size_t(n)), bits);

  BigMatrix u_beta = BigMatrix::identity(d + 1, bits);
  BigMatrix u_pi = BigMatrix::identity(d + 1, bits);
  BigMatrix ak = BigMatrix::identity(d + 1, bits);
  for (int j = 0; j < d; ++j) {
    u_beta(0, j + 1) = beta_n[std::size_t(j)];
    u_pi(0, j + 1) = -pi_b[std::size_t(j)];
  }
  ak(0, 0) = et;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const BigFloat kn = h(i + 1, j + 1) * et_d;
      ak(i + 1, j + 1) = kn / et_d;
    }
  const BigMatrix rhs = u_beta * ak * u_pi;

  double worst = 0.0;
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) worst = std::max(worst, std::fabs((h(i, j) - rhs(i, j)).to_double()));
  return worst;
}

}  // namespace khl
