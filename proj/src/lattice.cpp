#include "khintchine/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "khintchine/errors.hpp"

namespace khl {

namespace {

struct Enumerator {
  const Mat& basis;  // LLL-reduced rows
  GramSchmidt gs;
  int n;
  double best;                       // best sup norm so far
  std::vector<Eigen::VectorXd> ties;  // coefficient vectors within tolerance of best
  Eigen::VectorXd z;
  long visited = 0;

  static constexpr double kTieTol = 1e-13;

  double radius2() const {
    const double r = std::sqrt(double(n)) * best * (1.0 + 1e-10);
    return r * r;
  }

  void consider() {
    const double sup = (z.transpose() * basis).cwiseAbs().maxCoeff();
    if (sup < best * (1.0 - kTieTol)) {
      best = sup;
      ties.clear();
      ties.push_back(z);
    } else if (sup <= best * (1.0 + kTieTol)) {
      ties.push_back(z);
    }
  }

  // Level k; `rho` is the squared length contributed by levels > k.
  void search(int k, double rho, bool higher_zero) {
    double center = 0.0;
    for (int j = k + 1; j < n; ++j) center -= z(j) * gs.mu(j, k);
    const double room = radius2() - rho;
    if (room < 0.0) return;
    const double w = std::sqrt(room / gs.norms2(k));
    double lo = std::ceil(center - w);
    const double hi = std::floor(center + w);
    if (higher_zero) lo = std::max(lo, k == 0 ? 1.0 : 0.0);
    for (double v = lo; v <= hi; v += 1.0) {
      if (++visited > 200000000L) throw ResourceError("shortest-vector enumeration budget exceeded");
      const double part = rho + (v - center) * (v - center) * gs.norms2(k);
      if (part > radius2()) continue;
      z(k) = v;
      if (k == 0) {
        consider();
      } else {
        search(k - 1, part, higher_zero && v == 0.0);
      }
    }
    z(k) = 0.0;
  }
};

IntRow normalized(IntRow w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) == 0) continue;
    if (w(i) < 0) w = -w;
    break;
  }
  return w;
}

bool lex_less(const IntRow& a, const IntRow& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return a(i) < b(i);
  return false;
}

}  // namespace

ShortestVector shortest_vector_of_basis(const Mat& basis) {
  const int n = static_cast<int>(basis.rows());
  if (n < 1 || basis.cols() != n) throw DimensionError("lattice basis must be square");
  if (n > kMaxLatticeDim) throw DimensionError("lattice dimension above the certified range");
  if (!basis.allFinite()) throw SingularBasis("non-finite lattice basis");

  const LllResult red = lll_reduce(basis);
  Enumerator e{red.basis, gram_schmidt(red.basis), n, INFINITY, {}, Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    e.z.setZero();
    e.z(i) = 1.0;
    e.consider();
  }
  e.z.setZero();
  e.search(n - 1, 0.0, true);

  IntRow best_w;
  for (const auto& t : e.ties) {
    IntRow zr(n);
    for (int i = 0; i < n; ++i) zr(i) = static_cast<std::int64_t>(t(i));
    const IntRow w = normalized(int_product(zr, red.transform));
    if (best_w.size() == 0 || lex_less(w, best_w)) best_w = w;
  }
  ShortestVector out;
  out.witness = best_w;
  out.vector = best_w.cast<double>() * basis;
  out.delta = out.vector.cwiseAbs().maxCoeff();
  return out;
}

Mat lattice_basis(const GroupElement& g) {
  const Mat inv = g.matrix.inverse();
  if (!inv.allFinite()) throw SingularBasis("group element is not invertible");
  return inv;
}

ShortestVector shortest_vector(const GroupElement& g) {
  if (g.size() > kMaxLatticeDim) throw DimensionError("lattice dimension above the certified range");
  return shortest_vector_of_basis(lattice_basis(g));
}

double height_of_basis(const Mat& basis) { return -std::log(shortest_vector_of_basis(basis).delta); }

double height(const GroupElement& g) { return -std::log(shortest_vector(g).delta); }

LatticePoint::LatticePoint(GroupElement g) : element(std::move(g)), dual_basis(lattice_basis(element)) {
  const Mat resid = element.matrix * dual_basis - Mat::Identity(element.size(), element.size());
  if (resid.cwiseAbs().maxCoeff() > 1e-9) throw SingularBasis("inverse residual above 1e-9");
  const auto sv = shortest_vector_of_basis(dual_basis);
  delta = sv.delta;
  height = -std::log(delta);
  witness = sv.witness;
}

CompactWindow::CompactWindow(double l) : level(l) {
  if (!std::isfinite(l)) throw InvalidArgument("window level must be finite");
}

bool in_window(double h, const CompactWindow& w) { return h <= w.level; }

bool in_window(const GroupElement& g, const CompactWindow& w) { return in_window(height(g), w); }

}  // namespace khl
