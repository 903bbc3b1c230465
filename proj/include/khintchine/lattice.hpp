#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "khintchine/homogeneous.hpp"
#include "khintchine/linalg.hpp"

namespace khl {

// Largest lattice dimension for which the enumeration is trusted.
inline constexpr int kMaxLatticeDim = 6;

struct ShortestVector {
  double delta;       // sup norm of the shortest nonzero vector
  IntRow witness;     // coefficients in the input basis
  Vec vector;         // witness * basis
};

// Exact sup-norm minimum over nonzero integer combinations of the rows of
// `basis`: LLL, then Fincke-Pohst enumeration inside the Euclidean ball of
// radius sqrt(n) times the best sup norm seen. Ties go to the
// lexicographically smallest witness whose first nonzero entry is positive.
ShortestVector shortest_vector_of_basis(const Mat& basis);

// Lattice model: the point g Gamma is the lattice spanned by the rows of g^{-1}.
Mat lattice_basis(const GroupElement& g);
ShortestVector shortest_vector(const GroupElement& g);
double height(const GroupElement& g);
double height_of_basis(const Mat& basis);

struct LatticePoint {
  GroupElement element;
  Mat dual_basis;
  double delta;
  double height;
  IntRow witness;

  explicit LatticePoint(GroupElement g);
};

// Sublevel set {l <= level} of the height function.
struct CompactWindow {
  double level;

  explicit CompactWindow(double l);
  double min_delta() const { return std::exp(-level); }
  double q_const() const { return level; }
};

bool in_window(double h, const CompactWindow& w);
bool in_window(const GroupElement& g, const CompactWindow& w);

}  // namespace khl
