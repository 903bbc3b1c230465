#include "khintchine/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "khintchine/errors.hpp"
#include "khintchine/parallel.hpp"
#include "khintchine/random.hpp"

namespace khl {

namespace {

using i128 = __int128;

constexpr int kMaxCoverLevel = 24;  // 3^24 < 2^39 keeps every sum inside 128 bits

i128 pow3_128(int n) {
  i128 p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  return p;
}

int bit_length(i128 v) {
  if (v < 0) v = -v;
  int b = 0;
  while (v > 0) {
    v >>= 1;
    ++b;
  }
  return b;
}

// Integer vector C and scalar R with C = 2^-E coeffs and R = 2^-E rhs exactly.
void integerize(const Vec& coeffs, double rhs, std::vector<i128>& C, i128& R) {
  struct Parts {
    long long m = 0;
    int e = 0;
  };
  auto split = [](double v) {
    Parts p;
    if (v == 0) return p;
    int e = 0;
    const double f = std::frexp(v, &e);
    p.m = std::llround(std::ldexp(f, 53));
    p.e = e - 53;
    while ((p.m & 1) == 0) {
      p.m /= 2;
      ++p.e;
    }
    return p;
  };
  std::vector<Parts> parts;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) parts.push_back(split(coeffs(j)));
  parts.push_back(split(rhs));
  int emin = std::numeric_limits<int>::max();
  for (const auto& p : parts)
    if (p.m != 0) emin = std::min(emin, p.e);
  std::vector<i128> vals;
  for (const auto& p : parts) {
    if (p.m == 0) {
      vals.push_back(0);
      continue;
    }
    const int shift = p.e - emin;
    if (shift > 60 || bit_length(i128(p.m)) + shift > 80)
      throw InvalidArgument("hyperplane coefficients span too wide a binary range for exact slicing");
    vals.push_back(i128(p.m) << shift);
  }
  R = vals.back();
  vals.pop_back();
  C = std::move(vals);
}

bool row_less(const std::vector<std::uint64_t>& v, int d, std::size_t a, std::size_t b) {
  return std::lexicographical_compare(v.begin() + long(a * d), v.begin() + long((a + 1) * d), v.begin() + long(b * d),
                                      v.begin() + long((b + 1) * d));
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

SubspaceQuery SubspaceQuery::hyperplane(const Vec& normal, double offset, double epsilon) {
  const double n = normal.norm();
  if (!(n > 0)) throw InvalidArgument("hyperplane normal must be nonzero");
  SubspaceQuery q{normal / n, Vec::Constant(1, offset / n), epsilon};
  q.validate();
  return q;
}

SubspaceQuery SubspaceQuery::coordinate(int d, const std::vector<int>& coords, const Vec& values, double epsilon) {
  if (coords.empty() || long(coords.size()) != values.size()) throw DimensionError("coordinate subspace shape mismatch");
  SubspaceQuery q{Mat::Zero(long(coords.size()), d), values, epsilon};
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= d) throw DimensionError("coordinate index out of range");
    q.normal_rows(long(i), coords[i]) = 1.0;
  }
  q.validate();
  return q;
}

bool SubspaceQuery::axis_aligned() const {
  for (Eigen::Index i = 0; i < normal_rows.rows(); ++i) {
    int nonzero = 0;
    for (Eigen::Index j = 0; j < normal_rows.cols(); ++j)
      if (normal_rows(i, j) != 0) ++nonzero;
    if (nonzero != 1) return false;
  }
  return true;
}

void SubspaceQuery::validate() const {
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  if (normal_rows.rows() < 1 || normal_rows.rows() > normal_rows.cols() || offset.size() != normal_rows.rows())
    throw DimensionError("subspace needs 1 <= l <= d normal rows and l offsets");
  const Mat gram = normal_rows * normal_rows.transpose();
  if ((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("normal rows must be orthonormal");
  if (codimension() > 1 && !axis_aligned())
    throw InvalidArgument("codimension above one is supported for coordinate subspaces only");
}

double SubspaceQuery::distance(const Vec& x) const {
  if (x.size() != dimension()) throw DimensionError("point dimension does not match the subspace");
  if (codimension() == 1) {
    const Vec n = normal_rows.row(0);
    return std::fabs(n.dot(x) - offset(0)) / n.lpNorm<1>();
  }
  double dist = 0;
  for (Eigen::Index i = 0; i < normal_rows.rows(); ++i)
    dist = std::max(dist, std::fabs(normal_rows.row(i).dot(x) - offset(i)));
  return dist;
}

double cover_constant(int d) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return 3.0 * std::ldexp(1.0, d - 1);
}

std::vector<int> CoverCertificate::word(long i) const {
  if (i < 0 || i >= count) throw InvalidArgument("cube index out of range");
  std::vector<int> digits(std::size_t(n) * std::size_t(d));
  for (int j = 0; j < d; ++j) {
    std::uint64_t v = corners[std::size_t(i) * std::size_t(d) + std::size_t(j)];
    for (int k = n - 1; k >= 0; --k) {
      digits[std::size_t(k) * std::size_t(d) + std::size_t(j)] = int(v % 3);
      v /= 3;
    }
  }
  return digits;
}

std::string CoverCertificate::word_string(long i) const {
  const auto w = word(i);
  std::string s;
  for (int k = 0; k < n; ++k) {
    if (k) s.push_back('.');
    for (int j = 0; j < d; ++j) s.push_back(char('0' + w[std::size_t(k * d + j)]));
  }
  return s;
}

bool CoverCertificate::admissible(long i) const {
  const auto w = word(i);
  return std::all_of(w.begin(), w.end(), [](int g) { return g == 0 || g == 2; });
}

double CoverCertificate::count_bound() const { return bound_constant * std::ldexp(1.0, (d - 1) * n); }

bool CoverCertificate::covers(const Vec& x, double tol) const {
  if (x.size() != d) throw DimensionError("point dimension does not match the certificate");
  const double scale = std::pow(3.0, n);
  std::vector<std::vector<std::uint64_t>> options(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const double y = x(j) * scale;
    const double fl = std::floor(y);
    for (double c : {fl - 1, fl, fl + 1}) {
      if (c < 0 || c >= scale) continue;
      if (y >= c - tol * scale && y <= c + 1 + tol * scale) options[std::size_t(j)].push_back(std::uint64_t(c));
    }
    if (options[std::size_t(j)].empty()) return false;
  }
  std::vector<std::size_t> pick(static_cast<std::size_t>(d), 0);
  std::vector<std::uint64_t> key(static_cast<std::size_t>(d));
  for (;;) {
    for (int j = 0; j < d; ++j) key[std::size_t(j)] = options[std::size_t(j)][pick[std::size_t(j)]];
    std::size_t lo = 0, hi = std::size_t(count);
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (std::lexicographical_compare(corners.begin() + long(mid * d), corners.begin() + long((mid + 1) * d),
                                       key.begin(), key.end()))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo < std::size_t(count) && std::equal(key.begin(), key.end(), corners.begin() + long(lo * d))) return true;
    int j = 0;
    while (j < d && ++pick[std::size_t(j)] == options[std::size_t(j)].size()) pick[std::size_t(j++)] = 0;
    if (j == d) return false;
  }
}

CoverCertificate cover_hyperplane(const Vec& coeffs, double rhs, int n, long max_cubes) {
  const int d = int(coeffs.size());
  if (d < 1) throw DimensionError("hyperplane needs at least one coefficient");
  if (n < 1) throw InvalidArgument("level n must be at least 1");
  if (!coeffs.allFinite() || !std::isfinite(rhs)) throw InvalidArgument("hyperplane must be finite");
  if (coeffs.cwiseAbs().maxCoeff() == 0) throw InvalidArgument("hyperplane coefficients must not all vanish");
  CoverCertificate cert;
  cert.d = d;
  cert.n = n;
  cert.bound_constant = cover_constant(d);
  if (n > kMaxCoverLevel) throw ResourceError("cover level exceeds the exact arithmetic range (n <= 24)");
  if (cert.count_bound() > double(max_cubes))
    throw ResourceError("certificate may need " + format_double(cert.count_bound()) + " cubes, over the budget of " +
                        std::to_string(max_cubes));

  std::vector<i128> C;
  i128 R;
  integerize(coeffs, rhs, C, R);
  i128 neg = 0, pos = 0, l1 = 0;
  for (const i128 c : C) {
    (c < 0 ? neg : pos) += c;
    l1 += c < 0 ? -c : c;
  }
  const i128 R3 = R * pow3_128(n);

  std::vector<std::uint64_t> cur(std::size_t(d), 0), next;
  for (int k = 1; k <= n; ++k) {
    const i128 h = pow3_128(n - k);
    next.clear();
    const std::size_t cubes = cur.size() / std::size_t(d);
    for (std::size_t c = 0; c < cubes; ++c) {
      for (unsigned v = 0; v < (1u << d); ++v) {
        i128 base = 0;
        for (int j = 0; j < d; ++j) {
          const i128 corner = i128(cur[c * std::size_t(d) + std::size_t(j)]) + (((v >> j) & 1u) ? 2 * h : 0);
          base += C[std::size_t(j)] * corner;
        }
        // c.x over the closed child cube is [base + h neg, base + h pos].
        if (base + h * neg < R3 + l1 && base + h * pos > R3 - l1) {
          for (int j = 0; j < d; ++j)
            next.push_back(cur[c * std::size_t(d) + std::size_t(j)] + (((v >> j) & 1u) ? std::uint64_t(2 * h) : 0));
        }
      }
    }
    if (long(next.size() / std::size_t(d)) > max_cubes) throw ResourceError("certificate exceeds the cube budget");
    cur.swap(next);
  }
  cert.count = long(cur.size() / std::size_t(d));
  std::vector<std::size_t> order(std::size_t(cert.count));
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row_less(cur, d, a, b); });
  cert.corners.reserve(cur.size());
  for (const std::size_t i : order)
    cert.corners.insert(cert.corners.end(), cur.begin() + long(i * d), cur.begin() + long((i + 1) * d));
  return cert;
}

double measure_upper_bound(const CoverCertificate& cert, int d) {
  if (cert.d != d) throw DimensionError("certificate dimension does not match d");
  return double(cert.count) * std::ldexp(1.0, -d * cert.n);
}

std::pair<double, double> axis_subspace_measure(int d, int l, int n) {
  if (l < 1 || l > d) throw InvalidArgument("need 1 <= l <= d");
  if (n < 0) throw InvalidArgument("n must be nonnegative");
  return {std::ldexp(1.0, -l * (n + 1)), std::ldexp(1.0, -l * n)};
}

bool is_cantor_product(const IfsSystem& sys) {
  const int d = sys.dimension();
  if (d > 16 || sys.size() != (1 << d) || std::fabs(sys.ratio() - 1.0 / 3) > 1e-15) return false;
  std::vector<bool> seen(std::size_t(sys.size()), false);
  for (int s = 0; s < sys.size(); ++s) {
    const auto& m = sys.map(s);
    if ((m.rotation() - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-15) return false;
    unsigned code = 0;
    for (int j = 0; j < d; ++j) {
      const double t = m.translation()(j);
      if (std::fabs(t - 2.0 / 3) <= 1e-15)
        code |= 1u << j;
      else if (t != 0.0)
        return false;
    }
    if (seen[code]) return false;
    seen[code] = true;
    if (std::fabs(sys.weights()[std::size_t(s)] - 1.0 / sys.size()) > 1e-12) return false;
  }
  return true;
}

std::vector<double> cantor_alphas(int d) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  const double s = std::log(2.0) / std::log(3.0);
  std::vector<double> a;
  for (int l = 1; l <= d; ++l) a.push_back(l * s);
  return a;
}

double varpi_of(const std::vector<double>& alphas, int d) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (long(alphas.size()) != d)
    throw InvalidArgument("expected " + std::to_string(d) + " alphas, got " + std::to_string(alphas.size()));
  double v = std::numeric_limits<double>::infinity();
  for (int l = 1; l <= d; ++l) v = std::min(v, alphas[std::size_t(l - 1)] * (d - l + 1));
  return v;
}

namespace {

// A hyperplane {w.x = b} with ||w||_1 = 1, or a coordinate subspace.
struct Candidate {
  bool hyper = true;
  Vec w;
  double b = 0;
  std::vector<int> coords;
  Vec values;

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    if (hyper) {
      os << "hyperplane w=(";
      for (Eigen::Index j = 0; j < w.size(); ++j) os << (j ? "," : "") << w(j);
      os << ") b=" << b;
    } else {
      os << "coordinates {";
      for (std::size_t j = 0; j < coords.size(); ++j) os << (j ? "," : "") << coords[j] + 1 << "=" << values(long(j));
      os << "}";
    }
    return os.str();
  }
};

struct SampleSet {
  int d;
  long count;
  std::vector<double> x;  // row-major
  double at(long i, int j) const { return x[std::size_t(i) * std::size_t(d) + std::size_t(j)]; }
};

std::vector<long> evaluate(const Candidate& c, const SampleSet& s, const std::vector<double>& eps) {
  std::vector<long> counts(eps.size(), 0);
  for (long i = 0; i < s.count; ++i) {
    double dist = 0;
    if (c.hyper) {
      double v = -c.b;
      for (int j = 0; j < s.d; ++j) v += c.w(j) * s.at(i, j);
      dist = std::fabs(v);
    } else {
      for (std::size_t j = 0; j < c.coords.size(); ++j)
        dist = std::max(dist, std::fabs(s.at(i, c.coords[j]) - c.values(long(j))));
    }
    for (std::size_t k = 0; k < eps.size() && dist < eps[k]; ++k) ++counts[k];
  }
  return counts;
}

Candidate normalized(Candidate c) {
  if (c.hyper) {
    const double n1 = c.w.lpNorm<1>();
    c.w /= n1;
    c.b /= n1;
  }
  return c;
}

std::vector<std::vector<int>> coordinate_subsets(int d, int l) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (int(cur.size()) == l) {
      out.push_back(cur);
      return;
    }
    for (int j = start; j < d; ++j) {
      cur.push_back(j);
      self(self, j + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

std::pair<double, double> wilson(long k, long n) {
  const double z = 1.959963984540054, p = double(k) / double(n), nn = double(n);
  const double denom = 1 + z * z / nn;
  const double center = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

AlphaEstimate alpha_estimate(const IfsSystem& sys, int l, int n_lo, int n_hi, int search_budget, std::uint64_t seed,
                             long samples, int workers) {
  const int d = sys.dimension();
  if (l < 1 || l > d) throw InvalidArgument("need 1 <= l <= d");
  if (n_lo < 0 || n_hi < n_lo) throw InvalidArgument("need 0 <= n_lo <= n_hi");
  if (search_budget < 1) throw InvalidArgument("search budget must be positive");
  if (samples < 1) throw InvalidArgument("sample count must be positive");

  // Samples in fixed chunks with their own seeds, so workers do not matter.
  constexpr long kChunk = 1L << 16;
  const long chunks = (samples + kChunk - 1) / kChunk;
  const int depth = sys.default_depth();
  const auto parts = parallel_map(std::size_t(chunks), workers, [&](std::size_t c) {
    const long cnt = std::min(kChunk, samples - long(c) * kChunk);
    return sample_fractal(sys, depth, task_seed(seed, c), int(cnt));
  });
  SampleSet s{d, samples, {}};
  s.x.reserve(std::size_t(samples) * std::size_t(d));
  for (const auto& part : parts)
    for (const auto& p : part)
      for (int j = 0; j < d; ++j) s.x.push_back(p(j));

  std::vector<double> eps;
  for (int n = n_lo; n <= n_hi; ++n) eps.push_back(std::pow(3.0, -n));
  const std::size_t K = eps.size();

  Rng rng(task_seed(seed, 0xa1fa0000ULL));
  auto sample_row = [&](Rng& r) {
    const long i = long(r.below(std::uint64_t(samples)));
    Vec p(d);
    for (int j = 0; j < d; ++j) p(j) = s.at(i, j);
    return p;
  };

  // Coordinate family: offsets at the base point and at sample points.
  std::vector<Candidate> axis;
  const auto subsets = coordinate_subsets(d, l);
  const int axis_budget = std::max<int>(int(subsets.size()), search_budget / 4);
  for (int i = 0; i < axis_budget; ++i) {
    const auto& sub = subsets[std::size_t(i) % subsets.size()];
    const Vec p = i < int(subsets.size()) ? Vec(sys.base_point()) : sample_row(rng);
    Candidate c;
    c.hyper = false;
    c.coords = sub;
    c.values = Vec(long(sub.size()));
    for (std::size_t j = 0; j < sub.size(); ++j) c.values(long(j)) = p(sub[j]);
    if (l == 1) {
      c.hyper = true;
      c.w = Vec::Zero(d);
      c.w(sub[0]) = 1.0;
      c.b = c.values(0);
    }
    axis.push_back(c);
  }
  // Hyperplanes through d fixed points of words of length <= 2, which lie in
  // the attractor, then random hyperplanes through sample points.
  std::vector<Candidate> structured, random;
  if (l == 1) {
    std::vector<Vec> anchors;
    for (int a = 0; a < sys.size() && anchors.size() < 64; ++a) anchors.push_back(sys.map(a).fixed_point());
    for (int a = 0; a < sys.size() && anchors.size() < 64; ++a)
      for (int b = 0; b < sys.size() && anchors.size() < 64; ++b)
        if (a != b) anchors.push_back(compose(sys.map(a), sys.map(b)).fixed_point());
    const int want = search_budget / 4;
    std::vector<int> pick(std::size_t(d), 0);
    std::iota(pick.begin(), pick.end(), 0);
    const int m = int(anchors.size());
    while (int(structured.size()) < want && m >= d) {
      Candidate c;
      if (d == 1) {
        c.w = Vec::Ones(1);
        c.b = anchors[std::size_t(pick[0])](0);
        structured.push_back(c);
      } else {
        Mat diff(d - 1, d);
        for (int i = 1; i < d; ++i) diff.row(i - 1) = anchors[std::size_t(pick[std::size_t(i)])] - anchors[std::size_t(pick[0])];
        Eigen::JacobiSVD<Mat> svd(diff, Eigen::ComputeFullV);
        if (svd.singularValues().minCoeff() > 1e-9) {
          c.w = svd.matrixV().col(d - 1).transpose();
          c.b = c.w.dot(anchors[std::size_t(pick[0])]);
          structured.push_back(normalized(c));
        }
      }
      // Next d-subset in lexicographic order.
      int i = d - 1;
      while (i >= 0 && pick[std::size_t(i)] == m - d + i) --i;
      if (i < 0) break;
      ++pick[std::size_t(i)];
      for (int j = i + 1; j < d; ++j) pick[std::size_t(j)] = pick[std::size_t(j - 1)] + 1;
    }
    for (int i = 0; i < search_budget / 4; ++i) {
      Candidate c;
      c.w = Vec(d);
      for (int j = 0; j < d; ++j) c.w(j) = rng.normal();
      if (c.w.lpNorm<1>() == 0) c.w(0) = 1;
      c.b = c.w.dot(sample_row(rng));
      random.push_back(normalized(c));
    }
  }

  struct Best {
    long hits = -1;
    Candidate cand;
  };
  std::vector<Best> best(K), best_axis(K), best_structured(K), best_random(K);
  auto absorb = [&](std::vector<Best>& into, const Candidate& c, const std::vector<long>& counts) {
    for (std::size_t k = 0; k < K; ++k)
      if (counts[k] > into[k].hits) into[k] = {counts[k], c};
  };
  const auto axis_counts = parallel_map(axis.size(), workers, [&](std::size_t i) { return evaluate(axis[i], s, eps); });
  for (std::size_t i = 0; i < axis.size(); ++i) {
    absorb(best_axis, axis[i], axis_counts[i]);
    absorb(best, axis[i], axis_counts[i]);
  }
  const auto structured_counts =
      parallel_map(structured.size(), workers, [&](std::size_t i) { return evaluate(structured[i], s, eps); });
  for (std::size_t i = 0; i < structured.size(); ++i) {
    absorb(best_structured, structured[i], structured_counts[i]);
    absorb(best, structured[i], structured_counts[i]);
  }
  const auto random_counts =
      parallel_map(random.size(), workers, [&](std::size_t i) { return evaluate(random[i], s, eps); });
  for (std::size_t i = 0; i < random.size(); ++i) {
    absorb(best_random, random[i], random_counts[i]);
    absorb(best, random[i], random_counts[i]);
  }
  long evaluations = long(axis.size() + structured.size() + random.size());

  // Hill climb from coarse to fine levels; each level also starts from the
  // previous level's winner. Proposals go in fixed batches evaluated in parallel.
  constexpr int kBatch = 8;
  const int climb_batches = std::max(0, (search_budget - int(evaluations)) / int(K) / kBatch);
  std::vector<Best> climbed(K);
  for (std::size_t k = 0; k < K; ++k) {
    Rng r(task_seed(seed, 0xc11b0000ULL + k));
    Best cur = best[k];
    if (k > 0) {
      const long carried = evaluate(climbed[k - 1].cand, s, {eps[k]})[0];
      ++evaluations;
      if (carried > cur.hits) cur = {carried, climbed[k - 1].cand};
    }
    double scale = eps[k];
    for (int batch = 0; batch < climb_batches; ++batch) {
      std::vector<Candidate> props(kBatch, cur.cand);
      for (auto& c : props) {
        if (c.hyper) {
          for (int j = 0; j < d; ++j) c.w(j) += scale * r.normal();
          c.b += scale * r.normal();
          c = normalized(c);
        } else {
          for (Eigen::Index j = 0; j < c.values.size(); ++j) c.values(j) += scale * r.normal();
        }
      }
      const auto hits = parallel_map(props.size(), workers, [&](std::size_t i) { return evaluate(props[i], s, {eps[k]})[0]; });
      bool improved = false;
      for (std::size_t i = 0; i < props.size(); ++i)
        if (hits[i] > cur.hits) {
          cur = {hits[i], props[i]};
          improved = true;
        }
      scale = improved ? eps[k] : std::max(scale / 2, eps[k] / 64);
    }
    evaluations += long(climb_batches) * kBatch;
    climbed[k] = cur;
  }

  const bool cantor = is_cantor_product(sys);
  AlphaEstimate est{l, {}, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                    evaluations};
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < K; ++k) {
    const Best& b = climbed[k].hits > best[k].hits ? climbed[k] : best[k];
    AlphaRow row;
    row.n = n_lo + int(k);
    row.epsilon = eps[k];
    row.hits = b.hits;
    row.samples = samples;
    row.mass = double(b.hits) / double(samples);
    std::tie(row.mass_lo, row.mass_hi) = wilson(b.hits, samples);
    const double le = std::log(eps[k]);
    row.ratio = std::log(row.mass) / le;
    row.ratio_lo = std::log(row.mass_hi) / le;
    row.ratio_hi = std::log(row.mass_lo) / le;
    row.axis_mass = double(best_axis[k].hits) / double(samples);
    row.structured_mass =
        l == 1 ? double(best_structured[k].hits) / double(samples) : std::numeric_limits<double>::quiet_NaN();
    row.random_mass = l == 1 ? double(best_random[k].hits) / double(samples) : std::numeric_limits<double>::quiet_NaN();
    row.certified_upper =
        cantor ? cover_constant(d) * std::ldexp(1.0, -row.n) : std::numeric_limits<double>::quiet_NaN();
    row.best = b.cand.describe();
    if (b.cand.hyper) {
      row.best_w.assign(b.cand.w.data(), b.cand.w.data() + b.cand.w.size());
      row.best_b = b.cand.b;
    }
    est.rows.push_back(row);
    if (b.hits > 0 && row.n > 0) {
      xs.push_back(le);
      ys.push_back(std::log(row.mass));
    }
  }
  if (xs.size() >= 2) {
    const double n = double(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n, my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    est.slope = sxy / sxx;
    if (xs.size() >= 3) {
      double rss = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - my - est.slope * (xs[i] - mx);
        rss += e * e;
      }
      est.slope_se = std::sqrt(rss / (n - 2) / sxx);
    }
  }
  return est;
}

}  // namespace khl
