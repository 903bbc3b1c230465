#include "khintchine/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "khintchine/errors.hpp"
#include "khintchine/linalg.hpp"

namespace khl {

SimilarityMap::SimilarityMap(double ratio, Mat rotation, Vec translation)
    : ratio_(ratio), rotation_(std::move(rotation)), translation_(std::move(translation)) {
  if (!(ratio_ > 0.0) || !std::isfinite(ratio_)) throw InvalidArgument("similarity ratio must be positive");
  if (translation_.size() < 1) throw DimensionError("similarity map needs dimension >= 1");
  if (rotation_.rows() != translation_.size() || rotation_.cols() != translation_.size()) {
    throw DimensionError("rotation and translation sizes differ");
  }
  if (!is_orthogonal(rotation_, 1e-12)) throw InvalidArgument("rotation is not orthogonal");
}

SimilarityMap SimilarityMap::identity(int d) { return {1.0, Mat::Identity(d, d), Vec::Zero(d)}; }

Vec SimilarityMap::operator()(const Vec& x) const {
  if (x.size() != translation_.size()) throw DimensionError("point dimension mismatch");
  return ratio_ * x * rotation_ + translation_;
}

Vec SimilarityMap::fixed_point() const {
  const int d = dimension();
  const Mat m = Mat::Identity(d, d) - ratio_ * rotation_;
  // x (I - k O) = y  <=>  (I - k O)^T x^T = y^T
  return m.transpose().fullPivLu().solve(translation_.transpose()).transpose();
}

SimilarityMap compose(const SimilarityMap& map1, const SimilarityMap& map2) {
  if (map1.dimension() != map2.dimension()) throw DimensionError("compose: dimension mismatch");
  return {map1.ratio() * map2.ratio(), map2.rotation() * map1.rotation(),
          map1.ratio() * map2.translation() * map1.rotation() + map1.translation()};
}

namespace {

// Radius of a ball about c mapped into itself by every map.
double invariant_radius(std::span<const SimilarityMap> maps, const Vec& c) {
  double r = 0.0;
  for (const auto& m : maps) r = std::max(r, (m(c) - c).norm());
  return r / (1.0 - maps.front().ratio());
}

// All images phi_w(c) for |w| = k.
std::vector<Vec> level_images(std::span<const SimilarityMap> maps, const Vec& c, int k) {
  std::vector<Vec> pts{c};
  for (int level = 0; level < k; ++level) {
    std::vector<Vec> next;
    next.reserve(pts.size() * maps.size());
    for (const auto& m : maps)
      for (const auto& p : pts) next.push_back(m(p));
    pts = std::move(next);
  }
  return pts;
}

double estimate_diameter(std::span<const SimilarityMap> maps, const Vec& c) {
  const double r0 = invariant_radius(maps, c);
  int k = 0;
  std::size_t n = 1;
  while (k < 8 && n * maps.size() <= 512) {
    n *= maps.size();
    ++k;
  }
  const auto pts = level_images(maps, c, k);
  double span = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) span = std::max(span, (pts[i] - pts[j]).norm());
  return span + 2.0 * std::pow(maps.front().ratio(), k) * r0;
}

}  // namespace

IfsSystem::IfsSystem(std::vector<SimilarityMap> maps, std::vector<double> weights)
    : maps_(std::move(maps)), weights_(std::move(weights)) {
  if (maps_.empty()) throw InvalidArgument("IFS needs at least one map");
  if (weights_.size() != maps_.size()) throw InvalidArgument("one weight per map required");
  const int d = maps_.front().dimension();
  ratio_ = maps_.front().ratio();
  for (const auto& m : maps_) {
    if (m.dimension() != d) throw DimensionError("IFS maps have different dimensions");
    if (std::fabs(m.ratio() - ratio_) > 1e-14) throw InvalidArgument("IFS maps must share one contraction ratio");
  }
  if (!(ratio_ < 1.0)) throw InvalidArgument("IFS maps must be contracting");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw InvalidArgument("weights must be strictly positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InvalidArgument("weights must sum to 1");
  base_ = maps_.front().fixed_point();
  diam_ = estimate_diameter(maps_, base_);
}

int IfsSystem::default_depth() const {
  return 2 * static_cast<int>(std::ceil(52.0 * std::log(2.0) / std::fabs(std::log(ratio_))));
}

double IfsSystem::similarity_dimension() const { return std::log(double(size())) / std::log(1.0 / ratio_); }

void IfsSystem::validate_word(const SymbolWord& w) const {
  for (int s : w)
    if (s < 0 || s >= size()) throw InvalidArgument("symbol outside the alphabet");
}

IfsSystem cantor_product(int d) {
  if (d <= 0) throw InvalidArgument("cantor_product needs d >= 1");
  if (d > 16) throw InvalidArgument("cantor_product: d too large");
  const int n = 1 << d;
  std::vector<SimilarityMap> maps;
  for (int s = 0; s < n; ++s) {
    Vec y(d);
    for (int i = 0; i < d; ++i) y(i) = ((s >> i) & 1) ? 2.0 / 3.0 : 0.0;
    maps.emplace_back(1.0 / 3.0, Mat::Identity(d, d), y);
  }
  return {std::move(maps), std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
}

CodingPoint coding_point(const IfsSystem& sys, const SymbolWord& word, const Vec& base) {
  if (word.empty()) throw InvalidArgument("coding_point needs a nonempty word");
  sys.validate_word(word);
  Vec p = base;
  for (auto it = word.rbegin(); it != word.rend(); ++it) p = sys.map(*it)(p);
  return {p, std::pow(sys.ratio(), double(word.size())) * sys.diameter_estimate()};
}

CodingPoint coding_point(const IfsSystem& sys, const SymbolWord& word) {
  return coding_point(sys, word, sys.base_point());
}

std::vector<BigFloat> coding_point_mp(const IfsSystem& sys, std::span<const int> word, mpfr_prec_t bits) {
  const int d = sys.dimension();
  std::vector<BigFloat> p, q;
  for (int i = 0; i < d; ++i) {
    p.emplace_back(sys.base_point()(i), bits);
    q.emplace_back(bits);
  }
  BigFloat scratch(bits), coef(bits);
  const BigFloat kappa(sys.ratio(), bits);
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    const auto& m = sys.map(*it);
    for (int j = 0; j < d; ++j) {
      q[j].set(m.translation()(j));
      for (int i = 0; i < d; ++i) {
        const double o = m.rotation()(i, j);
        if (o == 0.0) continue;
        coef.set(o);
        coef *= kappa;
        q[j].add_product(p[i], coef, scratch);
      }
    }
    std::swap(p, q);
  }
  return p;
}

SymbolStream::SymbolStream(const IfsSystem& sys, std::uint64_t seed) : rng_(seed) {
  double acc = 0.0;
  for (double w : sys.weights()) cdf_.push_back(acc += w);
  cdf_.back() = 1.0;
}

int SymbolStream::next() {
  const double u = rng_.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), std::ssize(cdf_) - 1));
}

SymbolWord SymbolStream::take(int n) {
  SymbolWord w(static_cast<std::size_t>(std::max(n, 0)));
  for (auto& s : w) s = next();
  return w;
}

std::vector<SymbolWord> sample_words(const IfsSystem& sys, int depth, std::uint64_t seed, int count) {
  if (depth < 1 || count < 1) throw InvalidArgument("sample_fractal needs depth >= 1 and count >= 1");
  SymbolStream stream(sys, seed);
  std::vector<SymbolWord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(stream.take(depth));
  return out;
}

std::vector<Vec> sample_fractal(const IfsSystem& sys, int depth, std::uint64_t seed, int count) {
  std::vector<Vec> out;
  for (const auto& w : sample_words(sys, depth, seed, count)) out.push_back(coding_point(sys, w).point);
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

struct Box {
  Vec lo, hi;
};

// Open parallelotope phi(box): corner + sum_i t_i * edge_i, t in (0,1)^d.
struct Parallelotope {
  Vec corner;
  Mat edges;  // rows
};

Parallelotope image_of(const SimilarityMap& m, const Box& b) {
  const int d = m.dimension();
  Parallelotope p{m(b.lo), Mat(d, d)};
  for (int i = 0; i < d; ++i) p.edges.row(i) = m.ratio() * (b.hi(i) - b.lo(i)) * m.rotation().row(i);
  return p;
}

std::pair<double, double> project(const Parallelotope& p, const Vec& axis) {
  double lo = p.corner.dot(axis), hi = lo;
  for (int i = 0; i < p.edges.rows(); ++i) {
    const double e = p.edges.row(i).dot(axis);
    (e < 0 ? lo : hi) += e;
  }
  return {lo, hi};
}

Box bounding_box(const Parallelotope& p) {
  Box b{p.corner, p.corner};
  for (int i = 0; i < p.edges.rows(); ++i)
    for (int j = 0; j < p.edges.cols(); ++j) (p.edges(i, j) < 0 ? b.lo(j) : b.hi(j)) += p.edges(i, j);
  return b;
}

// Normals of the facets of a parallelotope with the given edge rows.
std::vector<Vec> facet_normals(const Mat& edges) {
  const int d = static_cast<int>(edges.rows());
  std::vector<Vec> out;
  if (d == 1) {
    out.push_back(Vec::Ones(1));
    return out;
  }
  // Columns of the inverse are dual to the edge rows.
  const Mat inv = edges.inverse();
  for (int i = 0; i < d; ++i) out.push_back(inv.col(i).transpose().normalized());
  return out;
}

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
  return c;
}

enum class Overlap { disjoint, overlap, unknown };

Overlap interiors_overlap(const Parallelotope& a, const Parallelotope& b, double tol) {
  const int d = static_cast<int>(a.corner.size());
  std::vector<Vec> axes = facet_normals(a.edges);
  for (auto& v : facet_normals(b.edges)) axes.push_back(v);
  if (d == 3) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Vec c = cross3(a.edges.row(i), b.edges.row(j));
        if (c.norm() > 1e-12 * a.edges.row(i).norm() * b.edges.row(j).norm()) axes.push_back(c.normalized());
      }
  }
  for (const auto& ax : axes) {
    const auto [alo, ahi] = project(a, ax);
    const auto [blo, bhi] = project(b, ax);
    if (ahi <= blo + tol || bhi <= alo + tol) return Overlap::disjoint;
  }
  // The axis family is complete for d <= 3.
  return d <= 3 ? Overlap::overlap : Overlap::unknown;
}

bool same_map(const SimilarityMap& a, const SimilarityMap& b, double tol) {
  return std::fabs(a.ratio() - b.ratio()) <= tol && (a.rotation() - b.rotation()).cwiseAbs().maxCoeff() <= tol &&
         (a.translation() - b.translation()).cwiseAbs().maxCoeff() <= tol;
}

// Composite maps for all words of length 1..depth, capped in number.
std::vector<std::vector<SimilarityMap>> word_maps(std::span<const SimilarityMap> maps, int depth, std::size_t cap) {
  std::vector<std::vector<SimilarityMap>> levels;
  std::vector<SimilarityMap> cur(maps.begin(), maps.end());
  for (int k = 1; k <= depth; ++k) {
    levels.push_back(cur);
    if (cur.size() * maps.size() > cap) break;
    std::vector<SimilarityMap> next;
    for (const auto& w : cur)
      for (const auto& m : maps) next.push_back(compose(w, m));
    cur = std::move(next);
  }
  return levels;
}

Verdict open_set_verdict(std::span<const SimilarityMap> maps, int depth, std::vector<std::string>& notes) {
  const int d = maps.front().dimension();
  const Vec c = maps.front().fixed_point();
  const double r0 = invariant_radius(maps, c);
  Box box{c.array() - r0, c.array() + r0};
  for (int it = 0; it < 500; ++it) {
    Box next{Vec::Constant(d, INFINITY), Vec::Constant(d, -INFINITY)};
    for (const auto& m : maps) {
      const Box b = bounding_box(image_of(m, box));
      next.lo = next.lo.cwiseMin(b.lo);
      next.hi = next.hi.cwiseMax(b.hi);
    }
    const double change = std::max((next.lo - box.lo).cwiseAbs().maxCoeff(), (next.hi - box.hi).cwiseAbs().maxCoeff());
    box = next;
    if (change <= 1e-15 * (1.0 + r0)) break;
  }
  const double scale = (box.hi - box.lo).maxCoeff();
  const double tol = 1e-12 * std::max(scale, 1e-300);
  bool candidate_ok = (box.hi - box.lo).minCoeff() > tol;
  if (candidate_ok) {
    std::vector<Parallelotope> images;
    for (const auto& m : maps) images.push_back(image_of(m, box));
    for (std::size_t i = 0; i < images.size() && candidate_ok; ++i)
      for (std::size_t j = i + 1; j < images.size() && candidate_ok; ++j)
        if (interiors_overlap(images[i], images[j], tol) != Overlap::disjoint) candidate_ok = false;
  }
  if (candidate_ok) return Verdict::pass;
  notes.push_back("bounding-box candidate for the open set condition failed");
  // Distinct words with identical composite maps rule out the open set condition.
  for (const auto& level : word_maps(maps, std::max(depth, 1), 4096)) {
    for (std::size_t i = 0; i < level.size(); ++i)
      for (std::size_t j = i + 1; j < level.size(); ++j)
        if (same_map(level[i], level[j], 1e-12)) {
          notes.push_back("exact overlap: two distinct words give the same map");
          return Verdict::fail;
        }
  }
  return Verdict::inconclusive;
}

Verdict irreducible_verdict(std::span<const SimilarityMap> maps, int depth) {
  const int d = maps.front().dimension();
  const Vec c = maps.front().fixed_point();
  std::vector<Vec> pts{c};
  std::vector<Vec> frontier{c};
  for (int k = 0; k < std::max(depth, 1) && pts.size() < 4096; ++k) {
    std::vector<Vec> next;
    for (const auto& p : frontier)
      for (const auto& m : maps) next.push_back(m(p));
    for (const auto& p : next) pts.push_back(p);
    frontier = std::move(next);
  }
  Mat diffs(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i) diffs.row(static_cast<Eigen::Index>(i)) = pts[i] - c;
  const double scale = diffs.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Verdict::inconclusive;
  Eigen::ColPivHouseholderQR<Mat> qr(diffs);
  qr.setThreshold(1e-9);
  return qr.rank() == d ? Verdict::pass : Verdict::inconclusive;
}

}  // namespace

HypothesisReport check_hypotheses(std::span<const SimilarityMap> maps, int depth) {
  HypothesisReport rep{Verdict::pass, Verdict::inconclusive, Verdict::inconclusive, {}};
  if (maps.empty()) {
    rep.common_ratio = Verdict::fail;
    rep.notes.push_back("no maps");
    return rep;
  }
  const int d = maps.front().dimension();
  for (const auto& m : maps) {
    if (m.dimension() != d) {
      rep.common_ratio = Verdict::fail;
      rep.notes.push_back("maps of different dimensions");
      return rep;
    }
    if (std::fabs(m.ratio() - maps.front().ratio()) > 1e-14) rep.common_ratio = Verdict::fail;
    if (!(m.ratio() < 1.0)) rep.common_ratio = Verdict::fail;
  }
  if (rep.common_ratio == Verdict::fail) {
    rep.notes.push_back("ratios differ or are not contracting");
    return rep;
  }
  rep.open_set = open_set_verdict(maps, depth, rep.notes);
  rep.irreducible = irreducible_verdict(maps, depth);
  if (rep.irreducible != Verdict::pass) rep.notes.push_back("fixed-point orbit spans a proper affine subspace");
  return rep;
}

HypothesisReport check_hypotheses(const IfsSystem& sys, int depth) { return check_hypotheses(sys.maps(), depth); }

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  for (const char* a : allowed)
    if (!j.contains(a)) throw ConfigError(where + ": missing key '" + std::string(a) + "'");
}

double number(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

}  // namespace

IfsSystem ifs_from_json(const nlohmann::json& j) {
  require_keys(j, {"dimension", "ratio", "maps", "weights"}, "ifs");
  if (!j["dimension"].is_number_integer() || j["dimension"].get<int>() < 1) {
    throw ConfigError("ifs.dimension: expected a positive integer");
  }
  const int d = j["dimension"].get<int>();
  const double ratio = number(j["ratio"], "ifs.ratio");
  if (!j["maps"].is_array() || j["maps"].empty()) throw ConfigError("ifs.maps: expected a nonempty array");
  if (!j["weights"].is_array() || j["weights"].size() != j["maps"].size()) {
    throw ConfigError("ifs.weights: expected one weight per map");
  }
  std::vector<SimilarityMap> maps;
  std::vector<double> weights;
  try {
    for (std::size_t s = 0; s < j["maps"].size(); ++s) {
      const auto& m = j["maps"][s];
      const std::string where = "ifs.maps[" + std::to_string(s) + "]";
      require_keys(m, {"rotation", "translation"}, where);
      if (!m["rotation"].is_array() || m["rotation"].size() != std::size_t(d * d)) {
        throw ConfigError(where + ".rotation: expected " + std::to_string(d * d) + " numbers, row-major");
      }
      if (!m["translation"].is_array() || m["translation"].size() != std::size_t(d)) {
        throw ConfigError(where + ".translation: expected " + std::to_string(d) + " numbers");
      }
      Mat o(d, d);
      Vec y(d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) o(r, c) = number(m["rotation"][std::size_t(r * d + c)], where + ".rotation");
      for (int c = 0; c < d; ++c) y(c) = number(m["translation"][std::size_t(c)], where + ".translation");
      maps.emplace_back(ratio, o, y);
    }
    for (const auto& w : j["weights"]) weights.push_back(number(w, "ifs.weights"));
    return {std::move(maps), std::move(weights)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("ifs: ") + e.what());
  }
}

nlohmann::json ifs_to_json(const IfsSystem& sys) {
  nlohmann::json j;
  const int d = sys.dimension();
  j["dimension"] = d;
  j["ratio"] = sys.ratio();
  j["maps"] = nlohmann::json::array();
  for (const auto& m : sys.maps()) {
    nlohmann::json jm;
    std::vector<double> rot, tr;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) rot.push_back(m.rotation()(r, c));
    for (int c = 0; c < d; ++c) tr.push_back(m.translation()(c));
    jm["rotation"] = rot;
    jm["translation"] = tr;
    j["maps"].push_back(jm);
  }
  j["weights"] = sys.weights();
  return j;
}

IfsSystem load_ifs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open IFS file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("IFS file " + path + ": " + e.what());
  }
  return ifs_from_json(j);
}

IfsSystem resolve_system(const std::string& name) {
  if (name.rfind("cantor:", 0) == 0) {
    const std::string tail = name.substr(7);
    int d = 0;
    try {
      std::size_t used = 0;
      d = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument(tail);
    } catch (const std::exception&) {
      throw ConfigError("bad builtin system name: " + name);
    }
    if (d < 1 || d > 8) throw ConfigError("cantor dimension must be in [1, 8]: " + name);
    return cantor_product(d);
  }
  return load_ifs_file(name);
}

}  // namespace khl
