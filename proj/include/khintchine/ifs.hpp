#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "khintchine/bigfloat.hpp"
#include "khintchine/random.hpp"

namespace khl {

using Vec = Eigen::RowVectorXd;  // points are row vectors: phi(x) = ratio * x * O + y
using Mat = Eigen::MatrixXd;

// x -> ratio * x * rotation + translation, with rotation orthogonal.
// Any positive ratio is accepted here; contraction is enforced where it
// matters (IfsSystem, similarity_to_group).
class SimilarityMap {
 public:
  SimilarityMap(double ratio, Mat rotation, Vec translation);
  static SimilarityMap identity(int d);

  int dimension() const { return static_cast<int>(translation_.size()); }
  double ratio() const { return ratio_; }
  const Mat& rotation() const { return rotation_; }
  const Vec& translation() const { return translation_; }

  Vec operator()(const Vec& x) const;
  Vec fixed_point() const;  // requires ratio != 1

 private:
  double ratio_;
  Mat rotation_;
  Vec translation_;
};

// map1 after map2.
SimilarityMap compose(const SimilarityMap& map1, const SimilarityMap& map2);

using SymbolWord = std::vector<int>;

// Weighted family of similarities with a common contraction ratio.
class IfsSystem {
 public:
  IfsSystem(std::vector<SimilarityMap> maps, std::vector<double> weights);

  int dimension() const { return maps_.front().dimension(); }
  int size() const { return static_cast<int>(maps_.size()); }
  double ratio() const { return ratio_; }
  const std::vector<SimilarityMap>& maps() const { return maps_; }
  const SimilarityMap& map(int s) const { return maps_.at(static_cast<std::size_t>(s)); }
  const std::vector<double>& weights() const { return weights_; }

  // Coding-map base point: fixed point of the first map.
  const Vec& base_point() const { return base_; }
  // Certified upper bound on the attractor diameter.
  double diameter_estimate() const { return diam_; }
  // Sampling depth at which truncation falls below double resolution.
  int default_depth() const;
  // log|E| / log(1/ratio), the similarity dimension under uniform weights.
  double similarity_dimension() const;

  void validate_word(const SymbolWord& w) const;

 private:
  std::vector<SimilarityMap> maps_;
  std::vector<double> weights_;
  double ratio_;
  Vec base_;
  double diam_;
};

// Cantor set of dimension d: maps (x + v)/3, v in {0,2}^d, uniform weights.
// Symbol s has digit 2 in coordinate i iff bit i of s is set.
IfsSystem cantor_product(int d);

struct CodingPoint {
  Vec point;
  double error_bound;
};

// phi_{w_1} o ... o phi_{w_n}(base).
CodingPoint coding_point(const IfsSystem& sys, const SymbolWord& word, const Vec& base);
CodingPoint coding_point(const IfsSystem& sys, const SymbolWord& word);

// Same composition carried out at `bits` of precision. The maps' double
// parameters are taken as exact.
std::vector<BigFloat> coding_point_mp(const IfsSystem& sys, std::span<const int> word, mpfr_prec_t bits);

// i.i.d. symbols drawn by weight.
class SymbolStream {
 public:
  SymbolStream(const IfsSystem& sys, std::uint64_t seed);
  int next();
  SymbolWord take(int n);

 private:
  std::vector<double> cdf_;
  Rng rng_;
};

std::vector<SymbolWord> sample_words(const IfsSystem& sys, int depth, std::uint64_t seed, int count);
std::vector<Vec> sample_fractal(const IfsSystem& sys, int depth, std::uint64_t seed, int count);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct HypothesisReport {
  Verdict common_ratio;
  Verdict open_set;
  Verdict irreducible;
  std::vector<std::string> notes;
};

// Checks on a bare list of maps, so that mixed ratios can be reported.
HypothesisReport check_hypotheses(std::span<const SimilarityMap> maps, int depth);
HypothesisReport check_hypotheses(const IfsSystem& sys, int depth);

// JSON description: {dimension, ratio, maps: [{rotation, translation}], weights}.
IfsSystem ifs_from_json(const nlohmann::json& j);
nlohmann::json ifs_to_json(const IfsSystem& sys);
IfsSystem load_ifs_file(const std::string& path);
// "cantor:d" or a path to a JSON description.
IfsSystem resolve_system(const std::string& name);

}  // namespace khl
