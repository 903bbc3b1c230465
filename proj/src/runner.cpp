#include "khintchine/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "khintchine/approx.hpp"
#include "khintchine/constants.hpp"
#include "khintchine/dani.hpp"
#include "khintchine/errors.hpp"
#include "khintchine/excursions.hpp"
#include "khintchine/ifs.hpp"
#include "khintchine/orbit.hpp"
#include "khintchine/parallel.hpp"
#include "khintchine/random.hpp"

namespace khl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class PType { integer, number, string, object, number_list };

struct ParamSpec {
  const char* key;
  PType type;
  json def;  // null: optional, resolved at run time
  double min = -HUGE_VAL;
  double max = HUGE_VAL;
  bool open = false;  // exclusive limits
};

const json kPsiDirichlet = {{"family", "power_log"}, {"c", 1.0}, {"a", 1.0}};
const json kPsiConvergent = {{"family", "power_log"}, {"c", 1.0}, {"a", 1.5}};

const std::map<std::string, std::vector<ParamSpec>>& schemas() {
  static const std::map<std::string, std::vector<ParamSpec>> s = {
      {"simulate",
       {{"flow", PType::string, "walk"},
        {"walks", PType::integer, 4, 1},
        {"steps", PType::integer, 1000, 1},
        {"x", PType::string, "random"}}},
      {"excursions",
       {{"level", PType::number, 3.0, 0.0, HUGE_VAL, true},
        {"orbits", PType::integer, 10, 0},
        {"n_max", PType::integer, 2000, 1},
        {"grid_refine", PType::integer, 8, 1},
        {"walks", PType::integer, 200, 0},
        {"steps", PType::integer, 5000, 1},
        {"m", PType::integer, 12, 1},
        {"delta", PType::number, nullptr, 0.0, HUGE_VAL, true},
        {"eps", PType::number, 0.5, 0.0, 1.0, true},
        {"log_cc", PType::number, 0.0},
        {"varpi", PType::number, nullptr, 0.0, HUGE_VAL, true}}},
      {"dani",
       {{"psi", PType::object, kPsiConvergent},
        {"d", PType::integer, nullptr, 1},
        {"alpha", PType::number, nullptr, 0.0, HUGE_VAL, true},
        {"t_max", PType::number, 20.0},
        {"t_points", PType::integer, 201, 2},
        {"grid", PType::number_list, json::array({5.0, 10.0, 20.0, 40.0})}}},
      {"approx",
       {{"x", PType::string, "golden"},
        {"psi", PType::object, kPsiDirichlet},
        {"q_max", PType::integer, 10000, 1},
        {"tol", PType::number, 1e-6, 0.0, HUGE_VAL, true},
        {"t_lo", PType::number, 0.0},
        {"t_hi", PType::number, 0.0},
        {"dt", PType::number, 0.01, 0.0, HUGE_VAL, true}}},
      {"survey",
       {{"psi", PType::object, kPsiConvergent},
        {"samples", PType::integer, 1000, 0},
        {"q_max", PType::integer, 10000, 1},
        {"depth", PType::integer, 0, 0},
        {"alpha", PType::number, nullptr, 0.0, HUGE_VAL, true}}},
      {"constants",
       {{"l_max", PType::integer, nullptr, 1},
        {"n_min", PType::integer, 2, 0},
        {"n_max", PType::integer, 8, 0},
        {"samples", PType::integer, 200000, 1},
        {"budget", PType::integer, 200, 1}}},
      {"report", {}},
  };
  return s;
}

json check_param(const std::string& command, const ParamSpec& spec, const json& v) {
  const std::string where = "parameter '" + std::string(spec.key) + "' of " + command;
  if (v.is_null() && spec.def.is_null()) return v;
  switch (spec.type) {
    case PType::integer:
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      break;
    case PType::number:
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      break;
    case PType::string:
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v;
    case PType::object:
      if (!v.is_object()) throw ConfigError(where + " must be an object");
      return v;
    case PType::number_list:
      if (!v.is_array() || v.empty() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
        throw ConfigError(where + " must be a nonempty list of numbers");
      return v;
  }
  const double x = v.get<double>();
  const bool inside = spec.open ? x > spec.min && x < spec.max : x >= spec.min && x <= spec.max;
  if (!std::isfinite(x) || !inside) throw ConfigError(where + " is out of range");
  return v;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Csv {
  std::string text;
  explicit Csv(const std::vector<std::string>& header) { line(header); }
  void line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text.push_back(',');
      text += fields[i];
    }
    text.push_back('\n');
  }
};

std::string num(double v) { return format_number(v); }
std::string num(long v) { return std::to_string(v); }
std::string num(long long v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  json verdicts = json::object();
};

double step_time(double kappa, int d) { return -d * std::log(kappa) / (d + 1); }

// A point of the attractor accurate to 2^-bits.
std::vector<BigFloat> fractal_point(const IfsSystem& sys, std::uint64_t seed, mpfr_prec_t bits) {
  const auto word = SymbolStream(sys, seed).take(coding_depth_for_bits(bits, sys.ratio()));
  return coding_point_mp(sys, word, bits);
}

double resolve_alpha(const json& p, const IfsSystem& sys) {
  return p.at("alpha").is_null() ? sys.similarity_dimension() : p.at("alpha").get<double>();
}

Outputs run_simulate(const ExperimentConfig& c, const json& p, const IfsSystem& sys) {
  const std::string flow = p.at("flow");
  if (flow != "walk" && flow != "diagonal") throw ConfigError("parameter 'flow' of simulate must be walk or diagonal");
  const int walks = p.at("walks"), steps = p.at("steps");
  const int d = sys.dimension();
  const double kappa = sys.ratio(), dt = step_time(kappa, d);
  const std::string xs = p.at("x");
  std::optional<ApproxPoint> fixed;
  if (xs != "random") {
    fixed = ApproxPoint::parse(xs);
    if (fixed->dimension() != d) throw ConfigError("parameter 'x' of simulate has the wrong dimension");
  }
  const auto heights = parallel_map(std::size_t(walks), c.workers, [&](std::size_t w) {
    Rng rng(task_seed(c.seed, w));
    if (flow == "walk") {
      Vec z(d);
      for (int j = 0; j < d; ++j) z(j) = rng.uniform();
      return walk_heights(sys, z, steps, rng.bits());
    }
    const mpfr_prec_t bits = diagonal_bits(dt * (steps + 1), d);
    const auto x = fixed ? fixed->to_big(bits) : fractal_point(sys, rng.bits(), bits);
    DiagonalOrbit orbit(x, step_time_mp(kappa, d, bits));
    std::vector<double> h;
    for (int k = 0; k < steps; ++k) {
      orbit.advance();
      h.push_back(orbit.height());
    }
    return h;
  });
  Csv csv({"walk", "step", "time", "height"});
  double mx = -HUGE_VAL, sum = 0;
  for (std::size_t w = 0; w < heights.size(); ++w)
    for (std::size_t k = 0; k < heights[w].size(); ++k) {
      csv.line({num(long(w)), num(long(k + 1)), num(dt * double(k + 1)), num(heights[w][k])});
      mx = std::max(mx, heights[w][k]);
      sum += heights[w][k];
    }
  Outputs out;
  out.files.push_back({"trajectory.csv", csv.text});
  out.verdicts = {{"flow", flow},
                  {"walks", walks},
                  {"steps", steps},
                  {"max_height", mx},
                  {"mean_height", sum / double(walks) / double(steps)}};
  return out;
}

Outputs run_excursions(const ExperimentConfig& c, const json& p, const IfsSystem& sys) {
  const int d = sys.dimension();
  const double kappa = sys.ratio();
  const CompactWindow window(p.at("level").get<double>());
  const int orbits = p.at("orbits"), walks = p.at("walks"), steps = p.at("steps"), m = p.at("m");
  const long n_max = p.at("n_max");
  const int refine = p.at("grid_refine");

  const mpfr_prec_t bits = diagonal_bits(step_time(kappa, d) * double(n_max + 1), d);
  const auto runs = parallel_map(std::size_t(orbits), c.workers, [&](std::size_t o) {
    return diagonal_excursions(fractal_point(sys, task_seed(c.seed, o), bits), kappa, window, n_max, refine);
  });
  Csv exc({"orbit", "index", "start_step", "end_step", "length", "peak", "peak_slack", "bound", "violation"});
  long violations = 0, records = 0, censored = 0;
  for (std::size_t o = 0; o < runs.size(); ++o) {
    censored += runs[o].censored;
    const auto bad = growth_bound_check(runs[o].records, window, kappa, d);
    violations += long(bad.size());
    for (const auto& r : runs[o].records) {
      ++records;
      const double bound = growth_bound(r.length, window, kappa, d);
      const bool v = r.peak > bound + r.peak_slack + 1e-6;
      exc.line({num(long(o)), num(r.index), num(r.start_step), num(r.end_step), num(r.length), num(r.peak),
                num(r.peak_slack), num(bound), v ? "1" : "0"});
    }
  }
  Outputs out;
  out.files.push_back({"excursions.csv", exc.text});
  out.verdicts = {{"orbits", orbits},
                  {"excursions", records},
                  {"censored_orbits", censored},
                  {"growth_bound_violations", violations}};

  if (walks > 0) {
    double delta;
    if (p.at("delta").is_null()) {
      double varpi;
      if (!p.at("varpi").is_null())
        varpi = p.at("varpi");
      else if (is_cantor_product(sys))
        varpi = varpi_of(cantor_alphas(d), d);
      else
        throw ConfigError("parameter 'varpi' of excursions is required for systems other than the Cantor product");
      const auto budget = rate_budget(kappa, d, varpi, p.at("log_cc"), p.at("eps"), m);
      delta = budget.delta;
      out.verdicts["budget_inequality_holds"] = budget.inequality_holds;
      out.verdicts["budget_m_threshold"] = budget.m_threshold;
    } else {
      delta = p.at("delta");
    }
    const auto tr = tail_report(sys, window, walks, steps, task_seed(c.seed, 0x7a115ULL), m, delta, c.workers);
    Csv tails({"threshold", "empirical_tail", "tail_count", "chebyshev_bound"});
    bool dominated = true;
    for (std::size_t i = 0; i < tr.thresholds.size(); ++i) {
      tails.line({num(tr.thresholds[i]), num(tr.empirical_tail[i]), num(tr.tail_counts[i]), num(tr.chebyshev_bound[i])});
      dominated = dominated && tr.empirical_tail[i] <= tr.chebyshev_bound[i];
    }
    out.files.push_back({"tails.csv", tails.text});
    out.verdicts["delta"] = delta;
    out.verdicts["m"] = m;
    out.verdicts["tail_samples"] = tr.samples;
    out.verdicts["tail_censored"] = tr.censored;
    out.verdicts["log_theta_hat"] = tr.log_theta_hat;
    out.verdicts["tail_dominated"] = dominated;
    out.verdicts["fitted_rate"] = tr.fitted_rate;
    out.verdicts["fitted_rate_lo"] = tr.fitted_rate_lo;
    out.verdicts["fitted_rate_hi"] = tr.fitted_rate_hi;
    out.verdicts["fitted_rate_positive"] = tr.fitted_rate_lo > 0;
  }
  return out;
}

Outputs run_dani(const ExperimentConfig&, const json& p, const IfsSystem& sys) {
  const auto psi = approx_function_from_json(p.at("psi"));
  const int d = p.at("d").is_null() ? sys.dimension() : p.at("d").get<int>();
  const double alpha = resolve_alpha(p, sys);
  const auto rate = RateFunction::from_psi(psi, d);
  const double t0 = rate.t_start(), t_max = p.at("t_max");
  if (!(t_max > t0)) throw ConfigError("parameter 't_max' of dani must exceed t0 = " + format_number(t0));
  const int n = p.at("t_points");
  Csv rc({"t", "r", "x", "psi_x", "psi_roundtrip"});
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t_max - t0) * i / (n - 1);
    const double r = rate(t), x = std::exp(t - r);
    const double px = psi(x), back = psi_from_r(rate, d, x);
    worst = std::max(worst, std::fabs(back - px) / px);
    rc.line({num(t), num(r), num(x), num(px), num(back)});
  }
  const auto eq = equivalence_check(psi, d, alpha, p.at("grid").get<std::vector<double>>());
  Csv ec({"T", "X", "i_psi", "i_r", "identity_residual", "ratio"});
  for (const auto& row : eq.rows)
    ec.line({num(row.T), num(row.X), num(row.i_psi), num(row.i_r), num(row.identity_residual), num(row.ratio)});
  const auto mono = check_rate_monotonicity(rate, d, t0, t_max);
  const auto asym = rate.asymptotics();
  Outputs out;
  out.files.push_back({"rate.csv", rc.text});
  out.files.push_back({"equivalence.csv", ec.text});
  out.verdicts = {{"psi", psi.describe()},
                  {"d", d},
                  {"alpha", alpha},
                  {"gamma", eq.gamma},
                  {"t0", t0},
                  {"rate_slope", asym.slope},
                  {"rate_log_coef", asym.log_coef},
                  {"max_roundtrip_error", worst},
                  {"t_minus_r_increasing", mono.t_minus_r_increasing},
                  {"t_over_d_plus_r_nondecreasing", mono.t_over_d_plus_r_nondecreasing},
                  {"psi_series", to_string(eq.psi_side.verdict)},
                  {"rate_series", to_string(eq.rate_side.verdict)},
                  {"verdicts_agree", eq.verdicts_agree},
                  {"max_identity_residual", eq.max_identity_residual}};
  if (eq.q0) {
    out.verdicts["q0_psi_integral_converges"] = eq.q0->psi_integral_converges;
    out.verdicts["q0_rate_integral_converges"] = eq.q0->rate_integral_converges;
  }
  return out;
}

Outputs run_approx(const ExperimentConfig&, const json& p, const IfsSystem&) {
  const auto x = ApproxPoint::parse(p.at("x").get<std::string>());
  const auto psi = approx_function_from_json(p.at("psi"));
  const long long q_max = p.at("q_max");
  const int d = x.dimension();
  std::vector<std::string> header{"q"};
  for (int j = 1; j <= d; ++j) header.push_back("p" + std::to_string(j));
  for (const char* h : {"error", "margin", "witness_time"}) header.push_back(h);
  Csv hc(header);
  const auto hits = scan_hits(x, psi, q_max);
  for (const auto& h : hits) {
    std::vector<std::string> f{num(h.q)};
    for (const long long v : h.p) f.push_back(num(v));
    f.push_back(num(h.error));
    f.push_back(num(h.margin));
    f.push_back(num(h.witness_time));
    hc.line(f);
  }
  const auto cc = dani_cross_check(x, psi, d, q_max, p.at("tol"), p.at("t_lo"), p.at("t_hi"), p.at("dt"));
  Csv xc({"t"});
  for (const double t : cc.crossing_times) xc.line({num(t)});
  Outputs out;
  out.files.push_back({"hits.csv", hc.text});
  out.files.push_back({"crossings.csv", xc.text});
  out.verdicts = {{"x", x.describe()},
                  {"psi", psi.describe()},
                  {"q_max", q_max},
                  {"hits", cc.hits},
                  {"checked", cc.checked},
                  {"degenerate", cc.degenerate},
                  {"out_of_domain", cc.out_of_domain},
                  {"violations", cc.violations},
                  {"worst_gap", cc.worst_gap},
                  {"converse_times", cc.converse_times},
                  {"converse_crossings", cc.converse_crossings},
                  {"converse_violations", cc.converse_violations}};
  return out;
}

Outputs run_survey(const ExperimentConfig& c, const json& p, const IfsSystem& sys) {
  const auto psi = approx_function_from_json(p.at("psi"));
  const int depth = p.at("depth").get<int>() > 0 ? p.at("depth").get<int>() : sys.default_depth();
  const auto table = survey(sys, psi, p.at("samples").get<long>(), p.at("q_max").get<long long>(), depth, c.seed,
                            resolve_alpha(p, sys), c.workers);
  Csv sc({"k", "q_lo", "q_hi", "points_with_hits", "uncertain", "fraction"});
  bool nonincreasing = true, all_one = true;
  for (std::size_t i = 0; i < table.bands.size(); ++i) {
    const auto& b = table.bands[i];
    sc.line({num(b.k), num(b.q_lo), num(b.q_hi), num(b.points_with_hits), num(b.uncertain), num(b.fraction)});
    if (i > 0 && b.k > 5 && b.fraction > table.bands[i - 1].fraction) nonincreasing = false;
    all_one = all_one && b.fraction == 1.0;
  }
  Outputs out;
  out.files.push_back({"survey.csv", sc.text});
  out.verdicts = {{"psi", psi.describe()},
                  {"points", table.points},
                  {"depth", depth},
                  {"series", to_string(table.series.verdict)},
                  {"series_exponent", table.series.exponent},
                  {"bands", table.bands.size()},
                  {"nonincreasing_from_k5", nonincreasing},
                  {"all_fractions_one", all_one && !table.bands.empty()}};
  if (!table.bands.empty()) out.verdicts["top_band_fraction"] = table.bands.back().fraction;
  return out;
}

Outputs run_constants(const ExperimentConfig& c, const json& p, const IfsSystem& sys) {
  const int d = sys.dimension();
  const int l_max = p.at("l_max").is_null() ? d : p.at("l_max").get<int>();
  if (l_max > d) throw ConfigError("parameter 'l_max' of constants exceeds the dimension");
  const int n_min = p.at("n_min"), n_max = p.at("n_max");
  if (n_max < n_min) throw ConfigError("parameter 'n_max' of constants is below n_min");
  const bool cantor = is_cantor_product(sys);
  Csv cc({"d", "l", "n", "lower", "upper", "ratio", "confidence"});
  json certs = json::array();
  std::vector<double> slopes;
  json per_l = json::array();
  for (int l = 1; l <= l_max; ++l) {
    const auto est = alpha_estimate(sys, l, n_min, n_max, p.at("budget"), task_seed(c.seed, std::uint64_t(l)),
                                    p.at("samples"), c.workers);
    slopes.push_back(est.slope);
    per_l.push_back({{"l", l}, {"slope", est.slope}, {"slope_se", est.slope_se}, {"evaluations", est.evaluations}});
    for (const auto& r : est.rows) {
      cc.line({num(d), num(l), num(r.n), num(r.mass), num(r.certified_upper), num(r.ratio),
               num(0.5 * (r.ratio_hi - r.ratio_lo))});
      if (!cantor || l != 1 || r.best_w.empty() || r.n < 1) continue;
      json entry = {{"n", r.n}, {"coeffs", r.best_w}, {"rhs", r.best_b}};
      try {
        const Vec w = Eigen::Map<const Vec>(r.best_w.data(), long(r.best_w.size()));
        const auto cert = cover_hyperplane(w, r.best_b, r.n, 1L << 20);
        std::vector<std::string> words;
        for (long i = 0; i < cert.count; ++i) words.push_back(cert.word_string(i));
        entry["count"] = cert.count;
        entry["count_bound"] = cert.count_bound();
        entry["measure_upper_bound"] = measure_upper_bound(cert, d);
        entry["words"] = words;
      } catch (const Error& e) {
        entry["error"] = e.what();
      }
      certs.push_back(entry);
    }
  }
  Outputs out;
  out.files.push_back({"constants.csv", cc.text});
  if (cantor) out.files.push_back({"certificates.json", certs.dump(1) + "\n"});
  out.verdicts = {{"d", d}, {"cantor", cantor}, {"alpha", per_l}};
  if (l_max == d) out.verdicts["varpi_estimate"] = varpi_of(slopes, d);
  if (cantor) out.verdicts["varpi_exact"] = varpi_of(cantor_alphas(d), d);
  return out;
}

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c = {"simulate", "excursions", "dani", "approx", "survey", "constants", "report"};
  return c;
}

json resolved_params(const ExperimentConfig& c) {
  const auto it = schemas().find(c.command);
  if (it == schemas().end()) throw ConfigError("unknown command: " + c.command);
  if (!c.params.is_object()) throw ConfigError("params must be an object");
  json out = json::object();
  for (const auto& spec : it->second) out[spec.key] = spec.def;
  for (auto p = c.params.begin(); p != c.params.end(); ++p) {
    const auto s = std::find_if(it->second.begin(), it->second.end(), [&](const ParamSpec& sp) { return p.key() == sp.key; });
    if (s == it->second.end()) throw ConfigError("unknown parameter for " + c.command + ": " + p.key());
    out[p.key()] = check_param(c.command, *s, p.value());
  }
  return out;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> top = {"command", "system", "params", "seed", "workers", "output_dir", "runs"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(top.begin(), top.end(), it.key()) == top.end()) throw ConfigError("unknown config key: " + it.key());
  ExperimentConfig c;
  if (!j.contains("command") || !j["command"].is_string()) throw ConfigError("config key 'command' must be a string");
  c.command = j["command"];
  if (std::find(known_commands().begin(), known_commands().end(), c.command) == known_commands().end())
    throw ConfigError("unknown command: " + c.command);
  if (j.contains("system")) {
    if (!j["system"].is_string()) throw ConfigError("config key 'system' must be a string");
    c.system = j["system"];
  }
  if (j.contains("params")) c.params = j["params"];
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ConfigError("config key 'seed' must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.workers = default_workers();
  if (j.contains("workers")) {
    if (!j["workers"].is_number_integer() || j["workers"].get<long long>() < 1 || j["workers"].get<long long>() > 1024)
      throw ConfigError("config key 'workers' must be an integer in [1, 1024]");
    c.workers = j["workers"];
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string() || j["output_dir"].get<std::string>().empty())
      throw ConfigError("config key 'output_dir' must be a nonempty string");
    c.output_dir = j["output_dir"];
  }
  if (j.contains("runs")) {
    if (!j["runs"].is_array()) throw ConfigError("config key 'runs' must be a list of directories");
    for (const auto& r : j["runs"]) {
      if (!r.is_string()) throw ConfigError("config key 'runs' must be a list of directories");
      c.run_dirs.push_back(r);
    }
  }
  resolved_params(c);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j = {{"command", c.command}, {"system", c.system},         {"params", c.params},
            {"seed", c.seed},       {"workers", c.workers},       {"output_dir", c.output_dir}};
  if (!c.run_dirs.empty()) j["runs"] = c.run_dirs;
  return j;
}

int default_workers() {
  const char* env = std::getenv("KHINTCHINE_LAB_WORKERS");
  if (!env || !*env) return 1;
  int w = 0;
  const auto res = std::from_chars(env, env + std::char_traits<char>::length(env), w);
  if (res.ec != std::errc() || *res.ptr != '\0' || w < 1 || w > 1024)
    throw ConfigError(std::string("KHINTCHINE_LAB_WORKERS must be an integer in [1, 1024], got '") + env + "'");
  return w;
}

json RunManifest::to_json() const {
  return {{"config", config},     {"tool", "khintchine-lab"}, {"tool_version", tool_version}, {"started", started},
          {"finished", finished}, {"outputs", digests},       {"verdicts", verdicts}};
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 15]);
  }
  return s;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

RunManifest run(const ExperimentConfig& config) {
  RunManifest man;
  man.tool_version = kToolVersion;
  man.started = iso_now();
  const json params = resolved_params(config);
  ExperimentConfig echo = config;
  echo.params = params;
  man.config = config_to_json(echo);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error("cannot create " + config.output_dir + ": " + ec.message());

  Outputs out;
  if (config.command == "report") {
    out.files.push_back({"summary.md", report(config.run_dirs)});
    out.verdicts = {{"runs", config.run_dirs.size()}};
  } else {
    const IfsSystem sys = resolve_system(config.system);
    if (config.command == "simulate")
      out = run_simulate(config, params, sys);
    else if (config.command == "excursions")
      out = run_excursions(config, params, sys);
    else if (config.command == "dani")
      out = run_dani(config, params, sys);
    else if (config.command == "approx")
      out = run_approx(config, params, sys);
    else if (config.command == "survey")
      out = run_survey(config, params, sys);
    else
      out = run_constants(config, params, sys);
  }
  for (const auto& [name, content] : out.files) {
    write_file_atomic((fs::path(config.output_dir) / name).string(), content);
    man.digests[name] = sha256_hex(content);
  }
  man.verdicts = out.verdicts;
  man.finished = iso_now();
  write_file_atomic((fs::path(config.output_dir) / "manifest.json").string(), man.to_json().dump(2) + "\n");
  return man;
}

std::string report(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) return "";
  struct Run {
    std::string dir;
    json manifest;
  };
  std::map<std::string, std::vector<Run>> by_command;
  for (const auto& dir : run_dirs) {
    const fs::path mpath = fs::path(dir) / "manifest.json";
    std::ifstream f(mpath);
    if (!f) throw NoData("missing manifest: " + mpath.string());
    json m;
    try {
      f >> m;
    } catch (const json::exception& e) {
      throw NoData("unreadable manifest " + mpath.string() + ": " + e.what());
    }
    const std::string cmd = m.at("config").at("command");
    by_command[cmd].push_back({dir, m});
  }
  std::ostringstream os;
  os << "# khintchine-lab summary\n";
  for (const auto& cmd : known_commands()) {
    const auto it = by_command.find(cmd);
    if (it == by_command.end()) continue;
    os << "\n## " << cmd << "\n";
    for (const auto& r : it->second) {
      const auto& m = r.manifest;
      const std::string src = (fs::path(r.dir) / "manifest.json").string();
      os << "\n### " << r.dir << "\n\n";
      os << "System `" << m["config"].value("system", "") << "`, seed " << m["config"].value("seed", 0ULL)
         << ". Source: `" << src << "`.\n\n";
      if (cmd == "excursions" && m["verdicts"].contains("growth_bound_violations"))
        os << "Growth-bound violations: " << m["verdicts"]["growth_bound_violations"].dump() << "\n\n";
      for (auto v = m["verdicts"].begin(); v != m["verdicts"].end(); ++v)
        os << "- " << v.key() << ": " << v.value().dump() << " (`verdicts." << v.key() << "`)\n";
      if (!m["outputs"].empty()) {
        os << "\nFiles:\n\n";
        for (auto o = m["outputs"].begin(); o != m["outputs"].end(); ++o)
          os << "- `" << (fs::path(r.dir) / o.key()).string() << "` sha256 " << o.value().get<std::string>() << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace khl
