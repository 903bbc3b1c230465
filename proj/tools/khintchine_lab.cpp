// khintchine-lab: command-line front end for the experiment runner.
#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>

#include "khintchine/errors.hpp"
#include "khintchine/runner.hpp"

namespace {

using nlohmann::json;

enum class Kind { integer, number, string, psi, number_list };

struct Flag {
  const char* key;
  Kind kind;
  const char* help;
};

const std::map<std::string, std::vector<Flag>>& command_flags() {
  static const std::map<std::string, std::vector<Flag>> f = {
      {"simulate",
       {{"flow", Kind::string, "walk or diagonal"},
        {"walks", Kind::integer, "number of trajectories"},
        {"steps", Kind::integer, "steps per trajectory"},
        {"x", Kind::string, "start point for the diagonal flow, or 'random'"}}},
      {"excursions",
       {{"level", Kind::number, "window level L (heights <= L)"},
        {"orbits", Kind::integer, "diagonal orbits for the growth-bound check"},
        {"n_max", Kind::integer, "steps per diagonal orbit"},
        {"grid_refine", Kind::integer, "sub-steps per step for peak certification"},
        {"walks", Kind::integer, "random walks for the tail statistics"},
        {"steps", Kind::integer, "steps per random walk"},
        {"m", Kind::integer, "block length m"},
        {"delta", Kind::number, "tail exponent numerator (default: from the rate budget)"},
        {"eps", Kind::number, "rate budget epsilon"},
        {"log_cc", Kind::number, "log of the measure constant"},
        {"varpi", Kind::number, "decay exponent (default: exact for Cantor products)"}}},
      {"dani",
       {{"psi", Kind::psi, "approximation function"},
        {"d", Kind::integer, "dimension (default: the system's)"},
        {"alpha", Kind::number, "series exponent (default: similarity dimension)"},
        {"t_max", Kind::number, "end of the rate table"},
        {"t_points", Kind::integer, "rows of the rate table"},
        {"grid", Kind::number_list, "comma separated T values for the equivalence table"}}},
      {"approx",
       {{"x", Kind::string, "point: comma separated p/q, decimals or 'golden'"},
        {"psi", Kind::psi, "approximation function"},
        {"q_max", Kind::integer, "largest denominator"},
        {"tol", Kind::number, "height tolerance"},
        {"t_lo", Kind::number, "start of the converse scan"},
        {"t_hi", Kind::number, "end of the converse scan (0: log q_max)"},
        {"dt", Kind::number, "converse scan spacing"}}},
      {"survey",
       {{"psi", Kind::psi, "approximation function"},
        {"samples", Kind::integer, "sampled points"},
        {"q_max", Kind::integer, "largest denominator"},
        {"depth", Kind::integer, "coding depth (0: full double resolution)"},
        {"alpha", Kind::number, "series exponent (default: similarity dimension)"}}},
      {"constants",
       {{"l_max", Kind::integer, "largest codimension (default: d)"},
        {"n_min", Kind::integer, "smallest level"},
        {"n_max", Kind::integer, "largest level"},
        {"samples", Kind::integer, "Monte Carlo samples"},
        {"budget", Kind::integer, "search evaluations per codimension"}}},
      {"report", {}},
  };
  return f;
}

std::string flag_name(const char* key) {
  std::string s = key;
  for (char& ch : s)
    if (ch == '_') ch = '-';
  return "--" + s;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw khl::ConfigError("bad number for " + key + ": " + s);
  return v;
}

// JSON text, or "c,a[,b]" for c q^-a log(e + q)^-b.
json parse_psi(const std::string& s) {
  if (!s.empty() && s.front() == '{') {
    try {
      return json::parse(s);
    } catch (const json::exception& e) {
      throw khl::ConfigError(std::string("bad psi JSON: ") + e.what());
    }
  }
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    v.push_back(parse_double("psi", s.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() < 2 || v.size() > 3) throw khl::ConfigError("psi needs 'c,a' or 'c,a,b' or a JSON object");
  json j = {{"family", "power_log"}, {"c", v[0]}, {"a", v[1]}};
  if (v.size() == 3) j["b"] = v[2];
  return j;
}

json convert(const Flag& f, const std::string& s) {
  switch (f.kind) {
    case Kind::integer: {
      long long v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw khl::ConfigError("bad integer for " + flag_name(f.key) + ": " + s);
      return v;
    }
    case Kind::number:
      return parse_double(flag_name(f.key), s);
    case Kind::string:
      return s;
    case Kind::psi:
      return parse_psi(s);
    case Kind::number_list: {
      json a = json::array();
      std::size_t start = 0;
      while (start <= s.size()) {
        const auto comma = s.find(',', start);
        a.push_back(parse_double(flag_name(f.key), s.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return a;
    }
  }
  return nullptr;
}

struct Invocation {
  std::optional<std::string> config, system, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::map<std::string, std::string> values;
  std::vector<std::string> runs;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments on Diophantine approximation on fractals via lattice dynamics", "khintchine-lab"};
  app.set_version_flag("--version", khl::kToolVersion);
  app.require_subcommand(1);

  std::map<std::string, Invocation> inv;
  for (const auto& cmd : khl::known_commands()) {
    auto* sub = app.add_subcommand(cmd);
    auto& v = inv[cmd];
    sub->add_option("--config", v.config, "JSON config file; flags override its values");
    sub->add_option("--seed", v.seed, "master seed");
    sub->add_option("--workers", v.workers, "worker threads (default: KHINTCHINE_LAB_WORKERS or 1)");
    sub->add_option("--out", v.out, "output directory");
    if (cmd == "report") {
      sub->add_option("runs", v.runs, "run directories");
    } else {
      sub->add_option("--system", v.system, "'cantor:d' or a JSON IFS description");
    }
    for (const auto& f : command_flags().at(cmd)) sub->add_option(flag_name(f.key), v.values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "khintchine-lab: " << e.what() << "\n";
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  const Invocation& v = inv.at(cmd);
  try {
    json j = json::object();
    if (v.config) {
      std::ifstream f(*v.config);
      if (!f) throw khl::ConfigError("cannot open config file " + *v.config);
      try {
        j = json::parse(f);
      } catch (const json::parse_error& e) {
        throw khl::ConfigError("config " + *v.config + ": " + e.what());
      }
      if (!j.is_object()) throw khl::ConfigError("config " + *v.config + " must hold a JSON object");
      if (j.contains("command") && j["command"] != cmd)
        throw khl::ConfigError("config command '" + j["command"].dump() + "' does not match '" + cmd + "'");
    }
    j["command"] = cmd;
    if (v.system) j["system"] = *v.system;
    if (v.seed) j["seed"] = *v.seed;
    if (v.workers) j["workers"] = *v.workers;
    if (v.out) j["output_dir"] = *v.out;
    if (!v.runs.empty()) j["runs"] = v.runs;
    if (!j.contains("params")) j["params"] = json::object();
    const auto* sub = app.get_subcommand(cmd);
    for (const auto& f : command_flags().at(cmd))
      if (sub->count(flag_name(f.key)) > 0) j["params"][f.key] = convert(f, v.values.at(f.key));

    const khl::ExperimentConfig config = khl::config_from_json(j);
    if (cmd == "report" && !v.out && !j.contains("output_dir")) {
      std::cout << khl::report(config.run_dirs);
      return 0;
    }
    const auto man = khl::run(config);
    if (cmd == "report") {
      std::cout << khl::report(config.run_dirs);
    } else {
      std::cout << cmd << ": wrote " << man.digests.size() << " file(s) and manifest.json to " << config.output_dir
                << "\n";
    }
    return 0;
  } catch (const khl::ConfigError& e) {
    std::cerr << "khintchine-lab: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "khintchine-lab: " << e.what() << "\n";
    return 1;
  }
}
