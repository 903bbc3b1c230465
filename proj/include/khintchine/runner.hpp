#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

namespace khl {

inline constexpr const char* kToolVersion = "1.0.0";

// One experiment. `params` holds the command-specific block; every key is
// checked against the command's schema before anything runs.
struct ExperimentConfig {
  std::string command;
  std::string system = "cantor:1";
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "khl-out";
  std::vector<std::string> run_dirs;  // report only
};

const std::vector<std::string>& known_commands();

// Parses and validates a config document. Unknown keys, wrong types and
// out-of-range values throw ConfigError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
// Fills defaults for every parameter of the command and validates it.
nlohmann::json resolved_params(const ExperimentConfig& c);

// KHINTCHINE_LAB_WORKERS if set, else 1.
int default_workers();

struct RunManifest {
  nlohmann::json config;
  std::string tool_version;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> digests;  // output file -> SHA-256
  nlohmann::json verdicts;

  nlohmann::json to_json() const;
};

// Runs the command, writes its data files into output_dir, and writes
// manifest.json last (atomically).
RunManifest run(const ExperimentConfig& config);

// Markdown summary of the runs in `run_dirs`, one section per run.
std::string report(const std::vector<std::string>& run_dirs);

// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);
std::string sha256_hex(const std::string& bytes);
// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace khl
