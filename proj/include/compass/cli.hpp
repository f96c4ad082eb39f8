#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "compass/engine.hpp"

namespace compass {

/// Every problem found in a configuration, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct GraphSpec {
  GraphKind kind = GraphKind::path;
  std::size_t size = 0;
  std::vector<std::size_t> dims;
  std::string edge_file;
};

struct InitConfig {
  enum class Kind { uniform, constant, explicit_values } kind = Kind::uniform;
  double value = 0.0;
  std::vector<double> values;
};

struct ScenarioSpec {
  std::string name;  ///< butterfly, signflip or deffuant-vs-compass
  std::size_t n = 10;
  double c = 0.5;
  std::size_t replicates = 200;
};

struct RunConfig {
  std::optional<GraphSpec> graph;
  OpinionSpace space = OpinionSpace::circle;
  InitConfig init;
  ModelParams params;
  std::uint64_t seed = 0;
  StopRule stop;
  std::vector<double> probes;
  std::size_t replicates = 1;
  double tol = 1e-6;
  std::filesystem::path out_dir = ".";
  std::string prefix = "compass";
  std::optional<ScenarioSpec> scenario;
};

/// Strict parse: unknown keys, wrong types and out-of-range values are all
/// collected and thrown together as ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a JSON file; unreadable files raise ConfigError too.
RunConfig parse_config_file(const std::filesystem::path& path);
nlohmann::json load_json_file(const std::filesystem::path& path);

/// Sets a dotted key (e.g. "graph.size") to a value given as text. Numbers,
/// booleans, null and JSON literals are parsed; anything else stays a string.
void set_dotted(nlohmann::json& doc, const std::string& dotted_key, const std::string& text);

/// Seed of replicate i: SplitMix64 applied to master + (i + 1) * golden gamma.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

std::shared_ptr<const Graph> build_graph(const GraphSpec& spec);

/// Worker count from COMPASS_WORKERS, else the hardware concurrency.
unsigned worker_count();

inline constexpr int exit_ok = 0;
inline constexpr int exit_assertion = 1;
inline constexpr int exit_config = 2;

/// Runs every replicate (or the scenario) and writes the per-replicate CSV
/// files and the JSON summary. Returns one of the exit codes above;
/// messages go to `err`.
int run_batch(const RunConfig& config, std::ostream& err);

/// Output paths used by run_batch.
std::filesystem::path replicate_csv_path(const RunConfig& config, std::size_t index);
std::filesystem::path summary_path(const RunConfig& config);

}  // namespace compass
