#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compass/cli.hpp"

namespace {

using compass::ConfigError;
using nlohmann::json;

void report(const ConfigError& e) {
  std::cerr << "invalid configuration:\n";
  for (const auto& line : e.errors()) std::cerr << "  " << line << "\n";
}

// Top-level keys a scenario override may set; everything else goes into the
// scenario block.
bool top_level(const std::string& key) {
  static const std::vector<std::string> keys = {"mu", "theta", "seed", "tol", "output"};
  const std::string head = key.substr(0, key.find('.'));
  for (const auto& k : keys) {
    if (head == k) return true;
  }
  return false;
}

int run_cmd(const std::string& path) {
  try {
    return compass::run_batch(compass::parse_config_file(path), std::cerr);
  } catch (const ConfigError& e) {
    report(e);
    return compass::exit_config;
  }
}

int scenario_cmd(const std::string& name, const std::vector<std::string>& overrides) {
  try {
    json doc = {{"scenario", {{"name", name}}}, {"output", {{"prefix", name}}}};
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError({"override '" + kv + "' is not key=value"});
      const std::string key = kv.substr(0, eq);
      compass::set_dotted(doc, top_level(key) ? key : "scenario." + key, kv.substr(eq + 1));
    }
    return compass::run_batch(compass::parse_config(doc), std::cerr);
  } catch (const ConfigError& e) {
    report(e);
    return compass::exit_config;
  }
}

int sweep_cmd(const std::string& path, const std::string& param, const std::vector<std::string>& values) {
  try {
    const json base = compass::load_json_file(path);
    std::vector<compass::RunConfig> configs;
    for (const auto& v : values) {
      json doc = base;
      compass::set_dotted(doc, param, v);
      compass::RunConfig cfg = compass::parse_config(doc);
      cfg.prefix += "_" + param + "=" + v;
      configs.push_back(std::move(cfg));
    }
    int worst = compass::exit_ok;
    for (const auto& cfg : configs) {
      const int code = compass::run_batch(cfg, std::cerr);
      if (code == compass::exit_config) return code;
      worst = std::max(worst, code);
    }
    return worst;
  } catch (const ConfigError& e) {
    report(e);
    return compass::exit_config;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compass opinion dynamics simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the replicates described by a JSON config");
  run->add_option("config", config_path, "Config file")->required();

  std::string scenario_name;
  std::vector<std::string> overrides;
  auto* scenario = app.add_subcommand("scenario", "Run a canned scenario");
  scenario->add_option("name", scenario_name, "butterfly, signflip or deffuant-vs-compass")->required();
  scenario->add_option("overrides", overrides, "key=value settings, e.g. n=10 mu=0.25 output.dir=out");

  std::string sweep_config, param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sweep->add_option("config", sweep_config, "Config file")->required();
  sweep->add_option("--param", param, "Dotted config key, e.g. mu or graph.size")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : compass::exit_config;
  }

  if (*run) return run_cmd(config_path);
  if (*scenario) return scenario_cmd(scenario_name, overrides);
  return sweep_cmd(sweep_config, param, values);
}
