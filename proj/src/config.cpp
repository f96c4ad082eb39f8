#include "compass/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace compass {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

// Walks one JSON object, recording problems instead of stopping at the
// first one.
class Checker {
 public:
  Checker(const json& obj, std::string where, std::vector<std::string>& errors)
      : obj_(obj), where_(std::move(where)), errors_(errors) {}

  bool ok_object() {
    if (!obj_.is_object()) {
      fail("must be an object");
      return false;
    }
    return true;
  }

  void allow(std::initializer_list<const char*> keys) {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, _] : obj_.items()) {
      if (!known.count(key)) errors_.push_back(name(key) + ": unknown key");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }
  const json& at(const char* key) const { return obj_.at(key); }

  std::optional<double> number(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_number()) {
      errors_.push_back(name(key) + ": expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> count(const char* key, std::uint64_t min = 0) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      const auto n = v.get<std::uint64_t>();
      if (n < min) {
        errors_.push_back(name(key) + ": must be at least " + std::to_string(min));
        return std::nullopt;
      }
      return n;
    }
    errors_.push_back(name(key) + ": expected a non-negative integer");
    return std::nullopt;
  }

  std::optional<std::string> text(const char* key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_string()) {
      errors_.push_back(name(key) + ": expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  void fail(const std::string& msg) { errors_.push_back((where_.empty() ? "config" : where_) + ": " + msg); }
  void fail(const char* key, const std::string& msg) { errors_.push_back(name(key) + ": " + msg); }
  std::string name(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const json& obj_;
  std::string where_;
  std::vector<std::string>& errors_;
};

std::optional<GraphSpec> parse_graph(const json& j, std::vector<std::string>& errors) {
  Checker c(j, "graph", errors);
  if (!c.ok_object()) return std::nullopt;
  c.allow({"kind", "size", "dims", "edge_file"});
  GraphSpec spec;
  const auto kind = c.text("kind");
  if (!kind) {
    if (!c.has("kind")) c.fail("kind", "missing (path, ring, torus or custom)");
    return std::nullopt;
  }
  if (*kind == "path" || *kind == "ring") {
    spec.kind = *kind == "path" ? GraphKind::path : GraphKind::ring;
    const std::uint64_t min = spec.kind == GraphKind::path ? 2 : 3;
    if (!c.has("size")) {
      c.fail("size", "missing");
      return std::nullopt;
    }
    const auto size = c.count("size", min);
    if (!size) return std::nullopt;
    spec.size = *size;
  } else if (*kind == "torus") {
    spec.kind = GraphKind::torus;
    if (!c.has("dims") || !c.at("dims").is_array() || c.at("dims").empty()) {
      c.fail("dims", "torus needs a non-empty list of side lengths");
      return std::nullopt;
    }
    for (const json& d : c.at("dims")) {
      if (!d.is_number_integer() || d.get<std::int64_t>() < 3) {
        c.fail("dims", "side lengths must be integers >= 3");
        return std::nullopt;
      }
      spec.dims.push_back(d.get<std::size_t>());
    }
  } else if (*kind == "custom") {
    spec.kind = GraphKind::custom;
    const auto file = c.text("edge_file");
    if (!file) {
      if (!c.has("edge_file")) c.fail("edge_file", "missing for a custom graph");
      return std::nullopt;
    }
    spec.edge_file = *file;
  } else {
    c.fail("kind", "'" + *kind + "' is not one of path, ring, torus, custom");
    return std::nullopt;
  }
  return spec;
}

InitConfig parse_init(const json& j, std::vector<std::string>& errors) {
  InitConfig init;
  Checker c(j, "init", errors);
  if (!c.ok_object()) return init;
  c.allow({"kind", "value", "values"});
  const std::string kind = c.text("kind").value_or("uniform");
  if (kind == "uniform") {
    init.kind = InitConfig::Kind::uniform;
  } else if (kind == "constant") {
    init.kind = InitConfig::Kind::constant;
    if (const auto v = c.number("value")) {
      init.value = *v;
    } else if (!c.has("value")) {
      c.fail("value", "missing for a constant init");
    }
  } else if (kind == "explicit") {
    init.kind = InitConfig::Kind::explicit_values;
    if (!c.has("values") || !c.at("values").is_array()) {
      c.fail("values", "explicit init needs a list of numbers");
    } else {
      for (const json& v : c.at("values")) {
        if (!v.is_number()) {
          c.fail("values", "entries must be numbers");
          break;
        }
        init.values.push_back(v.get<double>());
      }
    }
  } else {
    c.fail("kind", "'" + kind + "' is not one of uniform, constant, explicit");
  }
  return init;
}

std::vector<double> parse_probes(const json& j, std::vector<std::string>& errors) {
  std::vector<double> probes;
  if (j.is_array()) {
    for (const json& p : j) {
      if (!p.is_number() || !(p.get<double>() >= 0.0)) {
        errors.push_back("probes: entries must be non-negative numbers");
        return {};
      }
      probes.push_back(p.get<double>());
    }
    return probes;
  }
  Checker c(j, "probes", errors);
  if (!c.ok_object()) return {};
  c.allow({"start", "end", "step"});
  const double start = c.number("start").value_or(0.0);
  const auto end = c.number("end");
  const auto step = c.number("step");
  if (!end || !step) {
    c.fail("a probe grid needs end and step");
    return {};
  }
  if (!(*step > 0.0) || !(start >= 0.0) || !(*end >= start)) {
    c.fail("need 0 <= start <= end and step > 0");
    return {};
  }
  // Integer multiples avoid accumulating the step.
  const auto count = static_cast<std::size_t>(std::floor((*end - start) / *step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) probes.push_back(start + static_cast<double>(i) * *step);
  return probes;
}

void parse_stop(const json& j, RunConfig& cfg, std::vector<std::string>& errors) {
  Checker c(j, "stop", errors);
  if (!c.ok_object()) return;
  c.allow({"max_events", "max_time", "w_below"});
  if (const auto n = c.count("max_events")) cfg.stop.max_events = *n;
  if (const auto t = c.number("max_time")) {
    if (*t >= 0.0) {
      cfg.stop.max_time = *t;
    } else {
      c.fail("max_time", "must be non-negative");
    }
  }
  if (const auto w = c.number("w_below")) {
    if (*w > 0.0) {
      cfg.stop.w_below = *w;
    } else {
      c.fail("w_below", "must be positive");
    }
  }
  if (!c.has("max_events") && !c.has("max_time")) {
    c.fail("needs max_events or max_time so that every run ends");
  }
}

std::optional<ScenarioSpec> parse_scenario(const json& j, std::vector<std::string>& errors) {
  Checker c(j, "scenario", errors);
  if (!c.ok_object()) return std::nullopt;
  c.allow({"name", "n", "c", "replicates"});
  ScenarioSpec s;
  const auto name = c.text("name");
  if (!name) {
    if (!c.has("name")) c.fail("name", "missing");
    return std::nullopt;
  }
  s.name = *name;
  if (s.name != "butterfly" && s.name != "signflip" && s.name != "deffuant-vs-compass") {
    c.fail("name", "'" + s.name + "' is not one of butterfly, signflip, deffuant-vs-compass");
    return std::nullopt;
  }
  if (const auto n = c.count("n", s.name == "butterfly" ? 3 : 2)) s.n = *n;
  if (const auto cc = c.number("c")) {
    if (*cc > 0.0 && *cc <= 1.0) {
      s.c = *cc;
    } else {
      c.fail("c", "outside the legal range (0, 1]");
    }
  }
  if (const auto r = c.count("replicates", 1)) s.replicates = *r;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

RunConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  RunConfig cfg;
  Checker top(doc, "", errors);
  if (!top.ok_object()) throw ConfigError(errors);
  top.allow({"graph", "space", "init", "mu", "theta", "seed", "stop", "probes", "replicates", "tol",
             "output", "scenario"});

  if (top.has("scenario")) cfg.scenario = parse_scenario(doc.at("scenario"), errors);
  const bool scenario = top.has("scenario");

  if (top.has("graph")) {
    cfg.graph = parse_graph(doc.at("graph"), errors);
  } else if (!scenario) {
    errors.push_back("graph: missing");
  }

  if (const auto space = top.text("space")) {
    if (*space == "circle" || *space == "interval") {
      cfg.space = opinion_space_from_string(*space);
    } else {
      top.fail("space", "'" + *space + "' is not one of circle, interval");
    }
  }
  if (top.has("init")) cfg.init = parse_init(doc.at("init"), errors);

  if (const auto mu = top.number("mu")) cfg.params.mu = *mu;
  if (top.has("theta")) {
    const json& t = doc.at("theta");
    if (t.is_null() || (t.is_string() && (t == "inf" || t == "infinity"))) {
      cfg.params.theta = unbounded_confidence;
    } else if (t.is_number()) {
      cfg.params.theta = t.get<double>();
    } else {
      top.fail("theta", "expected a number, null or \"inf\"");
    }
  }
  if (!(cfg.params.mu > 0.0 && cfg.params.mu <= 0.5)) {
    ModelParams only_mu{cfg.params.mu, unbounded_confidence};
    try {
      only_mu.validate();
    } catch (const std::invalid_argument& e) {
      errors.push_back(e.what());
    }
  }
  if (!(cfg.params.theta > 0.0)) {
    ModelParams only_theta{0.5, cfg.params.theta};
    try {
      only_theta.validate();
    } catch (const std::invalid_argument& e) {
      errors.push_back(e.what());
    }
  }

  if (const auto seed = top.count("seed")) cfg.seed = *seed;
  if (top.has("stop")) {
    parse_stop(doc.at("stop"), cfg, errors);
  } else if (!scenario) {
    errors.push_back("stop: missing (max_events, max_time, w_below)");
  }
  if (top.has("probes")) cfg.probes = parse_probes(doc.at("probes"), errors);
  if (const auto r = top.count("replicates", 1)) cfg.replicates = *r;
  if (const auto tol = top.number("tol")) {
    if (*tol > 0.0) {
      cfg.tol = *tol;
    } else {
      top.fail("tol", "must be positive");
    }
  }
  if (top.has("output")) {
    Checker out(doc.at("output"), "output", errors);
    if (out.ok_object()) {
      out.allow({"dir", "prefix"});
      if (const auto dir = out.text("dir")) cfg.out_dir = *dir;
      if (const auto prefix = out.text("prefix")) {
        if (prefix->empty() || prefix->find('/') != std::string::npos) {
          out.fail("prefix", "must be a non-empty file name part");
        } else {
          cfg.prefix = *prefix;
        }
      }
    }
  }

  if (cfg.graph && cfg.init.kind == InitConfig::Kind::explicit_values &&
      cfg.graph->kind != GraphKind::custom) {
    std::size_t n = cfg.graph->size;
    if (cfg.graph->kind == GraphKind::torus) {
      n = 1;
      for (std::size_t d : cfg.graph->dims) n *= d;
    }
    if (cfg.init.values.size() != n) {
      errors.push_back("init.values: " + std::to_string(cfg.init.values.size()) + " values for " +
                       std::to_string(n) + " vertices");
    }
  }
  const auto in_space = [&cfg](double v) {
    return cfg.space == OpinionSpace::circle ? (v > -1.0 && v <= 1.0) : (v >= 0.0 && v <= 1.0);
  };
  const char* legal = cfg.space == OpinionSpace::circle ? "(-1, 1]" : "[0, 1]";
  if (cfg.init.kind == InitConfig::Kind::constant && !in_space(cfg.init.value)) {
    errors.push_back(std::string("init.value: outside the legal range ") + legal);
  }
  for (double v : cfg.init.values) {
    if (!in_space(v)) {
      errors.push_back(std::string("init.values: entries must lie in ") + legal);
      break;
    }
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open " + path.string()});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  return parse_config(load_json_file(path));
}

void set_dotted(json& doc, const std::string& dotted_key, const std::string& text) {
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream parts(dotted_key);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) keys.push_back(part);
  if (keys.empty()) throw ConfigError({"empty parameter name"});
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& child = (*node)[keys[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError({dotted_key + ": '" + keys[i] + "' is not an object"});
    node = &child;
  }
  (*node)[keys.back()] = std::move(value);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::shared_ptr<const Graph> build_graph(const GraphSpec& spec) {
  switch (spec.kind) {
    case GraphKind::path:
      return std::make_shared<const Graph>(build_path(spec.size));
    case GraphKind::ring:
      return std::make_shared<const Graph>(build_ring(spec.size));
    case GraphKind::torus:
      return std::make_shared<const Graph>(build_torus(spec.dims));
    case GraphKind::custom:
      return std::make_shared<const Graph>(load_edge_list(spec.edge_file));
  }
  throw std::invalid_argument("unknown graph kind");
}

unsigned worker_count() {
  if (const char* env = std::getenv("COMPASS_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1 && n <= 1024) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace compass
