#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "compass/cli.hpp"
#include "compass/scenarios.hpp"

namespace compass {

using ojson = nlohmann::ordered_json;

namespace {

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReplicateResult {
  RunRecord record;
  double vertex0 = 0.0;
};

ojson stats_json(const RunningStats& s) {
  return {{"mean", s.mean()}, {"se", s.standard_error()}, {"sd", s.stddev()}, {"n", s.count()}};
}

ojson ks_json(const KsResult& ks) {
  return {{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"n", ks.n}};
}

ojson theta_json(const ModelParams& p) {
  return p.bounded() ? ojson(p.theta) : ojson("inf");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_timeseries_csv(out, record);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_summary(const RunConfig& cfg, ojson summary) {
  summary["metadata"] = {{"generated_at", utc_timestamp()}, {"workers", worker_count()}};
  write_file(summary_path(cfg), summary.dump(2) + "\n");
}

ReplicateResult run_replicate(const RunConfig& cfg, std::shared_ptr<const Graph> graph,
                              std::size_t index) {
  const std::uint64_t seed = replicate_seed(cfg.seed, index);
  InitSpec init;
  switch (cfg.init.kind) {
    case InitConfig::Kind::uniform:
      init = IidUniform{seed};
      break;
    case InitConfig::Kind::constant:
      init = Constant{cfg.init.value};
      break;
    case InitConfig::Kind::explicit_values:
      init = Explicit{cfg.init.values};
      break;
  }
  SimState state = make_state(std::move(graph), cfg.space, init, cfg.params);
  const std::vector<double> initial = state.opinions;
  EventStream stream = EventStream::poisson(seed);
  RunOptions options;
  options.probes = cfg.probes;

  ReplicateResult result;
  result.record = run(state, stream, cfg.stop, options);
  result.record.consensus = consensus_classify(result.record, cfg.tol);
  if (result.record.consensus == ConsensusClass::strong_like) {
    const LimitReport lim = extract_limits(cfg.space, initial, state.opinions, cfg.tol);
    result.record.limit = lim.limit;
    result.record.winding_k = lim.k;
  }
  result.vertex0 = state.opinions.front();
  return result;
}

ojson replicate_summary(const RunConfig& cfg, const std::vector<ReplicateResult>& results) {
  SeriesAggregate series;
  RunningStats terminal_w, terminal_range, terminal_mad, events, final_time;
  std::size_t strong = 0, weak = 0, none = 0, met = 0;
  ojson stops = ojson::object();
  std::vector<double> limits, vertex0;
  RunningStats limit_stats;
  for (const auto& r : results) {
    series.add(r.record);
    terminal_w.add(r.record.terminal.w);
    terminal_range.add(r.record.terminal.opinion_range);
    terminal_mad.add(r.record.terminal.mean_abs_delta);
    events.add(static_cast<double>(r.record.events_applied));
    final_time.add(r.record.final_time);
    switch (r.record.consensus) {
      case ConsensusClass::strong_like: ++strong; break;
      case ConsensusClass::weak_only_like: ++weak; break;
      case ConsensusClass::none: ++none; break;
    }
    if (r.record.predicate_met) ++met;
    const std::string reason = to_string(r.record.stop_reason);
    stops[reason] = stops.value(reason, 0) + 1;
    if (r.record.limit) {
      limits.push_back(*r.record.limit);
      limit_stats.add(*r.record.limit);
    }
    vertex0.push_back(r.vertex0);
  }

  ojson probes = ojson::array();
  std::vector<double> times;
  for (const auto& row : series.rows()) {
    times.push_back(row.time);
    probes.push_back({{"time", row.time},
                      {"n", row.w.count()},
                      {"W", stats_json(row.w)},
                      {"max_neighbor_dist", stats_json(row.max_neighbor_dist)},
                      {"mean_abs_delta", stats_json(row.mean_abs_delta)},
                      {"opinion_range", stats_json(row.opinion_range)},
                      {"sign_flip_fraction", stats_json(row.sign_flip_fraction)}});
  }

  ojson tests = ojson::object();
  if (cfg.space == OpinionSpace::circle && !limits.empty()) {
    tests["limit_uniformity"] = ks_json(ks_test_uniform(limits, -1.0, 1.0));
  }
  if (cfg.space == OpinionSpace::circle && vertex0.size() >= 500) {
    try {
      tests["vertex0_uniformity"] = ks_json(marginal_uniformity_test(vertex0));
    } catch (const std::invalid_argument&) {
      tests["vertex0_uniformity"] = nullptr;
    }
  }
  // Only rows every replicate reached enter the monotonicity check.
  std::size_t full_rows = 0;
  while (full_rows < series.rows().size() && series.rows()[full_rows].w.count() == results.size()) {
    ++full_rows;
  }
  if (full_rows >= 2 && results.size() >= 50) {
    std::vector<std::vector<double>> est(full_rows, std::vector<double>(results.size()));
    for (std::size_t i = 0; i < full_rows; ++i) {
      for (std::size_t r = 0; r < results.size(); ++r) est[i][r] = results[r].record.samples[i].mean_abs_delta;
    }
    const MonotoneReport m =
        monotone_mean_delta_check(std::span(times).first(full_rows), est);
    ojson mono = {{"passed", m.passed}};
    mono["first_violation"] = m.first_violation ? ojson(*m.first_violation) : ojson(nullptr);
    tests["mean_abs_delta_monotone"] = std::move(mono);
  }

  ojson out;
  out["schema"] = "compass-summary v1";
  out["kind"] = "run";
  out["space"] = std::string(to_string(cfg.space));
  out["params"] = {{"mu", cfg.params.mu}, {"theta", theta_json(cfg.params)}};
  out["master_seed"] = cfg.seed;
  out["replicates"] = results.size();
  out["tol"] = cfg.tol;
  out["probes"] = std::move(probes);
  out["terminal"] = {{"W", stats_json(terminal_w)},
                     {"opinion_range", stats_json(terminal_range)},
                     {"mean_abs_delta", stats_json(terminal_mad)},
                     {"events_applied", stats_json(events)},
                     {"final_time", stats_json(final_time)}};
  out["consensus_counts"] = {{"strong-like", strong}, {"weak-only-like", weak}, {"none", none}};
  out["stop_reasons"] = std::move(stops);
  out["predicate_met"] = met;
  out["limits"] = {{"values", limits}, {"stats", stats_json(limit_stats)}};
  out["tests"] = std::move(tests);
  return out;
}

int run_replicates(const RunConfig& cfg, std::ostream& err) {
  std::shared_ptr<const Graph> graph;
  try {
    graph = build_graph(*cfg.graph);
  } catch (const std::exception& e) {
    err << "error: graph: " << e.what() << "\n";
    return exit_config;
  }
  ensure_dir(cfg.out_dir);

  const std::size_t total = cfg.replicates;
  std::vector<std::optional<ReplicateResult>> slots(total);
  std::vector<std::string> failures(total);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable ready;

  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      std::optional<ReplicateResult> result;
      std::string failure;
      try {
        result = run_replicate(cfg, graph, i);
      } catch (const std::exception& e) {
        failure = e.what();
        if (failure.empty()) failure = "unknown error";
      }
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(result);
        failures[i] = std::move(failure);
      }
      ready.notify_one();
    }
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), total));
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);

  // The calling thread is the only writer; it emits files in replicate order
  // as results arrive.
  std::vector<ReplicateResult> results;
  results.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::unique_lock lock(mu);
    ready.wait(lock, [&] { return slots[i].has_value() || !failures[i].empty(); });
    if (!failures[i].empty()) {
      lock.unlock();
      next = total;
      err << "error: replicate " << i << ": " << failures[i] << "\n";
      return exit_config;
    }
    ReplicateResult r = std::move(*slots[i]);
    slots[i].reset();
    lock.unlock();
    write_csv(replicate_csv_path(cfg, i), r.record);
    results.push_back(std::move(r));
  }
  pool.clear();

  write_summary(cfg, replicate_summary(cfg, results));
  return exit_ok;
}

int run_scenario(const RunConfig& cfg, std::ostream& err) {
  const ScenarioSpec& spec = *cfg.scenario;
  ensure_dir(cfg.out_dir);
  ojson out;
  out["schema"] = "compass-summary v1";
  out["kind"] = "scenario";
  out["scenario"] = spec.name;
  out["params"] = {{"mu", cfg.params.mu}, {"theta", theta_json(cfg.params)}};
  bool passed = true;
  std::string assertion;

  if (spec.name == "butterfly") {
    const ButterflyPair pair = butterfly_scenario(spec.n, cfg.params);
    SimState a, b;
    const RunRecord ra = execute(pair.base, StopRule{}, &a);
    const RunRecord rb = execute(pair.variant, StopRule{}, &b);
    write_csv(cfg.out_dir / (cfg.prefix + "_base.csv"), ra);
    write_csv(cfg.out_dir / (cfg.prefix + "_variant.csv"), rb);
    const ButterflyReport rep = run_butterfly(pair);
    out["n"] = spec.n;
    out["events"] = ra.events_applied;
    out["base_limit"] = rep.base_limit;
    out["variant_limit"] = rep.variant_limit;
    out["base_range"] = rep.base_range;
    out["variant_range"] = rep.variant_range;
    out["terminal_coupled_distance"] = rep.distance;
    assertion = "terminal coupled distance >= 0.8";
    passed = rep.distance >= 0.8;
  } else if (spec.name == "signflip") {
    const Scenario s = signflip_scenario(spec.c, cfg.params);
    const SignflipReport rep = run_signflip(s);
    out["c"] = spec.c;
    out["K"] = signflip_section_length(spec.c);
    out["events"] = rep.events;
    out["flipped"] = rep.flipped;
    out["first_flip_event"] = rep.first_flip_event ? ojson(*rep.first_flip_event) : ojson(nullptr);
    out["first_flip_edge"] = rep.first_flip_edge ? ojson(*rep.first_flip_edge + 1) : ojson(nullptr);
    assertion = "adjacent edge differences of opposite sign occur";
    passed = rep.flipped;
  } else {
    const ComparisonReport rep = deffuant_vs_compass(spec.n, spec.replicates, cfg.seed, cfg.params);
    out["n"] = spec.n;
    out["replicates"] = spec.replicates;
    out["master_seed"] = cfg.seed;
    out["unresolved"] = rep.unresolved;
    out["deffuant_limit"] = stats_json(rep.deffuant_stats);
    out["deffuant_sd_expected"] = std::sqrt(1.0 / (12.0 * static_cast<double>(spec.n)));
    out["compass_limit_uniformity"] = ks_json(rep.compass_ks);
    out["deffuant_limits"] = rep.deffuant_limits;
    out["compass_limits"] = rep.compass_limits;
    assertion = "compass limits pass a KS test against unif(-1, 1] at p > 0.01";
    passed = rep.unresolved == 0 && rep.compass_ks.p_value > 0.01;
  }
  out["assertion"] = {{"statement", assertion}, {"passed", passed}};
  write_summary(cfg, std::move(out));
  if (!passed) {
    err << "scenario " << spec.name << ": assertion failed: " << assertion << "\n";
    return exit_assertion;
  }
  return exit_ok;
}

}  // namespace

std::filesystem::path replicate_csv_path(const RunConfig& config, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_rep%04zu.csv", index);
  return config.out_dir / (config.prefix + buf);
}

std::filesystem::path summary_path(const RunConfig& config) {
  return config.out_dir / (config.prefix + "_summary.json");
}

int run_batch(const RunConfig& config, std::ostream& err) {
  try {
    return config.scenario ? run_scenario(config, err) : run_replicates(config, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace compass
