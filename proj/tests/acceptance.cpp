// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "compass/cli.hpp"
#include "compass/difference.hpp"
#include "compass/engine.hpp"
#include "compass/scenarios.hpp"

using namespace compass;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs body(i) for i in [0, n) on every hardware thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
}

std::shared_ptr<const Graph> path(std::size_t n) { return std::make_shared<const Graph>(build_path(n)); }
std::shared_ptr<const Graph> ring(std::size_t n) { return std::make_shared<const Graph>(build_ring(n)); }

Outcome consensus_protocol(const std::shared_ptr<const Graph>& g) {
  constexpr std::size_t seeds = 20;
  const std::vector<double> mus{0.5, 0.1};
  std::vector<RunRecord> records(mus.size() * seeds);
  parallel_for(records.size(), [&](std::size_t i) {
    const ModelParams p{mus[i / seeds], unbounded_confidence};
    const std::uint64_t seed = 1 + i % seeds;
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{seed}, p);
    EventStream st = EventStream::poisson(seed);
    records[i] = run(s, st, StopRule::converged(1e-6, 1'000'000));
  });
  Outcome o{true, ""};
  for (std::size_t m = 0; m < mus.size(); ++m) {
    std::size_t ok = 0;
    std::uint64_t worst = 0;
    double slowest = 0.0;
    for (std::size_t k = 0; k < seeds; ++k) {
      const RunRecord& r = records[m * seeds + k];
      const bool good = r.predicate_met && r.terminal.opinion_range < 1e-5 && r.wall_seconds < 5.0;
      ok += good;
      worst = std::max(worst, r.events_applied);
      slowest = std::max(slowest, r.wall_seconds);
    }
    o.passed = o.passed && ok == seeds;
    o.detail += fmt("mu=%.1f: %zu/%zu converged, max events %llu, max %.2fs; ", mus[m], ok, seeds,
                    static_cast<unsigned long long>(worst), slowest);
  }
  return o;
}

Outcome c1() { return consensus_protocol(path(50)); }
Outcome c2() { return consensus_protocol(ring(50)); }

Outcome c3() {
  // Differences are recomputed from rounded opinions, so allow a few ulps.
  constexpr double slack = 1e-12;
  std::vector<std::size_t> violations(100, 0);
  parallel_for(100, [&](std::size_t i) {
    auto g = i % 2 == 0 ? path(30) : ring(30);
    const ModelParams p{0.05 + 0.45 * static_cast<double>(i % 10) / 9.0,
                        i % 4 == 3 ? 0.5 : unbounded_confidence};
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{500 + i}, p);
    EventStream st = EventStream::poisson(500 + i);
    std::vector<double> before = delta_from_config(*g, s.opinions).values;
    double w_before = 0.0;
    for (double d : before) w_before += std::fabs(d);
    for (int k = 0; k < 10'000; ++k) {
      const Event ev = *st.next(s);
      apply_event(s, ev);
      const std::vector<double> after = delta_from_config(*g, s.opinions).values;
      double w_after = 0.0;
      for (double d : after) w_after += std::fabs(d);
      if (incident_abs_sum(*g, after, ev.edge) > incident_abs_sum(*g, before, ev.edge) + slack) ++violations[i];
      if (w_after > w_before + slack) ++violations[i];
      before = after;
      w_before = w_after;
    }
  });
  std::size_t total = 0;
  for (auto v : violations) total += v;
  return {total == 0, fmt("%zu violations over 100 runs x 1e4 events", total)};
}

Outcome c4() {
  auto g = path(20);
  std::vector<double> residual(100);
  parallel_for(100, [&](std::size_t i) {
    SimState s = make_state(g, OpinionSpace::interval, IidUniform{1000 + i}, {});
    const std::vector<double> init = s.opinions;
    EventStream st = EventStream::poisson(1000 + i);
    run(s, st, StopRule::converged(1e-13, 10'000'000));
    residual[i] = *extract_limits(OpinionSpace::interval, init, s.opinions, 1e-12).mean_residual;
  });
  const double worst = *std::max_element(residual.begin(), residual.end());
  return {worst < 1e-9, fmt("max |L_D - initial mean| = %.3g", worst)};
}

Outcome c5() {
  auto g = path(20);
  std::vector<double> residual(100);
  parallel_for(100, [&](std::size_t i) {
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{2000 + i}, {});
    const std::vector<double> init = s.opinions;
    EventStream st = EventStream::poisson(2000 + i);
    run(s, st, StopRule::converged(1e-12, 10'000'000));
    residual[i] = *extract_limits(OpinionSpace::circle, init, s.opinions, 1e-9).k_residual;
  });
  const double worst = *std::max_element(residual.begin(), residual.end());
  return {worst < 1e-6, fmt("max distance of K to an integer = %.3g", worst)};
}

Outcome c6() {
  auto g = ring(20);
  std::vector<double> v0(2000);
  parallel_for(v0.size(), [&](std::size_t i) {
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{replicate_seed(6, i)}, {});
    EventStream st = EventStream::poisson(replicate_seed(6, i));
    run(s, st, StopRule::time(10.0));
    v0[i] = s.opinions[0];
  });
  const KsResult ks = marginal_uniformity_test(v0);
  return {ks.p_value > 0.01, fmt("KS D=%.4f p=%.4f", ks.statistic, ks.p_value)};
}

Outcome c7() {
  auto g = ring(200);
  const ModelParams p{0.25, unbounded_confidence};
  std::vector<double> times;
  for (int t = 0; t <= 10; ++t) times.push_back(t);
  std::vector<std::vector<double>> est(times.size(), std::vector<double>(200));
  parallel_for(200, [&](std::size_t r) {
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{replicate_seed(7, r)}, p);
    EventStream st = EventStream::poisson(replicate_seed(7, r));
    const RunRecord rec = run(s, st, StopRule::time(10.0), {times, {}});
    for (std::size_t i = 0; i < times.size(); ++i) est[i][r] = rec.samples[i].mean_abs_delta;
  });
  const MonotoneReport m = monotone_mean_delta_check(times, est);
  const bool start_ok = std::fabs(m.means[0] - 0.5) <= 0.02;
  return {start_ok && m.passed,
          fmt("E|D_0| = %.4f, E|D_10| = %.4f, monotone within 2 SE: %s", m.means[0], m.means.back(),
              m.passed ? "yes" : "no")};
}

Outcome c8() {
  auto g = ring(20);
  SimState s = make_state(g, OpinionSpace::circle, Constant{0.0}, {});
  constexpr std::size_t reps = 10'000;
  std::size_t quiet = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    s.clock = 0.0;
    EventStream st = EventStream::poisson(replicate_seed(8, r));
    bool hit = false;
    for (;;) {
      const Event ev = *st.next(s);
      if (ev.time > 0.1) break;
      if (ev.edge <= 2) hit = true;
      s.clock = ev.time;
    }
    quiet += !hit;
  }
  const double expected = std::exp(-0.3);
  const double se = std::sqrt(expected * (1 - expected) / reps);
  const double observed = static_cast<double>(quiet) / reps;
  return {std::fabs(observed - expected) <= 3 * se,
          fmt("observed %.4f, expected %.4f, %.2f SE", observed, expected, std::fabs(observed - expected) / se)};
}

Outcome c9() {
  std::vector<std::size_t> dominated_fail(50, 0);
  std::vector<double> discrepancy(50, 0.0);
  parallel_for(50, [&](std::size_t i) {
    auto g = i % 2 == 0 ? path(40) : ring(40);
    const ModelParams p{0.05 + 0.45 * static_cast<double>(i % 7) / 6.0, i % 3 == 0 ? 0.7 : unbounded_confidence};
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{9000 + i}, p);
    DifferenceTracker tracker(*g, s.opinions, p);
    EventStream st = EventStream::poisson(9000 + i);
    double next_probe = 1.0;
    for (int k = 0; k < 100'000; ++k) {
      const Event ev = *st.next(s);
      apply_event(s, ev);
      tracker.observe(ev, s.opinions);
      if (s.clock >= next_probe) {
        next_probe += 1.0;
        for (std::size_t e = 0; e < g->edge_count(); ++e) {
          if (tracker.xi().values[e] < std::fabs(tracker.delta().values[e])) ++dominated_fail[i];
        }
      }
    }
    discrepancy[i] = check_consistency(*g, s.opinions, tracker.delta());
  });
  std::size_t fails = 0;
  for (auto f : dominated_fail) fails += f;
  const double worst = *std::max_element(discrepancy.begin(), discrepancy.end());
  return {fails == 0 && worst <= 1e-9, fmt("%zu domination failures, max discrepancy %.3g", fails, worst)};
}

Outcome c10() {
  const std::vector<double> values{-0.9, -0.7, -0.5, -0.25, 0.0, 0.1, 0.33, 0.5, 0.875, 1.0};
  std::size_t changed = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto g = i % 2 == 0 ? ring(30) : std::make_shared<const Graph>(build_torus({5, 6}));
    SimState s = make_state(g, OpinionSpace::circle, Constant{values[i]}, {0.5 - 0.04 * i, unbounded_confidence});
    const std::vector<double> before = s.opinions;
    EventStream st = EventStream::poisson(i);
    run(s, st, StopRule::events(100'000));
    changed += s.opinions != before;
  }
  return {changed == 0, fmt("%zu of 10 constant profiles moved", changed)};
}

Outcome c11() {
  auto g = ring(200);
  std::vector<double> rate(200);
  parallel_for(200, [&](std::size_t r) {
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{replicate_seed(11, r)}, {});
    EventStream st = EventStream::poisson(replicate_seed(11, r));
    run(s, st, StopRule::time(1.0));
    rate[r] = sign_product_rate(*g, delta_from_config(*g, s.opinions).values);
  });
  double mean = 0.0;
  for (double x : rate) mean += x / 200.0;
  return {mean > 0.1, fmt("mean sign-flip rate at t=1: %.4f", mean)};
}

Outcome c12() {
  // Frozen from a pilot: mean |delta| first drops below 0.05 after roughly
  // 200 to 230 time units, where every replicate still spans more than half
  // the circle.
  constexpr double threshold = 0.70;
  auto g = ring(1000);
  const ModelParams p{0.25, unbounded_confidence};
  std::vector<double> probes;
  for (int t = 0; t <= 400; ++t) probes.push_back(t);
  std::vector<RunRecord> recs(100);
  parallel_for(100, [&](std::size_t r) {
    SimState s = make_state(g, OpinionSpace::circle, IidUniform{replicate_seed(12, r)}, p);
    EventStream st = EventStream::poisson(replicate_seed(12, r));
    recs[r] = run(s, st, StopRule::time(probes.back()), {probes, {}});
  });
  for (std::size_t i = 0; i < probes.size(); ++i) {
    double mean = 0.0;
    std::size_t wide = 0;
    for (const auto& rec : recs) {
      mean += rec.samples[i].mean_abs_delta / 100.0;
      wide += rec.samples[i].opinion_range > 1.0;
    }
    if (mean < 0.05) {
      return {wide >= threshold * 100,
              fmt("first probe with mean|D| < 0.05 at t=%.0f; range > 1 in %zu/100", probes[i], wide)};
    }
  }
  return {false, "mean|D| never dropped below 0.05 by t=400"};
}

Outcome c13() {
  const ButterflyReport r = run_butterfly(butterfly_scenario(10));
  return {r.distance >= 0.8, fmt("coupled distance %.6f (limits %.6f, %.6f)", r.distance, r.base_limit,
                                  r.variant_limit)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c14() {
  const fs::path root = fs::temp_directory_path() / "compass_acceptance_determinism";
  fs::remove_all(root);
  nlohmann::json doc = {{"graph", {{"kind", "ring"}, {"size", 40}}},
                        {"mu", 0.3},
                        {"seed", 2024},
                        {"replicates", 8},
                        {"stop", {{"max_time", 20}}},
                        {"probes", {{"start", 0}, {"end", 20}, {"step", 0.5}}}};
  std::ostringstream err;
  std::size_t differing = 0, files = 0;
  const char* workers[] = {"1", "4"};
  for (int k = 0; k < 2; ++k) {
    setenv("COMPASS_WORKERS", workers[k], 1);
    doc["output"] = {{"dir", (root / std::to_string(k)).string()}};
    if (run_batch(parse_config(doc), err) != exit_ok) return {false, "batch failed: " + err.str()};
  }
  unsetenv("COMPASS_WORKERS");
  for (const auto& entry : fs::directory_iterator(root / "0")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    differing += slurp(entry.path()) != slurp(root / "1" / entry.path().filename());
  }
  fs::remove_all(root);
  return {files == 8 && differing == 0, fmt("%zu of %zu CSV files differ between reruns", differing, files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"path consensus", c1},
      {"ring consensus", c2},
      {"per-event monotonicity", c3},
      {"Deffuant conservation", c4},
      {"compass quotient limit", c5},
      {"marginal uniformity", c6},
      {"E|delta| non-increasing", c7},
      {"Poisson calibration", c8},
      {"domination and consistency", c9},
      {"fixed points", c10},
      {"non-invariance witness", c11},
      {"weak-not-strong proxy", c12},
      {"butterfly", c13},
      {"determinism", c14},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = criteria[i].second();
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.passed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
