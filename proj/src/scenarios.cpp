#include "compass/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "compass/difference.hpp"

namespace compass {

SimState scenario_state(const Scenario& s) {
  return make_state(s.graph, s.space, s.init, s.params);
}

EventStream scenario_stream(const Scenario& s) {
  if (const auto* seed = std::get_if<std::uint64_t>(&s.stream)) return EventStream::poisson(*seed);
  return EventStream::scripted(std::get<std::vector<Event>>(s.stream));
}

RunRecord execute(const Scenario& s, const StopRule& stop, SimState* final_state) {
  SimState state = scenario_state(s);
  EventStream stream = scenario_stream(s);
  RunOptions options;
  options.probes = s.probes;
  RunRecord record = run(state, stream, stop, options);
  if (final_state) *final_state = std::move(state);
  return record;
}

void check_segment(const Graph& g, std::span<const EdgeId> segment) {
  std::vector<EdgeId> seen(segment.begin(), segment.end());
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw std::invalid_argument("segment repeats an edge");
  }
  for (std::size_t i = 0; i + 1 < segment.size(); ++i) {
    const Edge& a = g.edge(segment[i]);
    const Edge& b = g.edge(segment[i + 1]);
    const bool touch = a.tail == b.tail || a.tail == b.head || a.head == b.tail || a.head == b.head;
    if (!touch) {
      throw std::invalid_argument("segment edges " + std::to_string(segment[i]) + " and " +
                                  std::to_string(segment[i + 1]) + " do not share a vertex");
    }
  }
}

FlattenPattern flatten_schedule(std::span<const EdgeId> segment, double eps, const ModelParams& params) {
  if (!(eps > 0.0)) throw std::invalid_argument("flatten_schedule: eps must be positive");
  params.validate();

  // Segment positions stand in for edges: position i touches i - 1 and i + 1.
  const std::size_t m = segment.size();
  std::vector<double> xi(m, 1.0);
  double sum = static_cast<double>(m);
  FlattenPattern out;
  out.xi_sum = sum;
  if (sum <= eps) return out;

  constexpr std::size_t max_sweeps = 10'000'000;
  while (out.sweeps < max_sweeps) {
    ++out.sweeps;
    for (std::size_t i = 0; i < m; ++i) {
      const double c = xi[i];
      xi[i] = (1.0 - 2.0 * params.mu) * c;
      if (i > 0) xi[i - 1] += params.mu * c;
      if (i + 1 < m) xi[i + 1] += params.mu * c;
      out.edges.push_back(segment[i]);
      // Re-summing keeps the stopping test free of drift.
      sum = std::accumulate(xi.begin(), xi.end(), 0.0);
      if (sum <= eps) {
        out.xi_sum = sum;
        return out;
      }
    }
  }
  throw std::runtime_error("flatten_schedule: no pattern within the sweep limit");
}

std::vector<Event> pattern_events(std::span<const EdgeId> edges, double start, double dt) {
  std::vector<Event> events;
  events.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    events.push_back({start + dt * static_cast<double>(i + 1), edges[i], TieBit::first});
  }
  return events;
}

namespace {

std::vector<EdgeId> edge_range(EdgeId first, EdgeId last) {
  std::vector<EdgeId> ids;
  for (EdgeId e = first; e <= last; ++e) ids.push_back(e);
  return ids;
}

void append(std::vector<Event>& script, std::span<const EdgeId> edges) {
  const double start = script.empty() ? 0.0 : script.back().time;
  auto more = pattern_events(edges, start);
  script.insert(script.end(), more.begin(), more.end());
}

constexpr double half_flatten_eps = 1e-9;
constexpr double full_flatten_eps = 1e-12;

std::vector<Event> butterfly_script(std::size_t n, const ModelParams& params) {
  // Edge e_v (1-based) has id v - 1. Left half uses e_1 .. e_{n-2}, right
  // half e_{n+1} .. e_{2n-2}; the middle edges are e_{n-1} and e_n.
  const auto left = edge_range(0, static_cast<EdgeId>(n - 3));
  const auto right = edge_range(static_cast<EdgeId>(n), static_cast<EdgeId>(2 * n - 3));
  std::vector<Event> script;
  append(script, flatten_schedule(left, half_flatten_eps, params).edges);
  append(script, flatten_schedule(right, half_flatten_eps, params).edges);

  std::vector<EdgeId> middle;
  for (std::size_t i = 0; i < butterfly_alternations; ++i) {
    middle.push_back(static_cast<EdgeId>(i % 2 == 0 ? n - 2 : n - 1));
  }
  append(script, middle);

  // The alternation leaves both halves off the limit; one more flattening
  // pass brings the whole path together.
  const auto all = edge_range(0, static_cast<EdgeId>(2 * n - 3));
  append(script, flatten_schedule(all, full_flatten_eps, params).edges);
  return script;
}

ButterflyPair make_pair(std::size_t n, const ModelParams& params, OpinionSpace space,
                        std::vector<double> ramp, double moved) {
  auto graph = std::make_shared<const Graph>(build_path(2 * n - 1));
  auto script = butterfly_script(n, params);

  ButterflyPair pair;
  pair.n = n;
  pair.base.name = space == OpinionSpace::circle ? "butterfly" : "butterfly-deffuant";
  pair.base.graph = graph;
  pair.base.space = space;
  pair.base.params = params;
  pair.base.stream = script;
  pair.variant = pair.base;
  pair.variant.name += "-variant";
  pair.base.init = Explicit{ramp};
  ramp[n - 1] = moved;
  pair.variant.init = Explicit{std::move(ramp)};
  return pair;
}

}  // namespace

ButterflyPair butterfly_scenario(std::size_t n, const ModelParams& params) {
  if (n < 3) throw std::invalid_argument("butterfly_scenario: n must be at least 3");
  params.validate();
  std::vector<double> ramp(2 * n - 1);
  for (std::size_t v = 1; v <= ramp.size(); ++v) {
    ramp[v - 1] = static_cast<double>(v) / static_cast<double>(n) - 1.0;
  }
  return make_pair(n, params, OpinionSpace::circle, std::move(ramp), 1.0);
}

ButterflyPair butterfly_deffuant(std::size_t n, const ModelParams& params) {
  if (n < 3) throw std::invalid_argument("butterfly_deffuant: n must be at least 3");
  params.validate();
  std::vector<double> ramp(2 * n - 1);
  for (std::size_t v = 1; v <= ramp.size(); ++v) {
    ramp[v - 1] = static_cast<double>(v) / static_cast<double>(2 * n);
  }
  return make_pair(n, params, OpinionSpace::interval, std::move(ramp), 1.0);
}

ButterflyReport run_butterfly(const ButterflyPair& pair) {
  const StopRule stop;
  SimState a, b;
  execute(pair.base, stop, &a);
  execute(pair.variant, stop, &b);

  ButterflyReport r;
  if (pair.base.space == OpinionSpace::circle) {
    r.base_range = circle_range(a.opinions);
    r.variant_range = circle_range(b.opinions);
    r.base_limit = circular_anchor_mean(a.opinions);
    r.variant_limit = circular_anchor_mean(b.opinions);
    r.distance = circle_dist(r.base_limit, r.variant_limit);
  } else {
    auto mm = [](const std::vector<double>& x) {
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      return std::pair{*hi - *lo, 0.5 * (*lo + *hi)};
    };
    std::tie(r.base_range, r.base_limit) = mm(a.opinions);
    std::tie(r.variant_range, r.variant_limit) = mm(b.opinions);
    r.distance = std::fabs(r.base_limit - r.variant_limit);
  }
  return r;
}

std::size_t signflip_section_length(double c) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("signflip: c must lie in (0, 1]");
  const auto a = static_cast<std::size_t>(std::ceil(2.0 / c));
  const auto b = static_cast<std::size_t>(std::ceil(4.0 / c));
  return a * (b + 3) + 1;
}

Scenario signflip_scenario(double c, const ModelParams& params) {
  const std::size_t k = signflip_section_length(c);
  params.validate();

  Scenario s;
  s.name = "signflip";
  s.graph = std::make_shared<const Graph>(build_path(k));
  s.space = OpinionSpace::circle;
  s.params = params;
  std::vector<double> init(k);
  for (std::size_t v = 0; v < k; ++v) init[v] = mod_s(0.5 * c * static_cast<double>(v));
  s.init = Explicit{std::move(init)};

  // Interior e_3 .. e_{K-3}; e_1, e_2, e_{K-2}, e_{K-1} never fire.
  const auto interior = edge_range(2, static_cast<EdgeId>(k - 4));
  s.stream = pattern_events(flatten_schedule(interior, c / 3.0, params).edges, 0.0);
  return s;
}

SignflipReport run_signflip(const Scenario& s) {
  SimState state = scenario_state(s);
  EventStream stream = scenario_stream(s);
  const Graph& g = *state.graph;

  SignflipReport report;
  auto first_negative = [&g](std::span<const double> d) -> std::optional<EdgeId> {
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      for (EdgeId f = e + 1; f < g.edge_count(); ++f) {
        if (g.edge(e).head == g.edge(f).tail && d[e] * d[f] < 0.0) return e;
        if (g.edge(f).head == g.edge(e).tail && d[e] * d[f] < 0.0) return std::min(e, f);
      }
    }
    return std::nullopt;
  };

  // Paths and rings only need the pairs (e, e + 1); the general scan is for
  // custom graphs.
  const bool chain = g.kind() == GraphKind::path || g.kind() == GraphKind::ring;
  auto scan = [&](std::span<const double> d) -> std::optional<EdgeId> {
    if (!chain) return first_negative(d);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const EdgeId f = (e + 1) % static_cast<EdgeId>(g.edge_count());
      if (f == 0 && g.kind() == GraphKind::path) break;
      if (d[e] * d[f] < 0.0) return e;
    }
    return std::nullopt;
  };

  auto probe = [&](std::uint64_t event_index) {
    if (report.flipped) return;
    const auto d = state.space == OpinionSpace::circle ? delta_from_config(g, state.opinions).values
                                                        : interval_differences(g, state.opinions);
    if (auto e = scan(d)) {
      report.flipped = true;
      report.first_flip_event = event_index;
      report.first_flip_edge = *e;
    }
  };

  probe(0);
  while (auto ev = stream.next(state)) {
    apply_event(state, *ev);
    ++report.events;
    probe(report.events);
  }
  return report;
}

ComparisonReport deffuant_vs_compass(std::size_t n, std::size_t replicates, std::uint64_t seed,
                                     const ModelParams& params, std::uint64_t event_budget) {
  params.validate();
  auto graph = std::make_shared<const Graph>(build_path(n));
  ComparisonReport report;
  report.n = n;
  const std::uint64_t chunk = std::max<std::uint64_t>(1, graph->edge_count());

  for (std::size_t r = 0; r < replicates; ++r) {
    Rng init_rng = make_rng(seed, 2 + 2 * static_cast<std::uint64_t>(r));
    std::vector<double> u(n), x(n);
    for (std::size_t v = 0; v < n; ++v) {
      u[v] = uniform01(init_rng);
      x[v] = mod_s(2.0 * u[v] - 1.0);
    }
    const std::uint64_t stream_seed = init_rng();

    SimState interval = make_state(graph, OpinionSpace::interval, Explicit{u}, params);
    SimState circle = make_state(graph, OpinionSpace::circle, Explicit{x}, params);
    EventStream s_interval = EventStream::poisson(stream_seed);
    EventStream s_circle = EventStream::poisson(stream_seed);

    std::uint64_t used = 0;
    while (circle_range(circle.opinions) >= 1.0 && used < event_budget) {
      run(circle, s_circle, StopRule::events(chunk));
      run(interval, s_interval, StopRule::events(chunk));
      used += chunk;
    }
    if (circle_range(circle.opinions) >= 1.0) {
      ++report.unresolved;
      continue;
    }
    report.compass_limits.push_back(circular_anchor_mean(circle.opinions));
    const double l_d = spatial_average(interval.opinions);
    report.deffuant_limits.push_back(l_d);
    report.deffuant_stats.add(l_d);
  }
  if (!report.compass_limits.empty()) {
    report.compass_ks = ks_test_uniform(report.compass_limits, -1.0, 1.0);
  }
  return report;
}

}  // namespace compass
