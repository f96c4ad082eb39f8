#include "compass/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace compass {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) noexcept {
  // Largest multiple of n that fits; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

SimState make_state(std::shared_ptr<const Graph> graph, OpinionSpace space, const InitSpec& init,
                    const ModelParams& params) {
  if (!graph) throw std::invalid_argument("make_state: no graph");
  params.validate();
  SimState s;
  s.space = space;
  s.params = params;
  const std::size_t n = graph->vertex_count();
  s.graph = std::move(graph);

  auto check_value = [space](double v) {
    if (space == OpinionSpace::circle) {
      if (!(v > -1.0 && v <= 1.0)) {
        throw std::invalid_argument("circle opinion " + std::to_string(v) + " outside (-1, 1]");
      }
    } else {
      (void)IntervalValue(v);
    }
  };

  if (const auto* iid = std::get_if<IidUniform>(&init)) {
    Rng rng = make_rng(iid->seed, 0);
    s.opinions.resize(n);
    for (double& x : s.opinions) {
      const double u = uniform01(rng);
      x = space == OpinionSpace::circle ? 1.0 - 2.0 * u : u;
    }
  } else if (const auto* ex = std::get_if<Explicit>(&init)) {
    if (ex->values.size() != n) {
      throw std::invalid_argument("explicit init has " + std::to_string(ex->values.size()) +
                                  " values for " + std::to_string(n) + " vertices");
    }
    for (double v : ex->values) check_value(v);
    s.opinions = ex->values;
  } else {
    const double v = std::get<Constant>(init).value;
    check_value(v);
    s.opinions.assign(n, v);
  }
  return s;
}

EventStream EventStream::poisson(std::uint64_t seed) {
  EventStream s;
  s.poisson_ = true;
  s.seed_ = seed;
  s.rng_ = make_rng(seed, 1);
  return s;
}

EventStream EventStream::scripted(std::vector<Event> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!(events[i].time >= 0.0) || (i > 0 && !(events[i].time > events[i - 1].time))) {
      throw std::invalid_argument("scripted events must have non-negative, strictly increasing times");
    }
  }
  EventStream s;
  s.poisson_ = false;
  s.script_ = std::move(events);
  return s;
}

const std::optional<Event>& EventStream::peek(const SimState& state) {
  if (pending_) return pending_;
  const std::size_t edges = state.graph->edge_count();
  if (poisson_) {
    if (edges == 0) return pending_;
    Event ev;
    const double wait = -std::log1p(-uniform01(rng_)) / static_cast<double>(edges);
    ev.time = state.clock + wait;
    ev.edge = static_cast<EdgeId>(uniform_below(rng_, edges));
    ev.tie = (rng_() >> 63) ? TieBit::second : TieBit::first;
    pending_ = ev;
  } else if (cursor_ < script_.size()) {
    const Event& ev = script_[cursor_++];
    if (ev.edge >= edges) {
      throw std::out_of_range("scripted event references edge " + std::to_string(ev.edge));
    }
    pending_ = ev;
  }
  return pending_;
}

std::optional<Event> EventStream::next(const SimState& state) {
  std::optional<Event> ev = peek(state);
  pop();
  return ev;
}

std::size_t EventStream::remaining() const noexcept {
  if (poisson_) return std::numeric_limits<std::size_t>::max();
  return script_.size() - cursor_ + (pending_ ? 1 : 0);
}

void apply_event(SimState& state, const Event& ev) {
  const Edge& e = state.graph->edge(ev.edge);
  double& u = state.opinions[e.tail];
  double& v = state.opinions[e.head];
  const auto [nu, nv] = state.space == OpinionSpace::circle
                            ? detail::compass_step(u, v, state.params, ev.tie)
                            : detail::deffuant_step(u, v, state.params);
  u = nu;
  v = nv;
  state.clock = ev.time;
  ++state.events_applied;
}

namespace {

class WTracker {
 public:
  explicit WTracker(const SimState& s) : abs_(s.graph->edge_count()) { recompute(s); }

  double recompute(const SimState& s) {
    w_ = 0.0;
    const auto& edges = s.graph->edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      abs_[i] = gap(s, edges[i]);
      w_ += abs_[i];
    }
    return w_;
  }

  double update(const SimState& s, EdgeId id) {
    const Graph& g = *s.graph;
    const Edge& c = g.edge(id);
    for (VertexId w : {c.tail, c.head}) {
      for (EdgeId other : g.incident(w)) {
        const double fresh = gap(s, g.edge(other));
        w_ += fresh - abs_[other];
        abs_[other] = fresh;
      }
    }
    return w_;
  }

 private:
  static double gap(const SimState& s, const Edge& e) {
    const double a = s.opinions[e.tail];
    const double b = s.opinions[e.head];
    return s.space == OpinionSpace::circle ? circle_dist(a, b) : std::fabs(a - b);
  }

  std::vector<double> abs_;
  double w_ = 0.0;
};

}  // namespace

RunRecord run(SimState& state, EventStream& stream, const StopRule& stop, const RunOptions& options) {
  const auto wall_start = std::chrono::steady_clock::now();
  const Graph& g = *state.graph;

  RunRecord record;
  record.space = state.space;
  record.params = state.params;
  if (stream.is_poisson()) record.seed = stream.seed();

  std::vector<double> probes = options.probes;
  std::sort(probes.begin(), probes.end());
  std::size_t next_probe = 0;
  while (next_probe < probes.size() && probes[next_probe] <= state.clock) ++next_probe;

  record.samples.push_back(compute_metrics(g, state.space, state.opinions, state.clock));
  auto emit_until = [&](auto&& in_range) {
    while (next_probe < probes.size() && in_range(probes[next_probe])) {
      record.samples.push_back(
          compute_metrics(g, state.space, state.opinions, probes[next_probe]));
      ++next_probe;
    }
  };

  std::optional<WTracker> tracker;
  bool converged = false;
  if (stop.w_below) {
    tracker.emplace(state);
    converged = tracker->recompute(state) < *stop.w_below;
  }

  const std::uint64_t recheck_every = std::max<std::uint64_t>(1, g.edge_count());
  std::uint64_t applied = 0;
  StopReason reason = StopReason::converged;
  while (!converged) {
    if (applied >= stop.max_events) {
      reason = StopReason::max_events;
      break;
    }
    const std::optional<Event>& pending = stream.peek(state);
    if (!pending) {
      reason = StopReason::schedule_exhausted;
      break;
    }
    const Event ev = *pending;
    if (ev.time > stop.max_time) {
      reason = StopReason::max_time;
      break;
    }
    emit_until([&](double p) { return p < ev.time; });
    stream.pop();
    apply_event(state, ev);
    ++applied;
    if (options.on_event) options.on_event(state, ev);
    if (tracker) {
      double w = tracker->update(state, ev.edge);
      // The running sum drifts by rounding; confirm any crossing exactly.
      if (w < *stop.w_below || applied % recheck_every == 0) w = tracker->recompute(state);
      converged = w < *stop.w_below;
    }
  }

  switch (reason) {
    case StopReason::max_time:
      emit_until([&](double p) { return p <= stop.max_time; });
      break;
    case StopReason::schedule_exhausted:
      emit_until([](double) { return true; });
      break;
    default:
      emit_until([&](double p) { return p <= state.clock; });
      break;
  }

  record.stop_reason = reason;
  record.predicate_met = !stop.w_below || reason == StopReason::converged;
  record.events_applied = applied;
  record.final_time = state.clock;
  record.terminal = compute_metrics(g, state.space, state.opinions, state.clock);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return record;
}

}  // namespace compass
