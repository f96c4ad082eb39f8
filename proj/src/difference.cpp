#include "compass/difference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace compass {

namespace {

void require_low_degree(const Graph& g) {
  if (g.max_degree() > 2) {
    throw std::invalid_argument("difference process requires max degree <= 2, graph has " +
                                std::to_string(g.max_degree()));
  }
}

void require_shape(const Graph& g, std::size_t n, const char* what) {
  if (n != g.edge_count()) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(g.edge_count()) + " entries, got " +
                                std::to_string(n));
  }
}

// Orientation factor for the change that an event on `center` pushes onto
// `other` through their shared vertex `w`. The tail of the centre moves by
// +mu*delta, its head by -mu*delta; the neighbour's difference is head minus
// tail.
inline double neighbour_sign(const Edge& center, const Edge& other, VertexId w) {
  const double mover = (w == center.tail) ? 1.0 : -1.0;
  const double side = (w == other.head) ? 1.0 : -1.0;
  return mover * side;
}

template <typename Wrap>
void linear_update(const Graph& g, std::vector<double>& values, EdgeId id, double center,
                   double mu, Wrap wrap, bool signed_update) {
  const Edge& c = g.edge(id);
  for (VertexId w : {c.tail, c.head}) {
    for (EdgeId other : g.incident(w)) {
      if (other == id) continue;
      const double sign = signed_update ? neighbour_sign(c, g.edge(other), w) : 1.0;
      values[other] = wrap(values[other] + sign * mu * center);
    }
  }
  values[id] = (1.0 - 2.0 * mu) * center;
}

}  // namespace

DeltaState delta_from_config(const Graph& g, std::span<const double> opinions) {
  if (opinions.size() != g.vertex_count()) {
    throw std::invalid_argument("delta_from_config: opinion count " +
                                std::to_string(opinions.size()) + " != vertex count " +
                                std::to_string(g.vertex_count()));
  }
  DeltaState out;
  out.values.reserve(g.edge_count());
  for (const Edge& e : g.edges()) {
    out.values.push_back(mod_s(opinions[e.head] - opinions[e.tail]));
  }
  return out;
}

std::vector<double> interval_differences(const Graph& g, std::span<const double> opinions) {
  if (opinions.size() != g.vertex_count()) {
    throw std::invalid_argument("interval_differences: opinion count mismatch");
  }
  std::vector<double> out;
  out.reserve(g.edge_count());
  for (const Edge& e : g.edges()) {
    out.push_back(opinions[e.head] - opinions[e.tail]);
  }
  return out;
}

void apply_event_delta(const Graph& g, DeltaState& delta, const Event& ev,
                       const ModelParams& params) {
  require_low_degree(g);
  require_shape(g, delta.values.size(), "apply_event_delta");
  double center = delta.values.at(ev.edge);
  if (std::fabs(center) > params.theta) return;
  if (center == 1.0 && ev.tie == TieBit::second) center = -1.0;
  linear_update(g, delta.values, ev.edge, center, params.mu, [](double x) { return mod_s(x); },
                true);
}

void apply_event_xi(const Graph& g, XiState& xi, const Event& ev, const ModelParams& params) {
  require_shape(g, xi.values.size(), "apply_event_xi");
  const double center = xi.values.at(ev.edge);
  linear_update(g, xi.values, ev.edge, center, params.mu, [](double x) { return x; }, false);
}

double check_consistency(const Graph& g, std::span<const double> opinions, const DeltaState& delta) {
  require_shape(g, delta.values.size(), "check_consistency");
  const DeltaState fresh = delta_from_config(g, opinions);
  double worst = 0.0;
  for (std::size_t i = 0; i < fresh.values.size(); ++i) {
    worst = std::max(worst, circle_dist(fresh.values[i], delta.values[i]));
  }
  return worst;
}

double winding_sum(const Graph& g, const DeltaState& delta) {
  if (!g.is_oriented_cycle()) {
    throw std::invalid_argument("winding_sum requires a consistently oriented cycle");
  }
  require_shape(g, delta.values.size(), "winding_sum");
  double sum = 0.0;
  for (double d : delta.values) sum += d;
  return sum;
}

double incident_abs_sum(const Graph& g, std::span<const double> delta, EdgeId edge) {
  const Edge& c = g.edge(edge);
  double sum = std::fabs(delta[edge]);
  for (VertexId w : {c.tail, c.head}) {
    for (EdgeId other : g.incident(w)) {
      if (other != edge) sum += std::fabs(delta[other]);
    }
  }
  return sum;
}

DifferenceTracker::DifferenceTracker(const Graph& g, std::span<const double> initial_opinions,
                                     ModelParams params)
    : graph_(&g),
      params_(params),
      delta_(delta_from_config(g, initial_opinions)),
      xi_{std::vector<double>(g.edge_count(), 1.0)} {
  require_low_degree(g);
}

void DifferenceTracker::observe(const Event& ev, std::span<const double> opinions_after) {
  const Graph& g = *graph_;
  const double center = delta_.values.at(ev.edge);
  if (std::fabs(center) > params_.theta) return;
  if (center == 1.0) {
    ++tie_events_;
    const Edge& c = g.edge(ev.edge);
    for (VertexId w : {c.tail, c.head}) {
      for (EdgeId id : g.incident(w)) {
        const Edge& e = g.edge(id);
        delta_.values[id] = mod_s(opinions_after[e.head] - opinions_after[e.tail]);
      }
    }
  } else {
    apply_event_delta(g, delta_, ev, params_);
  }
  apply_event_xi(g, xi_, ev, params_);
}

}  // namespace compass
