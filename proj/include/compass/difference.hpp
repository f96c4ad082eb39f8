#pragma once

#include <span>
#include <vector>

#include "compass/event.hpp"
#include "compass/opinion_space.hpp"
#include "compass/topology.hpp"

namespace compass {

/// Signed circular gap per oriented edge: opinion(tail) + delta = opinion(head)
/// modulo the circle, each entry in (-1, 1].
struct DeltaState {
  std::vector<double> values;
};

/// Modulus-free companion of DeltaState, non-negative and unbounded above.
struct XiState {
  std::vector<double> values;
};

/// Edge differences read off a circle configuration. Antipodal neighbours
/// get +1.
DeltaState delta_from_config(const Graph& g, std::span<const double> opinions);

/// Plain differences head - tail for interval-valued opinions.
std::vector<double> interval_differences(const Graph& g, std::span<const double> opinions);

/// Applies one event to the difference process: the event's edge shrinks by
/// (1 - 2 mu), every edge sharing exactly one endpoint with it gains
/// +-mu * delta(edge) (sign from the relative orientation), wrapped onto
/// (-1, 1].
///
/// The pure process resolves an exactly antipodal centre (delta == 1) by the
/// tie bit: TieBit::first contracts it as +1, TieBit::second as -1. Use
/// DifferenceTracker to follow an opinion trajectory through ties.
///
/// Throws std::invalid_argument if the graph has a vertex of degree > 2.
void apply_event_delta(const Graph& g, DeltaState& delta, const Event& ev,
                       const ModelParams& params);

/// Same linear rule without the modulus, for the domination process.
void apply_event_xi(const Graph& g, XiState& xi, const Event& ev, const ModelParams& params);

/// Largest circle distance between the read-out of `opinions` and `delta`.
/// Throws std::invalid_argument on a length mismatch.
double check_consistency(const Graph& g, std::span<const double> opinions, const DeltaState& delta);

/// Sum of all edge differences around a consistently oriented cycle; an even
/// integer up to rounding. Throws std::invalid_argument for other graphs.
double winding_sum(const Graph& g, const DeltaState& delta);

/// Sum over the edges touching either endpoint of `edge` of |delta|.
double incident_abs_sum(const Graph& g, std::span<const double> delta, EdgeId edge);

/// Co-evolves the difference process and the domination process alongside
/// an opinion trajectory. Feed it every applied event together with the
/// opinions right after that event.
///
/// Antipodal (tie) events are handled by re-reading the affected edges from
/// the opinions, since the direction of the contraction is not a function of
/// the differences alone.
class DifferenceTracker {
 public:
  DifferenceTracker(const Graph& g, std::span<const double> initial_opinions, ModelParams params);

  void observe(const Event& ev, std::span<const double> opinions_after);

  const DeltaState& delta() const noexcept { return delta_; }
  const XiState& xi() const noexcept { return xi_; }
  std::size_t tie_events() const noexcept { return tie_events_; }

 private:
  const Graph* graph_;
  ModelParams params_;
  DeltaState delta_;
  XiState xi_;
  std::size_t tie_events_ = 0;
};

}  // namespace compass
