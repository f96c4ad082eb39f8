#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "compass/analysis.hpp"
#include "compass/engine.hpp"

namespace compass {

/// A canned experiment: everything needed to build a state and its stream.
struct Scenario {
  std::string name;
  std::shared_ptr<const Graph> graph;
  OpinionSpace space = OpinionSpace::circle;
  InitSpec init;
  ModelParams params;
  /// Poisson seed or a fixed script.
  std::variant<std::uint64_t, std::vector<Event>> stream;
  std::vector<double> probes;
};

SimState scenario_state(const Scenario& s);
EventStream scenario_stream(const Scenario& s);

/// Builds and runs a scenario to `stop`. The final state is written to
/// `final_state` when given.
RunRecord execute(const Scenario& s, const StopRule& stop, SimState* final_state = nullptr);

/// Event pattern that brings the difference sum of a path segment below a
/// target, whatever the starting differences.
struct FlattenPattern {
  std::vector<EdgeId> edges;  ///< edges to fire, in order
  std::size_t sweeps = 0;     ///< forward sweeps started
  double xi_sum = 0.0;        ///< dominating sum over the segment after the pattern
};

/// Forward sweeps over `segment` (edge ids in path order) while a dominating
/// process started from all ones runs on the segment alone; mass pushed onto
/// edges outside the segment is dropped. Stops at the first event after
/// which the segment sum is at most `eps`. Depends only on the segment
/// length, mu and eps. Throws std::invalid_argument for eps <= 0 or an
/// invalid mu.
FlattenPattern flatten_schedule(std::span<const EdgeId> segment, double eps, const ModelParams& params);

/// Checks that consecutive segment edges share a vertex and no edge repeats.
void check_segment(const Graph& g, std::span<const EdgeId> segment);

/// Timed events for a pattern: times start + dt, start + 2 dt, ...
std::vector<Event> pattern_events(std::span<const EdgeId> edges, double start, double dt = 1.0);

/// Coupled pair on P_{2n-1} sharing one script: the ramp v/n - 1 and the
/// same ramp with vertex n moved from 0 to 1.
struct ButterflyPair {
  Scenario base;
  Scenario variant;
  std::size_t n = 0;
};

inline constexpr std::size_t butterfly_alternations = 200;

/// Script: flatten the two halves separately, alternate single events on
/// the two middle edges, then flatten the whole path. Throws for n < 3.
ButterflyPair butterfly_scenario(std::size_t n, const ModelParams& params = {});

/// Same schedule on [0, 1] from the ramp v/(2n), variant with vertex n at 1.
ButterflyPair butterfly_deffuant(std::size_t n, const ModelParams& params = {});

struct ButterflyReport {
  double base_limit = 0.0;
  double variant_limit = 0.0;
  /// Circle distance on the circle, plain distance on the interval.
  double distance = 0.0;
  double base_range = 0.0;
  double variant_range = 0.0;
};

ButterflyReport run_butterfly(const ButterflyPair& pair);

/// Section P_K with K = ceil(2/c) (ceil(4/c) + 3) + 1 and every edge
/// difference c/2, scripted to flatten e_3 .. e_{K-3} down to c/3 while the
/// two edges at each end stay idle. Throws unless 0 < c <= 1.
Scenario signflip_scenario(double c, const ModelParams& params = {});

std::size_t signflip_section_length(double c);

struct SignflipReport {
  bool flipped = false;
  /// Events applied when the first flip was seen (0: already in the init).
  std::optional<std::uint64_t> first_flip_event;
  /// Id of the first edge of the first adjacent pair with negative product.
  std::optional<EdgeId> first_flip_edge;
  std::uint64_t events = 0;
};

/// Runs a scenario and watches adjacent edge-difference products after
/// every event.
SignflipReport run_signflip(const Scenario& s);

struct ComparisonReport {
  std::size_t n = 0;
  std::vector<double> deffuant_limits;
  std::vector<double> compass_limits;
  RunningStats deffuant_stats;
  KsResult compass_ks;
  /// Replicates whose compass run did not fit in a half circle in budget.
  std::size_t unresolved = 0;
};

/// Coupled uniform inits (u on [0, 1], 2u - 1 on the circle) on P_n driven
/// by one Poisson stream per replicate. The compass run stops once all
/// opinions fit in an open half circle; from then on the lifted mean is
/// conserved and gives L_c. The interval limit is the conserved mean.
ComparisonReport deffuant_vs_compass(std::size_t n, std::size_t replicates, std::uint64_t seed,
                                     const ModelParams& params = {},
                                     std::uint64_t event_budget = 50'000'000);

}  // namespace compass
