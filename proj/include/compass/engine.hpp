#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "compass/analysis.hpp"
#include "compass/event.hpp"
#include "compass/opinion_space.hpp"
#include "compass/topology.hpp"

namespace compass {

/// Full dynamic state of one trajectory (the random source lives in the
/// EventStream).
struct SimState {
  std::shared_ptr<const Graph> graph;
  OpinionSpace space = OpinionSpace::circle;
  std::vector<double> opinions;
  double clock = 0.0;
  std::uint64_t events_applied = 0;
  ModelParams params;
};

struct IidUniform {
  std::uint64_t seed = 0;
};
struct Explicit {
  std::vector<double> values;
};
struct Constant {
  double value = 0.0;
};
using InitSpec = std::variant<IidUniform, Explicit, Constant>;

/// Builds the initial state. IidUniform draws unif(-1, 1] on the circle and
/// unif[0, 1] on the interval; explicit values are validated against the
/// space. Throws std::invalid_argument on bad input.
SimState make_state(std::shared_ptr<const Graph> graph, OpinionSpace space, const InitSpec& init,
                    const ModelParams& params);

/// Generator behind Poisson streams and random initial data.
using Rng = std::mt19937_64;

/// Seeds a generator from (seed, stream) through std::seed_seq, so every
/// (seed, stream) pair gives an independent, platform-stable sequence.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng) noexcept;
/// Uniform integer in [0, n) by rejection (n > 0).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n) noexcept;

/// Source of events: unit-rate Poisson clocks on every edge, or a fixed
/// script.
///
/// A Poisson stream draws, per event and in this order: the exponential
/// waiting time with rate |E|, the edge index, and the tie bit. The tie bit is
/// drawn for every event, whether or not it is used.
class EventStream {
 public:
  static EventStream poisson(std::uint64_t seed);
  /// Times must be non-negative and strictly increasing.
  static EventStream scripted(std::vector<Event> events);

  bool is_poisson() const noexcept { return poisson_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Next event after the state's clock, or nullopt once a script is used up.
  /// The event stays pending until pop() so a stop rule may look ahead.
  const std::optional<Event>& peek(const SimState& state);
  void pop() noexcept { pending_.reset(); }
  std::optional<Event> next(const SimState& state);

  /// Remaining scripted events (including a pending one).
  std::size_t remaining() const noexcept;

 private:
  friend std::vector<std::byte> snapshot(const SimState&, const EventStream&);
  friend struct SnapshotReader;

  bool poisson_ = true;
  std::uint64_t seed_ = 0;
  Rng rng_;
  std::vector<Event> script_;
  std::size_t cursor_ = 0;
  std::optional<Event> pending_;
};

/// Applies one interaction in place. Only the two endpoints can change.
void apply_event(SimState& state, const Event& ev);

/// Stops at whichever limit comes first. `w_below` asks to stop as soon as
/// W < tol; hitting another limit first is reported through
/// RunRecord::predicate_met rather than as an error.
struct StopRule {
  std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
  double max_time = std::numeric_limits<double>::infinity();
  std::optional<double> w_below;

  static StopRule events(std::uint64_t n) { return {n, std::numeric_limits<double>::infinity(), {}}; }
  static StopRule time(double t) { return {std::numeric_limits<std::uint64_t>::max(), t, {}}; }
  static StopRule converged(double tol, std::uint64_t budget) {
    return {budget, std::numeric_limits<double>::infinity(), tol};
  }
};

struct RunOptions {
  /// Probe times; each sample shows the state after the last event at or
  /// before the probe. Probes at or before the start clock collapse into the
  /// initial sample.
  std::vector<double> probes;
  /// Called after every applied event with the updated state.
  std::function<void(const SimState&, const Event&)> on_event;
};

/// Drives `state` with `stream` until `stop` fires. The record always starts
/// with a sample of the initial state and ends with the terminal sample in
/// RunRecord::terminal.
RunRecord run(SimState& state, EventStream& stream, const StopRule& stop,
              const RunOptions& options = {});

inline constexpr std::uint32_t snapshot_version = 1;

/// Binary checkpoint of a state and its event stream, including the
/// generator position. Layout documented in docs/formats.md.
std::vector<std::byte> snapshot(const SimState& state, const EventStream& stream);

struct Restored {
  SimState state;
  EventStream stream;
};

/// Inverse of snapshot(). Throws std::runtime_error on empty, truncated,
/// corrupted or version-mismatched input.
Restored restore(std::span<const std::byte> bytes);

}  // namespace compass
