#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compass/opinion_space.hpp"
#include "compass/topology.hpp"

namespace compass {

/// Observables of one configuration at one time.
struct MetricSample {
  double time = 0.0;
  double w = 0.0;                  ///< sum of |delta| over all edges
  double max_neighbor_dist = 0.0;  ///< largest |delta|
  double mean_abs_delta = 0.0;     ///< w / edge count
  double opinion_range = 0.0;      ///< shortest closed arc (or interval) holding every opinion
  double sign_flip_fraction = 0.0; ///< share of head-to-tail edge pairs with opposite signs

  friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

enum class ConsensusClass : std::uint8_t { strong_like, weak_only_like, none };
std::string to_string(ConsensusClass c);

enum class StopReason : std::uint8_t { max_events, max_time, converged, schedule_exhausted };
std::string to_string(StopReason r);

/// Time series and terminal summary of one run.
struct RunRecord {
  OpinionSpace space = OpinionSpace::circle;
  ModelParams params;
  std::optional<std::uint64_t> seed;
  std::vector<MetricSample> samples;  ///< ordered by time
  MetricSample terminal;
  std::uint64_t events_applied = 0;
  double final_time = 0.0;
  StopReason stop_reason = StopReason::max_events;
  /// False when a "W below tolerance" rule ran out of budget first.
  bool predicate_met = true;
  ConsensusClass consensus = ConsensusClass::none;
  std::optional<double> limit;
  std::optional<std::int64_t> winding_k;
  double wall_seconds = 0.0;
};

/// Metrics of a configuration; edge differences are circular gaps on the
/// circle and plain differences on the interval.
MetricSample compute_metrics(const Graph& g, OpinionSpace space, std::span<const double> opinions,
                             double time = 0.0);

/// Same, with precomputed edge differences.
MetricSample compute_metrics(const Graph& g, OpinionSpace space, std::span<const double> opinions,
                             std::span<const double> delta, double time);

/// Length of the shortest closed arc containing every point, via the largest
/// gap between sorted representatives. 0 for fewer than two points.
double circle_range(std::span<const double> opinions);

/// Finite-run stand-in for the asymptotic consensus notions: strong-like if
/// the range is below tol, weak-only-like if only neighbours agree.
ConsensusClass consensus_classify(const MetricSample& terminal, double tol);
ConsensusClass consensus_classify(const RunRecord& record, double tol);

struct LimitReport {
  double limit = 0.0;
  /// Interval space: |limit - initial mean|.
  std::optional<double> mean_residual;
  /// Circle space: the integer nearest (n * limit - sum of initial opinions) / 2.
  std::optional<std::int64_t> k;
  /// Circle space: distance of that quotient to k.
  std::optional<double> k_residual;
};

/// Common value of a (nearly) agreeing configuration together with the
/// conservation check for its space. Throws std::invalid_argument if the
/// final configuration is not strong-like at `tol`.
LimitReport extract_limits(OpinionSpace space, std::span<const double> initial,
                           std::span<const double> final_opinions, double tol = 1e-6);

/// Point of the circle at the centre of mass of opinions that all sit inside
/// an arc shorter than 1, measured from the first opinion.
double circular_anchor_mean(std::span<const double> opinions);

/// Arithmetic mean over a window; throws std::invalid_argument when empty.
double spatial_average(std::span<const double> values);

struct MonotoneReport {
  std::vector<double> means;
  std::vector<double> standard_errors;
  bool passed = true;
  /// Index of the first probe whose mean exceeds its predecessor by more than 2 SE.
  std::optional<std::size_t> first_violation;
};

/// Checks a replicate estimate of a non-increasing curve: estimates[i][r] is
/// replicate r at probe i. Needs >= 2 probes and >= 50 replicates.
MonotoneReport monotone_mean_delta_check(std::span<const double> times,
                                         const std::vector<std::vector<double>>& estimates);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Two-sided one-sample Kolmogorov-Smirnov test against unif(lo, hi). Exact
/// null distribution for n <= 100, limiting Kolmogorov distribution above.
KsResult ks_test_uniform(std::span<const double> samples, double lo, double hi);

/// Survival function of the exact KS statistic D_n, P(D_n >= d).
double kolmogorov_exact_sf(std::size_t n, double d);
/// Survival function of the limiting Kolmogorov distribution, P(K > x).
double kolmogorov_limit_sf(double x);

/// KS test of replicate samples of one vertex against unif(-1, 1]. Requires
/// >= 500 samples and rejects degenerate (all equal) input.
KsResult marginal_uniformity_test(std::span<const double> samples);

/// Fraction of head-to-tail edge pairs (head of e == tail of e') whose
/// differences have strictly negative product. Throws if there are fewer
/// than two edges.
double sign_product_rate(const Graph& g, std::span<const double> delta);

/// Mergeable mean/variance accumulator (Chan et al. pairwise update).
class RunningStats {
 public:
  void add(double x) noexcept;
  void merge(const RunningStats& other) noexcept;
  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two values.
  double variance() const noexcept;
  double stddev() const noexcept;
  double standard_error() const noexcept;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Per-probe aggregate of several runs sampled on a common probe grid.
class SeriesAggregate {
 public:
  void add(const RunRecord& record);
  void merge(const SeriesAggregate& other);

  struct Row {
    double time = 0.0;
    RunningStats w, max_neighbor_dist, mean_abs_delta, opinion_range, sign_flip_fraction;
  };
  const std::vector<Row>& rows() const noexcept { return rows_; }

 private:
  std::vector<Row> rows_;
};

inline constexpr const char* timeseries_schema_line = "# compass-timeseries v1";

/// Writes the schema comment, the column header and one row per sample with
/// round-trip precision.
void write_timeseries_csv(std::ostream& out, const RunRecord& record);

/// JSON text of a run record (params, seed, samples, terminal summary).
std::string run_record_json(const RunRecord& record, int indent = 2);

}  // namespace compass
