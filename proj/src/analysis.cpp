#include "compass/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "compass/difference.hpp"

namespace compass {

std::string to_string(ConsensusClass c) {
  switch (c) {
    case ConsensusClass::strong_like:
      return "strong-like";
    case ConsensusClass::weak_only_like:
      return "weak-only-like";
    case ConsensusClass::none:
      return "none";
  }
  return "unknown";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::max_events:
      return "max_events";
    case StopReason::max_time:
      return "max_time";
    case StopReason::converged:
      return "converged";
    case StopReason::schedule_exhausted:
      return "schedule_exhausted";
  }
  return "unknown";
}

namespace {

struct Arc {
  double start = 0.0;
  double length = 0.0;
};

// Shortest closed arc holding all points: the complement of the largest gap
// between circularly sorted representatives.
Arc smallest_arc(std::span<const double> opinions) {
  if (opinions.size() < 2) {
    return {opinions.empty() ? 0.0 : opinions.front(), 0.0};
  }
  std::vector<double> sorted(opinions.begin(), opinions.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double largest_gap = sorted.front() + 2.0 - sorted.back();
  std::size_t after_gap = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = sorted[i] - sorted[i - 1];
    if (gap > largest_gap) {
      largest_gap = gap;
      after_gap = i;
    }
  }
  // Measure the arc from its own endpoints; 2 - gap would lose an ulp.
  if (after_gap == 0) return {sorted.front(), sorted.back() - sorted.front()};
  return {sorted[after_gap], sorted[after_gap - 1] + 2.0 - sorted[after_gap]};
}

std::size_t sign_flip_pairs(const Graph& g, std::span<const double> delta, std::size_t& pairs) {
  std::size_t flips = 0;
  pairs = 0;
  for (VertexId w = 0; w < g.vertex_count(); ++w) {
    for (EdgeId in : g.incident(w)) {
      if (g.edge(in).head != w) continue;
      for (EdgeId out : g.incident(w)) {
        if (g.edge(out).tail != w) continue;
        ++pairs;
        if (delta[in] * delta[out] < 0.0) ++flips;
      }
    }
  }
  return flips;
}

}  // namespace

double circle_range(std::span<const double> opinions) { return smallest_arc(opinions).length; }

MetricSample compute_metrics(const Graph& g, OpinionSpace space, std::span<const double> opinions,
                             double time) {
  if (space == OpinionSpace::circle) {
    const DeltaState delta = delta_from_config(g, opinions);
    return compute_metrics(g, space, opinions, delta.values, time);
  }
  const std::vector<double> delta = interval_differences(g, opinions);
  return compute_metrics(g, space, opinions, delta, time);
}

MetricSample compute_metrics(const Graph& g, OpinionSpace space, std::span<const double> opinions,
                             std::span<const double> delta, double time) {
  if (delta.size() != g.edge_count() || opinions.size() != g.vertex_count()) {
    throw std::invalid_argument("compute_metrics: shape mismatch");
  }
  MetricSample s;
  s.time = time;
  for (double d : delta) {
    const double a = std::fabs(d);
    s.w += a;
    s.max_neighbor_dist = std::max(s.max_neighbor_dist, a);
  }
  s.mean_abs_delta = delta.empty() ? 0.0 : s.w / static_cast<double>(delta.size());
  if (space == OpinionSpace::circle) {
    s.opinion_range = circle_range(opinions);
  } else if (!opinions.empty()) {
    const auto [lo, hi] = std::minmax_element(opinions.begin(), opinions.end());
    s.opinion_range = *hi - *lo;
  }
  std::size_t pairs = 0;
  const std::size_t flips = sign_flip_pairs(g, delta, pairs);
  s.sign_flip_fraction = pairs ? static_cast<double>(flips) / static_cast<double>(pairs) : 0.0;
  return s;
}

ConsensusClass consensus_classify(const MetricSample& terminal, double tol) {
  if (terminal.opinion_range < tol) return ConsensusClass::strong_like;
  if (terminal.max_neighbor_dist < tol) return ConsensusClass::weak_only_like;
  return ConsensusClass::none;
}

ConsensusClass consensus_classify(const RunRecord& record, double tol) {
  return consensus_classify(record.terminal, tol);
}

double circular_anchor_mean(std::span<const double> opinions) {
  if (opinions.empty()) {
    throw std::invalid_argument("circular_anchor_mean: no opinions");
  }
  const double anchor = opinions.front();
  double offset = 0.0;
  for (double x : opinions) offset += mod_s(x - anchor);
  return mod_s(anchor + offset / static_cast<double>(opinions.size()));
}

LimitReport extract_limits(OpinionSpace space, std::span<const double> initial,
                           std::span<const double> final_opinions, double tol) {
  if (initial.size() != final_opinions.size() || initial.empty()) {
    throw std::invalid_argument("extract_limits: initial and final configurations differ in size");
  }
  const double n = static_cast<double>(initial.size());
  double initial_sum = 0.0;
  for (double x : initial) initial_sum += x;

  LimitReport report;
  if (space == OpinionSpace::interval) {
    const auto [lo, hi] = std::minmax_element(final_opinions.begin(), final_opinions.end());
    if (!(*hi - *lo < tol)) {
      throw std::invalid_argument("extract_limits: run has not reached consensus at tol");
    }
    report.limit = 0.5 * (*lo + *hi);
    report.mean_residual = std::fabs(report.limit - initial_sum / n);
    return report;
  }

  const Arc arc = smallest_arc(final_opinions);
  if (!(arc.length < tol)) {
    throw std::invalid_argument("extract_limits: run has not reached consensus at tol");
  }
  report.limit = mod_s(arc.start + 0.5 * arc.length);
  const double quotient = (n * report.limit - initial_sum) / 2.0;
  const double k = std::nearbyint(quotient);
  report.k = static_cast<std::int64_t>(k);
  report.k_residual = std::fabs(quotient - k);
  return report;
}

double spatial_average(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("spatial_average: empty window");
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

MonotoneReport monotone_mean_delta_check(std::span<const double> times,
                                         const std::vector<std::vector<double>>& estimates) {
  if (times.size() < 2 || estimates.size() != times.size()) {
    throw std::invalid_argument("monotone_mean_delta_check: need >= 2 probe times, one estimate row each");
  }
  MonotoneReport report;
  for (const auto& row : estimates) {
    if (row.size() < 50) {
      throw std::invalid_argument("monotone_mean_delta_check: need >= 50 replicates per probe, got " +
                                  std::to_string(row.size()));
    }
    RunningStats stats;
    for (double v : row) stats.add(v);
    report.means.push_back(stats.mean());
    report.standard_errors.push_back(stats.standard_error());
  }
  for (std::size_t i = 1; i < report.means.size(); ++i) {
    if (report.means[i] > report.means[i - 1] + 2.0 * report.standard_errors[i - 1]) {
      report.passed = false;
      report.first_violation = i;
      break;
    }
  }
  return report;
}

namespace {

using Matrix = std::vector<double>;

Matrix multiply(const Matrix& a, const Matrix& b, std::size_t m) {
  Matrix c(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = a[i * m + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c[i * m + j] += aik * b[k * m + j];
    }
  }
  return c;
}

// Matrix power with a base-10 exponent carried alongside to avoid overflow.
void power(const Matrix& a, std::size_t m, std::size_t n, Matrix& out, int& exponent) {
  if (n == 1) {
    out = a;
    exponent = 0;
    return;
  }
  power(a, m, n / 2, out, exponent);
  Matrix squared = multiply(out, out, m);
  int squared_exp = 2 * exponent;
  if (n % 2 == 0) {
    out = std::move(squared);
    exponent = squared_exp;
  } else {
    out = multiply(a, squared, m);
    exponent = squared_exp;
  }
  if (out[(m / 2) * m + m / 2] > 1e140) {
    for (double& v : out) v *= 1e-140;
    exponent += 140;
  }
}

// P(D_n < d), Marsaglia, Tsang & Wang (2003).
double kolmogorov_exact_cdf(std::size_t n, double d) {
  const double nd = static_cast<double>(n) * d;
  const std::size_t k = static_cast<std::size_t>(nd) + 1;
  const std::size_t m = 2 * k - 1;
  const double h = static_cast<double>(k) - nd;
  Matrix hm(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i + 1 >= j) hm[i * m + j] = 1.0;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    hm[i * m] -= std::pow(h, static_cast<double>(i + 1));
    hm[(m - 1) * m + i] -= std::pow(h, static_cast<double>(m - i));
  }
  if (2.0 * h - 1.0 > 0.0) hm[(m - 1) * m] += std::pow(2.0 * h - 1.0, static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i + 1 > j) {
        for (std::size_t g = 1; g <= i + 1 - j; ++g) hm[i * m + j] /= static_cast<double>(g);
      }
    }
  }
  Matrix q;
  int exponent = 0;
  power(hm, m, n, q, exponent);
  double s = q[(k - 1) * m + (k - 1)];
  for (std::size_t i = 1; i <= n; ++i) {
    s = s * static_cast<double>(i) / static_cast<double>(n);
    if (s < 1e-140) {
      s *= 1e140;
      exponent -= 140;
    }
  }
  return s * std::pow(10.0, exponent);
}

}  // namespace

double kolmogorov_exact_sf(std::size_t n, double d) {
  if (n == 0) throw std::invalid_argument("kolmogorov_exact_sf: n must be positive");
  if (d <= 0.0) return 1.0;
  if (d >= 1.0) return 0.0;
  return std::clamp(1.0 - kolmogorov_exact_cdf(n, d), 0.0, 1.0);
}

double kolmogorov_limit_sf(double x) {
  if (x <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.0) {
    // Small-argument theta series for the CDF converges much faster here.
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * pi * pi / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sf += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

KsResult ks_test_uniform(std::span<const double> samples, double lo, double hi) {
  if (samples.empty()) throw std::invalid_argument("ks_test_uniform: no samples");
  if (!(hi > lo)) throw std::invalid_argument("ks_test_uniform: empty support");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = std::clamp((sorted[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult r;
  r.statistic = d;
  r.n = sorted.size();
  r.p_value = sorted.size() <= 100 ? kolmogorov_exact_sf(sorted.size(), d)
                                   : kolmogorov_limit_sf(std::sqrt(n) * d);
  return r;
}

KsResult marginal_uniformity_test(std::span<const double> samples) {
  if (samples.size() < 500) {
    throw std::invalid_argument("marginal_uniformity_test: need >= 500 samples, got " +
                                std::to_string(samples.size()));
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) {
    throw std::invalid_argument("marginal_uniformity_test: degenerate sample (all values equal)");
  }
  return ks_test_uniform(samples, -1.0, 1.0);
}

double sign_product_rate(const Graph& g, std::span<const double> delta) {
  if (g.edge_count() < 2) {
    throw std::invalid_argument("sign_product_rate: need at least two edges");
  }
  if (delta.size() != g.edge_count()) {
    throw std::invalid_argument("sign_product_rate: shape mismatch");
  }
  std::size_t pairs = 0;
  const std::size_t flips = sign_flip_pairs(g, delta, pairs);
  if (pairs == 0) {
    throw std::invalid_argument("sign_product_rate: graph has no head-to-tail edge pairs");
  }
  return static_cast<double>(flips) / static_cast<double>(pairs);
}

void RunningStats::add(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
  n_ += other.n_;
}

double RunningStats::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::stddev() const noexcept { return std::sqrt(variance()); }

double RunningStats::standard_error() const noexcept {
  return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
}

void SeriesAggregate::add(const RunRecord& record) {
  if (rows_.size() < record.samples.size()) rows_.resize(record.samples.size());
  for (std::size_t i = 0; i < record.samples.size(); ++i) {
    const MetricSample& s = record.samples[i];
    Row& row = rows_[i];
    if (row.w.count() == 0) row.time = s.time;
    row.w.add(s.w);
    row.max_neighbor_dist.add(s.max_neighbor_dist);
    row.mean_abs_delta.add(s.mean_abs_delta);
    row.opinion_range.add(s.opinion_range);
    row.sign_flip_fraction.add(s.sign_flip_fraction);
  }
}

void SeriesAggregate::merge(const SeriesAggregate& other) {
  if (rows_.size() < other.rows_.size()) rows_.resize(other.rows_.size());
  for (std::size_t i = 0; i < other.rows_.size(); ++i) {
    Row& row = rows_[i];
    const Row& o = other.rows_[i];
    if (row.w.count() == 0) row.time = o.time;
    row.w.merge(o.w);
    row.max_neighbor_dist.merge(o.max_neighbor_dist);
    row.mean_abs_delta.merge(o.mean_abs_delta);
    row.opinion_range.merge(o.opinion_range);
    row.sign_flip_fraction.merge(o.sign_flip_fraction);
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json sample_json(const MetricSample& s) {
  return {{"time", s.time},
          {"W", s.w},
          {"max_neighbor_dist", s.max_neighbor_dist},
          {"mean_abs_delta", s.mean_abs_delta},
          {"opinion_range", s.opinion_range},
          {"sign_flip_fraction", s.sign_flip_fraction}};
}

}  // namespace

void write_timeseries_csv(std::ostream& out, const RunRecord& record) {
  out << timeseries_schema_line << '\n';
  out << "time,W,max_neighbor_dist,mean_abs_delta,opinion_range,sign_flip_fraction\n";
  for (const MetricSample& s : record.samples) {
    out << fmt_double(s.time) << ',' << fmt_double(s.w) << ',' << fmt_double(s.max_neighbor_dist)
        << ',' << fmt_double(s.mean_abs_delta) << ',' << fmt_double(s.opinion_range) << ','
        << fmt_double(s.sign_flip_fraction) << '\n';
  }
}

std::string run_record_json(const RunRecord& record, int indent) {
  nlohmann::ordered_json j;
  j["space"] = std::string(to_string(record.space));
  j["params"] = {{"mu", record.params.mu},
                 {"theta", record.params.bounded() ? nlohmann::ordered_json(record.params.theta)
                                                   : nlohmann::ordered_json("inf")}};
  j["seed"] = record.seed ? nlohmann::ordered_json(*record.seed) : nlohmann::ordered_json(nullptr);
  j["events_applied"] = record.events_applied;
  j["final_time"] = record.final_time;
  j["stop_reason"] = to_string(record.stop_reason);
  j["predicate_met"] = record.predicate_met;
  j["consensus"] = to_string(record.consensus);
  j["limit"] = record.limit ? nlohmann::ordered_json(*record.limit) : nlohmann::ordered_json(nullptr);
  j["winding_k"] =
      record.winding_k ? nlohmann::ordered_json(*record.winding_k) : nlohmann::ordered_json(nullptr);
  j["terminal"] = sample_json(record.terminal);
  auto samples = nlohmann::ordered_json::array();
  for (const MetricSample& s : record.samples) samples.push_back(sample_json(s));
  j["samples"] = std::move(samples);
  return j.dump(indent);
}

}  // namespace compass
