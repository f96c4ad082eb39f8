#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "catch_amalgamated.hpp"
#include "compass/analysis.hpp"
#include "compass/difference.hpp"

using namespace compass;
using Catch::Approx;

namespace {

// Shortest covering arc by trying every point as the arc's start.
double brute_range(const std::vector<double>& x) {
  double best = 2.0;
  for (double start : x) {
    double span = 0.0;
    for (double y : x) {
      double d = std::fmod(y - start + 4.0, 2.0);
      span = std::max(span, d);
    }
    best = std::min(best, span);
  }
  return x.size() < 2 ? 0.0 : best;
}

}  // namespace

TEST_CASE("metrics of small configurations") {
  const Graph r3 = build_ring(3);
  const std::vector<double> x{0.0, 2.0 / 3.0, -2.0 / 3.0};
  const MetricSample m = compute_metrics(r3, OpinionSpace::circle, x, 1.5);
  CHECK(m.time == 1.5);
  CHECK(m.w == Approx(2.0));
  CHECK(m.max_neighbor_dist == Approx(2.0 / 3.0));
  CHECK(m.mean_abs_delta == Approx(2.0 / 3.0));
  CHECK(m.opinion_range == Approx(4.0 / 3.0));
  CHECK(m.sign_flip_fraction == 0.0);

  const Graph p = build_path(4);
  const std::vector<double> y{0.1, 0.4, 0.2, 0.9};
  const MetricSample q = compute_metrics(p, OpinionSpace::interval, y);
  CHECK(q.w == Approx(0.3 + 0.2 + 0.7));
  CHECK(q.opinion_range == Approx(0.8));
  CHECK(q.sign_flip_fraction == Approx(1.0));
}

TEST_CASE("circle range agrees with a brute-force search") {
  CHECK(circle_range(std::vector<double>{}) == 0.0);
  CHECK(circle_range(std::vector<double>{0.3}) == 0.0);
  CHECK(circle_range(std::vector<double>{0.9, -0.9}) == Approx(0.2));
  CHECK(circle_range(std::vector<double>{0.5, -0.5}) == Approx(1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  std::uniform_int_distribution<int> len(2, 12);
  for (int i = 0; i < 3000; ++i) {
    std::vector<double> x(len(rng));
    const double centre = s(rng), width = 2.0 * std::fabs(s(rng));
    for (double& v : x) v = mod_s(centre + width * 0.5 * s(rng));
    REQUIRE(circle_range(x) == Approx(brute_range(x)).margin(1e-12));
  }
}

TEST_CASE("consensus classes") {
  MetricSample s;
  s.opinion_range = 1e-8;
  s.max_neighbor_dist = 1e-8;
  CHECK(consensus_classify(s, 1e-6) == ConsensusClass::strong_like);
  s.opinion_range = 0.5;
  CHECK(consensus_classify(s, 1e-6) == ConsensusClass::weak_only_like);
  s.max_neighbor_dist = 0.1;
  CHECK(consensus_classify(s, 1e-6) == ConsensusClass::none);
  CHECK(to_string(ConsensusClass::weak_only_like) == "weak-only-like");
  RunRecord r;
  r.terminal.opinion_range = 0.0;
  CHECK(consensus_classify(r, 1e-6) == ConsensusClass::strong_like);
}

TEST_CASE("limit extraction") {
  SECTION("interval") {
    const std::vector<double> init{0.1, 0.2, 0.6};
    const std::vector<double> fin(3, 0.3);
    const LimitReport r = extract_limits(OpinionSpace::interval, init, fin);
    CHECK(r.limit == Approx(0.3));
    CHECK(*r.mean_residual < 1e-15);
    CHECK_FALSE(r.k.has_value());
  }
  SECTION("circle across the +-1 point") {
    const std::vector<double> init{0.9, -0.9, 0.95, 1.0};
    const std::vector<double> fin{1.0, -1.0 + 1e-9, 1.0 - 1e-9, 1.0};
    const LimitReport r = extract_limits(OpinionSpace::circle, init, fin, 1e-6);
    CHECK(circle_dist(r.limit, 1.0) < 1e-8);
    // (4 * 1 - 1.95) / 2 = 1.025: nearest integer 1.
    CHECK(*r.k == 1);
    CHECK(*r.k_residual == Approx(0.025).margin(1e-9));
  }
  SECTION("rejects configurations without consensus") {
    const std::vector<double> init{0.0, 0.5};
    CHECK_THROWS_AS(extract_limits(OpinionSpace::circle, init, init), std::invalid_argument);
    CHECK_THROWS_AS(extract_limits(OpinionSpace::interval, init, init), std::invalid_argument);
    CHECK_THROWS_AS(extract_limits(OpinionSpace::interval, init, std::vector<double>{0.1}),
                    std::invalid_argument);
  }
}

TEST_CASE("anchor mean and spatial average") {
  CHECK(circular_anchor_mean(std::vector<double>{0.9, -0.9}) == Approx(1.0));
  CHECK(circular_anchor_mean(std::vector<double>{0.1, 0.3}) == Approx(0.2));
  CHECK_THROWS_AS(circular_anchor_mean(std::vector<double>{}), std::invalid_argument);
  CHECK(spatial_average(std::vector<double>{1.0, 2.0, 6.0}) == Approx(3.0));
  CHECK_THROWS_AS(spatial_average(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("monotone mean check") {
  const std::vector<double> t{0, 1, 2};
  std::vector<std::vector<double>> est(3, std::vector<double>(60));
  for (std::size_t r = 0; r < 60; ++r) {
    est[0][r] = 0.5 + 0.01 * static_cast<double>(r % 3);
    est[1][r] = 0.4 + 0.01 * static_cast<double>(r % 5);
    est[2][r] = 0.3;
  }
  const MonotoneReport ok = monotone_mean_delta_check(t, est);
  CHECK(ok.passed);
  CHECK(ok.means[2] == Approx(0.3));

  est[2].assign(60, 0.6);
  const MonotoneReport bad = monotone_mean_delta_check(t, est);
  CHECK_FALSE(bad.passed);
  CHECK(bad.first_violation == 2u);

  std::vector<std::vector<double>> few(2, std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(monotone_mean_delta_check(std::vector<double>{0, 1}, few), std::invalid_argument);
  CHECK_THROWS_AS(monotone_mean_delta_check(std::vector<double>{0}, est), std::invalid_argument);
}

TEST_CASE("Kolmogorov distributions match reference values") {
  // Reference values from scipy.stats.kstwo.sf and kstwobign.sf.
  struct Exact {
    std::size_t n;
    double d, sf;
  };
  for (const Exact& e : {Exact{1, 0.3, 1.0}, Exact{5, 0.2, 0.9616}, Exact{10, 0.274, 0.3715203845434957},
                         Exact{20, 0.1, 0.976255094592155}, Exact{50, 0.15, 0.19026366518248072},
                         Exact{100, 0.05, 0.9532159710635725}, Exact{100, 0.2, 0.0005551927327988775},
                         Exact{3, 0.9, 0.0019999999999999987}, Exact{7, 0.5, 0.03839174153626465}}) {
    INFO("n = " << e.n << ", d = " << e.d);
    CHECK(kolmogorov_exact_sf(e.n, e.d) == Approx(e.sf).epsilon(1e-9).margin(1e-13));
  }
  struct Limit {
    double x, sf;
  };
  for (const Limit& l : {Limit{0.3, 0.9999906941986655}, Limit{0.5, 0.9639452436648751},
                         Limit{0.8, 0.5441424115741981}, Limit{1.0, 0.26999967167735456},
                         Limit{1.2, 0.11224966667072497}, Limit{1.36, 0.049485876755377876},
                         Limit{2.0, 0.0006709252557796953}, Limit{3.0, 3.045995948942526e-08}}) {
    INFO("x = " << l.x);
    CHECK(kolmogorov_limit_sf(l.x) == Approx(l.sf).epsilon(1e-9).margin(1e-15));
  }
  CHECK(kolmogorov_exact_sf(10, 0.0) == 1.0);
  CHECK(kolmogorov_exact_sf(10, 1.0) == 0.0);
  CHECK_THROWS_AS(kolmogorov_exact_sf(0, 0.5), std::invalid_argument);
}

TEST_CASE("KS test against a uniform law") {
  const std::vector<double> s{0.1, -0.5, 0.9, 0.33, -0.77, 0.02, 0.6, -0.2};
  const KsResult r = ks_test_uniform(s, -1.0, 1.0);
  CHECK(r.n == 8);
  CHECK(r.statistic == Approx(0.15));
  CHECK(r.p_value == Approx(0.9810386734375).epsilon(1e-9));

  std::vector<double> golden;
  for (int i = 1; i <= 150; ++i) golden.push_back(std::fmod(i * 0.618034, 1.0) * 2.0 - 1.0);
  const KsResult g = ks_test_uniform(golden, -1.0, 1.0);
  CHECK(g.statistic == Approx(0.010849999999999083).epsilon(1e-9));
  CHECK(g.p_value == Approx(1.0));

  CHECK_THROWS_AS(ks_test_uniform(std::vector<double>{}, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ks_test_uniform(s, 1, 1), std::invalid_argument);

  std::vector<double> flat(600, 0.25);
  CHECK_THROWS_AS(marginal_uniformity_test(flat), std::invalid_argument);
  CHECK_THROWS_AS(marginal_uniformity_test(std::vector<double>(100, 0.1)), std::invalid_argument);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> good(2000);
  for (double& v : good) v = u(rng);
  CHECK(marginal_uniformity_test(good).p_value > 0.001);
  for (double& v : good) v = 0.5 * v;
  CHECK(marginal_uniformity_test(good).p_value < 1e-6);
}

TEST_CASE("sign product rate") {
  const Graph r = build_ring(4);
  CHECK(sign_product_rate(r, std::vector<double>{0.1, -0.1, 0.1, -0.1}) == 1.0);
  CHECK(sign_product_rate(r, std::vector<double>{0.1, 0.2, 0.0, -0.3}) == Approx(0.25));
  const Graph p = build_path(3);
  CHECK(sign_product_rate(p, std::vector<double>{0.1, 0.2}) == 0.0);
  CHECK_THROWS_AS(sign_product_rate(build_path(2), std::vector<double>{0.1}), std::invalid_argument);
  const Graph star(3, {{1, 0}, {1, 2}});
  CHECK_THROWS_AS(sign_product_rate(star, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("running statistics merge like a single pass") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd(3.0, 2.0);
  RunningStats all, a, b;
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    const double x = nd(rng);
    xs.push_back(x);
    all.add(x);
    (i < 300 ? a : b).add(x);
  }
  a.merge(b);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= 1000.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(all.mean() == Approx(mean).epsilon(1e-12));
  CHECK(all.variance() == Approx(ss / 999.0).epsilon(1e-12));
  CHECK(a.count() == 1000);
  CHECK(a.mean() == Approx(all.mean()).epsilon(1e-12));
  CHECK(a.variance() == Approx(all.variance()).epsilon(1e-10));
  CHECK(a.standard_error() == Approx(std::sqrt(ss / 999.0 / 1000.0)).epsilon(1e-10));
  RunningStats empty;
  CHECK(empty.variance() == 0.0);
  CHECK(empty.standard_error() == 0.0);
}

TEST_CASE("series aggregation") {
  RunRecord r1, r2;
  r1.samples = {{0.0, 1.0, 0, 0, 0, 0}, {1.0, 0.5, 0, 0, 0, 0}};
  r2.samples = {{0.0, 3.0, 0, 0, 0, 0}};
  SeriesAggregate a, b;
  a.add(r1);
  b.add(r2);
  a.merge(b);
  REQUIRE(a.rows().size() == 2);
  CHECK(a.rows()[0].w.mean() == 2.0);
  CHECK(a.rows()[0].w.count() == 2);
  CHECK(a.rows()[1].time == 1.0);
  CHECK(a.rows()[1].w.count() == 1);
}

TEST_CASE("time series CSV and JSON records") {
  RunRecord r;
  r.seed = 5;
  r.samples = {{0.0, 1.0 / 3.0, 0.25, 0.125, 1.5, 0.0}, {2.5, 0.1, 0.05, 0.025, 0.3, 0.5}};
  r.terminal = r.samples.back();
  std::ostringstream out;
  write_timeseries_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == timeseries_schema_line);
  std::getline(in, line);
  CHECK(line == "time,W,max_neighbor_dist,mean_abs_delta,opinion_range,sign_flip_fraction");
  std::getline(in, line);
  CHECK(line.rfind("0,0.33333333333333331,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("2.5,", 0) == 0);
  CHECK_FALSE(std::getline(in, line));

  const auto j = nlohmann::json::parse(run_record_json(r));
  CHECK(j["seed"] == 5);
  CHECK(j["samples"].size() == 2);
  CHECK(j["params"]["theta"] == "inf");
  CHECK(j["terminal"]["W"].get<double>() == 0.1);
  CHECK_FALSE(j.contains("wall_seconds"));
}
