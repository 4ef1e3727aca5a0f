#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flipbench/analysis.hpp"
#include "flipbench/error.hpp"
#include "flipbench/flipmodel.hpp"
#include "flipbench/prng.hpp"
#include "test_util.hpp"

using namespace flipbench;
using flipbench::testing::slurp;
using flipbench::testing::spit;
using flipbench::testing::TempDir;

namespace {

// Type-7 quantile written from its definition on a freshly sorted copy.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const double lo = std::floor(pos);
  const double frac = pos - lo;
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

// Rank = 1 + (#smaller) + (#equal - 1) / 2, counted pairwise.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = oracle_ranks(x), ry = oracle_ranks(y);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
    sxy += (rx[i] - mx) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

DurationSample row(const std::string& scheme, std::int64_t start, std::int64_t dur, int core = 0,
                   std::optional<int> mask = std::nullopt, const std::string& node = "n") {
  DurationSample d;
  d.node = node;
  d.core = core;
  d.scheme = scheme;
  d.mask_bits = mask;
  d.matrix_order = 64;
  d.kernel = "naive";
  d.start_ns = start;
  d.duration_ns = dur;
  return d;
}

SummaryRow median_row(const std::string& scheme, double median) {
  SummaryRow r;
  r.scheme = scheme;
  r.median_ns = median;
  return r;
}

}  // namespace

TEST_CASE("quartiles of one to five") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(quantile_linear(v, 0.25) == 2.0);
  CHECK(quantile_linear(v, 0.5) == 3.0);
  CHECK(quantile_linear(v, 0.75) == 4.0);
  const std::vector<double> w{1, 2, 3, 4};
  CHECK(quantile_linear(w, 0.5) == 2.5);
  CHECK(quantile_linear(w, 0.25) == 1.75);
  CHECK_THROWS_AS(quantile_linear(std::vector<double>{}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile_linear(v, 1.5), std::invalid_argument);
}

TEST_CASE("summarize matches sort-based quantiles") {
  Xoshiro256 rng(21);
  const GroupKey keys[] = {GroupKey::Scheme};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<DurationSample> rows;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = 1 + static_cast<std::int64_t>(rng.below(trial % 2 ? 20 : 1'000'000));
      rows.push_back(row("sequential", static_cast<std::int64_t>(i), d));
      values.push_back(static_cast<double>(d));
    }
    const auto s = summarize(rows, keys);
    REQUIRE(s.size() == 1);
    CHECK(s[0].n == n);
    CHECK(s[0].min_ns == *std::min_element(values.begin(), values.end()));
    CHECK(s[0].max_ns == *std::max_element(values.begin(), values.end()));
    CHECK(s[0].q1_ns == doctest::Approx(oracle_quantile(values, 0.25)).epsilon(1e-12));
    CHECK(s[0].median_ns == doctest::Approx(oracle_quantile(values, 0.5)).epsilon(1e-12));
    CHECK(s[0].q3_ns == doctest::Approx(oracle_quantile(values, 0.75)).epsilon(1e-12));
    CHECK(s[0].min_ns <= s[0].q1_ns);
    CHECK(s[0].q1_ns <= s[0].median_ns);
    CHECK(s[0].median_ns <= s[0].q3_ns);
    CHECK(s[0].q3_ns <= s[0].max_ns);
  }
}

TEST_CASE("summaries group and order by key") {
  std::vector<DurationSample> rows{
      row("masked:13", 0, 10, 10, 13), row("masked:2", 0, 20, 2, 2),
      row("masked:13", 1, 30, 2, 13), row("sequential", 0, 40, 10),
      row("masked:2", 1, 50, 10, 2, "a"),
  };
  const GroupKey by_core[] = {GroupKey::Core};
  const auto c = summarize(rows, by_core);
  REQUIRE(c.size() == 2);
  CHECK(c[0].group_core == "2");
  CHECK(c[1].group_core == "10");
  CHECK(c[0].node == "*");
  CHECK(c[0].scheme == "*");

  const GroupKey by_mask[] = {GroupKey::MaskBits};
  const auto m = summarize(rows, by_mask);
  REQUIRE(m.size() == 3);
  CHECK(m[0].mask_bits.empty());
  CHECK(m[1].mask_bits == "2");
  CHECK(m[2].mask_bits == "13");
  CHECK(m[2].n == 2);

  const GroupKey by_node[] = {GroupKey::Node};
  const auto n = summarize(rows, by_node);
  REQUIRE(n.size() == 2);
  CHECK(n[0].node == "a");

  CHECK_THROWS_AS(summarize(std::vector<DurationSample>{}, by_node), InputError);
  CHECK(parse_group_keys("node,core,scheme,mask_bits").size() == 4);
  CHECK_THROWS_AS(parse_group_keys("node,colour"), InputError);
}

TEST_CASE("spearman examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, std::vector<double>{5, 6, 7, 8, 7}) == doctest::Approx(0.8207826816681233));
  CHECK(spearman(x, std::vector<double>{10, 9, 8, 7, 6}) == -1.0);
  CHECK(spearman(x, std::vector<double>{1, 4, 9, 16, 25}) == 1.0);
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 30}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{3, 3, 3, 3, 3}), std::invalid_argument);
}

TEST_CASE("spearman matches a brute-force rank oracle") {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    const std::uint64_t levels = trial % 3 == 0 ? 4 : 1000;  // force ties on a third
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(levels));
      y[i] = static_cast<double>(rng.below(levels));
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    CHECK(average_ranks(x) == oracle_ranks(x));
    CHECK(std::abs(spearman(x, y) - oracle_spearman(x, y)) <= 1e-12);
    CHECK(spearman(x, y) == doctest::Approx(spearman(y, x)).epsilon(1e-15));
  }
}

TEST_CASE("verdict formatting") {
  Verdict v{"ordering_check", true, 12.5, "gap", ""};
  CHECK(format_verdict(v) == "ordering_check: PASS (gap=12.5)");
  v.pass = false;
  v.statistic = -0.5;
  v.statistic_name = "rho";
  CHECK(format_verdict(v) == "ordering_check: FAIL (rho=-0.5)");
}

TEST_CASE("ordering check") {
  auto v = ordering_check({median_row("constant:1", 10), median_row("sequential", 20),
                           median_row("random", 35)});
  CHECK(v.pass);
  CHECK(v.statistic == 10.0);

  v = ordering_check({median_row("constant:1", 10), median_row("sequential", 20),
                      median_row("random", 20)});
  CHECK_FALSE(v.pass);

  // The slowest constant decides.
  v = ordering_check({median_row("constant:1", 10), median_row("constant:0", 25),
                      median_row("sequential", 20), median_row("random", 30)});
  CHECK_FALSE(v.pass);

  CHECK_THROWS_AS(ordering_check({median_row("sequential", 1), median_row("random", 2)}),
                  InputError);
}

TEST_CASE("monotonicity check") {
  auto v = monotonicity_check({median_row("masked:0", 40), median_row("masked:13", 30),
                               median_row("masked:26", 20), median_row("masked:53", 10)});
  CHECK(v.pass);
  CHECK(v.statistic == -1.0);

  v = monotonicity_check({median_row("masked:0", 10), median_row("masked:13", 30),
                          median_row("masked:26", 20)});
  CHECK_FALSE(v.pass);

  v = monotonicity_check({median_row("masked:0", 10), median_row("masked:13", 10),
                          median_row("masked:26", 10)});
  CHECK_FALSE(v.pass);
  CHECK(v.statistic == 0.0);

  CHECK_THROWS_AS(monotonicity_check({median_row("masked:0", 1), median_row("masked:1", 1)}),
                  InputError);
}

TEST_CASE("join averages samples inside the call window") {
  const std::vector<DurationSample> d{row("sequential", 1000, 1000)};
  auto j = join_freq_durations(d, {{1100, 0, 2'000'000}, {1500, 0, 2'400'000}, {2500, 0, 1}});
  REQUIRE(j.size() == 1);
  CHECK(*j[0].freq_mean_khz == 2'200'000.0);
  CHECK_FALSE(j[0].nearest_fallback);

  // Window edges are inclusive.
  j = join_freq_durations(d, {{1000, 0, 100}, {2000, 0, 300}});
  CHECK(*j[0].freq_mean_khz == 200.0);

  j = join_freq_durations(d, {{500, 0, 100}, {2300, 0, 300}});
  CHECK(j[0].nearest_fallback);
  CHECK(*j[0].freq_mean_khz == 300.0);

  j = join_freq_durations(d, {{1500, 1, 100}});
  CHECK(j[0].no_frequency);
  CHECK_FALSE(j[0].freq_mean_khz.has_value());
}

TEST_CASE("correlation check on synthetic rows") {
  std::vector<JoinedRow> rows;
  for (int i = 1; i <= 10; ++i) {
    rows.push_back({row("random", i * 100, 1000 / i), 1e6 * i, false, false});
  }
  rows.push_back({row("random", 0, 5), std::nullopt, false, true});
  const auto v = correlation_check(rows, -0.9);
  CHECK(v.pass);
  CHECK(v.statistic == -1.0);
}

TEST_CASE("simulated run analyses to the model predictions") {
  TempDir dir("analysis");
  SimConfig cfg;
  cfg.matrix_order = 64;
  cfg.calls = 6;
  cfg.schemes = {InitSpec::constant(1.0), InitSpec::sequential(), InitSpec::random(1)};
  for (int k : {0, 26, 53}) cfg.schemes.push_back(InitSpec::masked(1, k));
  const auto sim = simulate_experiment(cfg, dir / "run");

  const auto out = analyze_run(dir / "run", dir / "out");
  CHECK(out.exit_code == 0);
  REQUIRE(out.verdicts.size() == 3);
  for (const auto& v : out.verdicts) CHECK_MESSAGE(v.pass, format_verdict(v));
  REQUIRE(out.summary.size() == sim.schemes.size());
  for (const auto& r : out.summary) {
    const auto it = std::find_if(sim.schemes.begin(), sim.schemes.end(), [&](const auto& s) {
      return s.spec.to_string() == r.scheme;
    });
    REQUIRE(it != sim.schemes.end());
    CHECK(r.median_ns == std::round(it->predicted_seconds * 1e9));
    CHECK(r.freq_median_khz == static_cast<double>(it->point.frequency_khz));
  }
  CHECK(read_summary(dir / "out" / kSummaryFile) == out.summary);
  const auto verdicts = slurp(dir / "out" / kVerdictsFile);
  CHECK(verdicts.find("ordering_check: PASS") != std::string::npos);

  // Deterministic on rerun.
  analyze_run(dir / "run", dir / "out2");
  CHECK(slurp(dir / "out" / kSummaryFile) == slurp(dir / "out2" / kSummaryFile));
  CHECK(verdicts == slurp(dir / "out2" / kVerdictsFile));
}

TEST_CASE("analysis skips verdicts it lacks data for") {
  TempDir dir("analysis");
  SimConfig cfg;
  cfg.matrix_order = 16;
  cfg.calls = 3;
  cfg.schemes = {InitSpec::sequential()};
  simulate_experiment(cfg, dir / "run");
  const auto out = analyze_run(dir / "run", dir / "run");
  CHECK(out.verdicts.empty());
  CHECK(out.notes.size() == 3);
  CHECK(out.exit_code == 0);
}

TEST_CASE("analysis input errors") {
  TempDir dir("analysis");
  std::filesystem::create_directories(dir / "run");
  spit(dir / "run" / kDurationsFile,
       std::string(kDurationsHeader) + "\nn,0,0,sequential,,1,64,naive,10,5\nbad\n");
  try {
    analyze_run(dir / "run", dir / "out");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  spit(dir / "run" / kDurationsFile,
       std::string(kDurationsHeader) + "\nn,0,0,sequential,,1,64,naive,10,5\n");
  spit(dir / "run" / kFreqFile, std::string(kFreqHeader) + "\n12,0,1000\n");
  spit(dir / "run" / kMetadataFile, "clock=wall\n");
  CHECK_THROWS_AS(analyze_run(dir / "run", dir / "out"), InputError);
  CHECK_THROWS_AS(analyze_run(dir / "missing", dir / "out"), InputError);
}
