#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace hfp;

namespace {

MmfpConfig quick() {
  MmfpConfig cfg;
  cfg.max_total_steps = 300;
  return cfg;
}

}  // namespace

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(NormalizedAverage, HandOracle) {
  // Pairs: 2/4 kept, 3/0 skipped (zero baseline), 9/3 kept, 1/1 skipped (infeasible method).
  const std::vector<double> m{2, 3, 9, 1}, b{4, 0, 3, 1};
  const auto r = normalized_average(m, b, {true, true, true, false}, {true, true, true, true});
  EXPECT_EQ(r.pairs, 2u);
  EXPECT_DOUBLE_EQ(r.value, (0.5 + 3.0) / 2);

  const auto none = normalized_average(m, b, {false, false, false, false}, {true, true, true, true});
  EXPECT_EQ(none.pairs, 0u);
  EXPECT_TRUE(std::isnan(none.value));
}

TEST(NormalizedAverage, TwoByThreeTable) {
  // Two methods over three seeds; every pair feasible.
  const std::vector<double> base{10, 20, 40};
  const std::vector<double> a{5, 20, 60}, c{10, 10, 10};
  const std::vector<bool> ok(3, true);
  EXPECT_DOUBLE_EQ(normalized_average(a, base, ok, ok).value, (0.5 + 1.0 + 1.5) / 3);
  EXPECT_DOUBLE_EQ(normalized_average(c, base, ok, ok).value, (1.0 + 0.5 + 0.25) / 3);
}

TEST(CompareMethods, BaselineRowIsOneAndRunsDeterministic) {
  const Design d = test::small_generated(14, 3);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto methods = std::vector<Method>{Method::baseline, Method::sa, Method::rl};
  const ExperimentReport one = compare_methods(d, seeds, quick(), methods, 1);
  const ExperimentReport two = compare_methods(d, seeds, quick(), methods, 2);
  EXPECT_EQ(report_to_string(one), report_to_string(two));
  EXPECT_EQ(curves_to_csv(one), curves_to_csv(two));
  ASSERT_EQ(one.runs.size(), 9u);
  ASSERT_EQ(one.summary.size(), 3u);

  const MethodSummary* base = one.find(Method::baseline);
  ASSERT_NE(base, nullptr);
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    EXPECT_EQ(base->normalized[k].value, 1.0);
    EXPECT_EQ(base->normalized_median[k], 1.0);
  }
  for (Method m : {Method::sa, Method::rl}) {
    const MethodSummary* s = one.find(m);
    ASSERT_NE(s, nullptr);
    EXPECT_EQ(s->runs, 3u);
    std::vector<double> f;
    for (const auto& r : one.runs) {
      if (r.method == m) f.push_back(r.metrics[0]);
    }
    EXPECT_EQ(s->median[0], median(f));
  }
}

TEST(CompareMethods, RecordMatchesSingleRun) {
  const Design d = test::small_generated(10, 8);
  const ExperimentReport rep = compare_methods(d, {5}, quick(), {Method::sa}, 1);
  Rng rng(cell_seed(5, Method::sa));
  const MmfpSolution sol = run_method(d, Method::sa, quick(), rng);
  ASSERT_EQ(rep.runs.size(), 1u);
  EXPECT_EQ(rep.runs[0].metrics[0], sol.breakdown.f);
  EXPECT_EQ(rep.runs[0].steps, sol.steps);
}

TEST(Ablate, EmitsEveryGridPoint) {
  const Design d = test::small_generated(12, 6);
  const std::vector<double> grid{1, 3, 10};
  const ExperimentReport rep = ablate(d, "n_max", grid, {1, 2}, quick(), {Method::sa}, 1);
  EXPECT_EQ(rep.runs.size(), 6u);
  for (double g : grid) {
    const MethodSummary* s = rep.find(Method::sa, g);
    ASSERT_NE(s, nullptr);
    EXPECT_EQ(s->runs, 2u);
    EXPECT_FALSE(s->has_baseline);
  }
  const std::string csv = report_to_csv(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Ablate, HardIpAxisAddsBaseline) {
  const Design d = test::small_generated(12, 6);
  const ExperimentReport rep = ablate(d, "hard_ip_count", {0, 2}, {1}, quick(), {Method::sa}, 1);
  for (double g : {0.0, 2.0}) {
    ASSERT_NE(rep.find(Method::baseline, g), nullptr);
    ASSERT_NE(rep.find(Method::sa, g), nullptr);
    EXPECT_TRUE(rep.find(Method::sa, g)->has_baseline);
  }
}

TEST(Ablate, SharesRandomStreamsAcrossGrid) {
  // Identical grid values must give identical runs.
  const Design d = test::small_generated(12, 6);
  const ExperimentReport rep = ablate(d, "tau", {2, 2}, {4}, quick(), {Method::sa}, 1);
  ASSERT_EQ(rep.runs.size(), 2u);
  EXPECT_EQ(rep.runs[0].metrics, rep.runs[1].metrics);
}

TEST(Ablate, RejectsBadInput) {
  const Design d = test::small_generated(6, 1);
  EXPECT_THROW(ablate(d, "colour", {1}, {1}, quick()), ConfigError);
  EXPECT_THROW(ablate(d, "tau", {}, {1}, quick()), ConfigError);
  EXPECT_THROW(ablate(d, "tau", {1}, {}, quick()), ConfigError);
}
