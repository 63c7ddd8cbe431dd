#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace hfp;
using hfp::test::block;

TEST(BlockDims, HandSolvedShapes) {
  const Block sq = block("a", 100.0, {1.0, 4.0});
  Dims d = block_dims(sq, 0, 1.0);
  EXPECT_DOUBLE_EQ(d.width, 10.0);
  EXPECT_DOUBLE_EQ(d.height, 10.0);
  d = block_dims(sq, 0, 4.0);
  EXPECT_DOUBLE_EQ(d.width, 5.0);
  EXPECT_DOUBLE_EQ(d.height, 20.0);
  d = block_dims(block("b", 50.0, {0.5}), 0, 0.5);
  EXPECT_DOUBLE_EQ(d.width, 10.0);
  EXPECT_DOUBLE_EQ(d.height, 5.0);
}

TEST(BlockDims, MissingTechnologyIsConfigError) {
  const Block b = block("a", 100.0);
  EXPECT_THROW(block_dims(b, 1, 1.0), ConfigError);
  EXPECT_THROW(block_ppa(b, 3, 1.0), ConfigError);
}

TEST(BlockDims, AreaAndTransposeProperty) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double area = rng.uniform(1.0, 1e6);
    const double rho = rng.uniform(0.2, 5.0);
    const Block b = block("x", area, {rho, 1.0 / rho});
    const Dims a = block_dims(b, 0, rho);
    const Dims t = block_dims(b, 0, 1.0 / rho);
    EXPECT_NEAR(a.width * a.height / area, 1.0, 1e-9);
    EXPECT_NEAR(a.height / a.width / rho, 1.0, 1e-9);
    EXPECT_NEAR(a.width, t.height, 1e-9 * a.width);
    EXPECT_NEAR(a.height, t.width, 1e-9 * a.height);
  }
}

TEST(BlockPpa, PenaltyExamples) {
  EXPECT_DOUBLE_EQ(block_ppa(block("a", 1.0, {1.0, 2.0}, 10.0, 4.0, 0.1), 0, 1.0).power, 10.0);
  EXPECT_DOUBLE_EQ(block_ppa(block("a", 1.0, {1.0, 2.0}, 10.0, 4.0, 0.1), 0, 2.0).power, 10.5);
  EXPECT_DOUBLE_EQ(block_ppa(block("a", 1.0, {0.5}, 10.0, 4.0, 0.2), 0, 0.5).tns, 4.4);
}

TEST(BlockPpa, SymmetricAndMinimalAtOne) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Block b = block("a", 1.0, {1.0}, rng.uniform(1, 30), rng.uniform(0, 10), rng.uniform(0, 0.5));
    const double rho = rng.uniform(0.1, 10.0);
    const BlockPpa p = block_ppa(b, 0, rho), q = block_ppa(b, 0, 1.0 / rho), one = block_ppa(b, 0, 1.0);
    EXPECT_NEAR(p.power, q.power, 1e-12 * p.power);
    EXPECT_NEAR(p.tns, q.tns, 1e-12 * std::max(1.0, p.tns));
    EXPECT_LE(one.power, p.power);
    EXPECT_LE(one.tns, p.tns);
    EXPECT_EQ(p.area, one.area);
  }
}

TEST(Yield, ClosedFormAnchors) {
  const Technology t = hfp::test::tech("t", 1.0, 0.09);
  EXPECT_EQ(die_yield(0.0, t), 1.0);
  // Published anchors are rounded loosely; the closed form is 1.009^-10.
  EXPECT_NEAR(die_yield(1e8, t), 0.91433, 1e-4);
  EXPECT_NEAR(die_yield(1e8, t), 0.9142992, 1e-7);
  EXPECT_NEAR(die_yield(0.5e8, t), 0.95615, 1e-4);
  EXPECT_NEAR(die_yield(0.5e8, t), 0.9560940, 1e-7);
  // Independent evaluation through exp/log1p.
  EXPECT_NEAR(die_yield(1e8, t), std::exp(-10.0 * std::log1p(0.009)), 1e-15);
}

TEST(Yield, StrictlyDecreasingAndCostIncreasing) {
  const Technology t = hfp::test::tech("t", 1.0, 0.5);
  double prev_y = 2.0, prev_c = 0.0;
  for (double a = 0.0; a <= 5e8; a += 2.5e7) {
    const double y = die_yield(a, t), c = die_cost(a, t);
    EXPECT_LT(y, prev_y);
    EXPECT_GT(c, prev_c);
    prev_y = y;
    prev_c = c;
  }
}

TEST(Cost, Examples) {
  Technology t = hfp::test::tech("t", 1.0, 0.09, 2.0);
  EXPECT_DOUBLE_EQ(die_cost(0.0, t), 2.0);
  t.cost_per_area = 1.0;
  EXPECT_NEAR(die_cost(1e8, t), 1.0937, 5e-5);
  // Phi = 2 at yield 0.8: pick the area that yields exactly 0.8.
  t.cost_per_area = 2.0;
  const double area = t.alpha * (std::pow(0.8, -1.0 / t.alpha) - 1.0) / t.defect_density * kUm2PerCm2;
  EXPECT_NEAR(die_cost(area, t), 2.5, 1e-12);
  EXPECT_NEAR(die_cost(area, t, true), 2.5 * area, 1e-12 * area);
}

TEST(Hpwl, Examples) {
  const std::vector<Point> c{{5, 5}, {5, 5}, {0, 0}, {3, 4}, {1, 10}};
  EXPECT_EQ(net_hpwl(hfp::test::net("n", {0, 1}), c), 0.0);
  EXPECT_EQ(net_hpwl(hfp::test::net("n", {2, 3}), c), 7.0);
  EXPECT_EQ(net_hpwl(hfp::test::net("n", {2, 3, 4}), c), 13.0);
  EXPECT_THROW(net_hpwl(hfp::test::net("n", {0, 9}), c), StateError);
}

TEST(Hpwl, BruteForceAndTranslationInvariance) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const std::size_t k = 1 + rng.uniform_index(10);
    std::vector<Point> c(k), shifted(k);
    Net n{"n", {}, 1.0};
    const double dx = rng.uniform(-50, 50), dy = rng.uniform(-50, 50);
    for (std::size_t j = 0; j < k; ++j) {
      c[j] = {std::round(rng.uniform(0, 100)), std::round(rng.uniform(0, 100))};
      shifted[j] = {c[j].x + std::round(dx), c[j].y + std::round(dy)};
      n.pins.push_back(j);
    }
    double wx = 0.0, wy = 0.0;  // largest pairwise spread
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        wx = std::max(wx, c[a].x - c[b].x);
        wy = std::max(wy, c[a].y - c[b].y);
      }
    }
    EXPECT_EQ(net_hpwl(n, c), wx + wy);
    EXPECT_EQ(net_hpwl(n, shifted), wx + wy);
  }
}

namespace {

Design two_die_design() {
  Design d;
  d.technologies = {hfp::test::tech("old", 1.0, 0.1, 1.0), hfp::test::tech("new", 4.0, 0.2, 3.0)};
  for (int i = 0; i < 4; ++i) {
    Block b = block("b" + std::to_string(i), 100.0 * (i + 1), {0.5, 1.0, 2.0}, 2.0 + i, 1.0 + i, 0.1);
    b.ppa.push_back(BasePpa{25.0 * (i + 1), 1.0 + i, 0.5 + i, 0.1});
    d.blocks.push_back(b);
  }
  d.nets = {hfp::test::net("n0", {0, 1, 2}), hfp::test::net("n1", {2, 3}), hfp::test::net("n2", {0, 3})};
  d.dies = {{"d0", 0}, {"d1", 1}};
  return d;
}

}  // namespace

TEST(Evaluate, WeightedSumExample) {
  // W=100, P=50, sum C=10, T=20 with weights (1, 1, 0.5, 2) gives 195.
  const ObjectiveWeights w;
  EXPECT_DOUBLE_EQ(w.omega * 100 + w.beta * 50 + w.gamma * 10 + w.tau * 20, 195.0);
  const Design d = two_die_design();
  std::vector<PlacedBlock> pb{{0, 0, 1.0, {0, 0}}, {0, 0, 1.0, {10, 0}}, {1, 1, 1.0, {50, 5}}, {1, 1, 1.0, {60, 5}}};
  const std::vector<double> areas{500.0, 200.0};
  ObjectiveWeights zero;
  zero.omega = zero.beta = zero.gamma = zero.tau = 0.0;
  EXPECT_EQ(evaluate(d, pb, areas, 400.0, zero).f, 0.0);
}

TEST(Evaluate, MatchesIndependentSum) {
  const Design d = two_die_design();
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    ObjectiveWeights w;
    w.omega = rng.uniform(0, 3);
    w.beta = rng.uniform(0, 3);
    w.gamma = rng.uniform(0, 3);
    w.tau = rng.uniform(0, 3);
    w.n_max = 1 + static_cast<int>(rng.uniform_index(3));
    std::vector<PlacedBlock> pb(4);
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t die = rng.uniform_index(2);
      const double ratios[3] = {0.5, 1.0, 2.0};
      pb[b] = {die, die, ratios[rng.uniform_index(3)], {rng.uniform(0, 100), rng.uniform(0, 100)}};
    }
    const std::vector<double> areas{rng.uniform(1, 1e7), rng.uniform(1, 1e7)};
    const double z = rng.uniform(1, 1e7);
    const ObjectiveBreakdown bd = evaluate(d, pb, areas, z, w);

    double W = 0, P = 0, T = 0, C = 0;
    for (const Net& n : d.nets) {
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (std::size_t p : n.pins) {
        x0 = std::min(x0, pb[p].center.x);
        x1 = std::max(x1, pb[p].center.x);
        y0 = std::min(y0, pb[p].center.y);
        y1 = std::max(y1, pb[p].center.y);
      }
      W += (x1 - x0) + (y1 - y0);
    }
    for (std::size_t b = 0; b < 4; ++b) {
      const BasePpa& base = *d.blocks[b].ppa[pb[b].tech];
      const double r = pb[b].ratio;
      P += base.power * (1 + base.kappa * (r + 1 / r - 2));
      T += base.tns * (1 + base.kappa * (r + 1 / r - 2));
    }
    bool area_ok = true;
    for (std::size_t k = 0; k < 2; ++k) {
      const Technology& t = d.technologies[d.dies[k].tech];
      C += t.cost_per_area * std::exp(t.alpha * std::log1p(t.defect_density * areas[k] / 1e8 / t.alpha));
      area_ok = area_ok && areas[k] >= 0.8 * z && areas[k] <= 1.2 * z;
    }
    int cross = 0;
    for (const Net& n : d.nets) {
      bool on0 = false, on1 = false;
      for (std::size_t p : n.pins) (pb[p].die == 0 ? on0 : on1) = true;
      cross += on0 && on1;
    }
    const double f = w.omega * W + w.beta * P + w.gamma * C + w.tau * T;
    EXPECT_NEAR(bd.f, f, 1e-9 * std::max(1.0, std::abs(f)));
    EXPECT_EQ(bd.feasible, area_ok && cross <= w.n_max);
    EXPECT_EQ(bd.inter_die_net_counts.empty() ? 0 : bd.inter_die_net_counts.at({0, 1}), cross);
  }
}

TEST(Evaluate, ThreePinNetCountsOncePerPair) {
  Design d = two_die_design();
  d.nets = {hfp::test::net("n", {0, 1, 2})};
  std::vector<PlacedBlock> pb{{0, 0, 1.0, {}}, {0, 0, 1.0, {}}, {1, 1, 1.0, {}}, {1, 1, 1.0, {}}};
  const std::vector<double> areas{1.0, 1.0};
  const ObjectiveBreakdown bd = evaluate(d, pb, areas, 1.0, ObjectiveWeights{});
  ASSERT_EQ(bd.inter_die_net_counts.size(), 1u);
  EXPECT_EQ(bd.inter_die_net_counts.at({0, 1}), 1);
}

TEST(Evaluate, DeterministicAndSizeChecked) {
  const Design d = two_die_design();
  std::vector<PlacedBlock> pb{{0, 0, 2.0, {1, 2}}, {0, 0, 1.0, {3, 4}}, {1, 1, 0.5, {5, 6}}, {1, 1, 1.0, {7, 8}}};
  const std::vector<double> areas{300.0, 70.0};
  const ObjectiveBreakdown a = evaluate(d, pb, areas, 200.0, ObjectiveWeights{});
  const ObjectiveBreakdown b = evaluate(d, pb, areas, 200.0, ObjectiveWeights{});
  EXPECT_EQ(a.f, b.f);
  EXPECT_EQ(a.total_hpwl, b.total_hpwl);
  pb.pop_back();
  EXPECT_THROW(evaluate(d, pb, areas, 200.0, ObjectiveWeights{}), StateError);
}

TEST(Weights, Validation) {
  ObjectiveWeights w;
  EXPECT_NO_THROW(w.validate());
  w.a_min_factor = 1.3;
  EXPECT_THROW(w.validate(), ConfigError);
  w = {};
  w.n_max = 0;
  EXPECT_THROW(w.validate(), ConfigError);
  w = {};
  w.tau = -1;
  EXPECT_THROW(w.validate(), ConfigError);
}
