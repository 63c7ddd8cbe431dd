#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>

#include "support.hpp"

using namespace hfp;
using Node = BStarTree::Node;
constexpr int kNil = BStarTree::kNil;

namespace {

Design shaped_blocks(std::size_t n, Rng& rng) {
  Design d;
  d.technologies = {test::tech("t", 1.0)};
  for (std::size_t i = 0; i < n; ++i) {
    d.blocks.push_back(test::block("b" + std::to_string(i), rng.uniform(1.0, 400.0), {0.5, 1.0, 2.0}));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) d.nets.push_back(test::net("n" + std::to_string(i), {i, i + 1}));
  d.dies = {{"d", 0}};
  return d;
}

std::vector<Dims> dims_of(const Design& d, std::span<const double> ratio) {
  std::vector<Dims> out;
  for (std::size_t b = 0; b < d.blocks.size(); ++b) out.push_back(block_dims(d.blocks[b], 0, ratio[b]));
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void expect_packing_valid(const Packing& p) {
  double w = 0.0, h = 0.0;
  for (std::size_t i = 0; i < p.rects.size(); ++i) {
    const Rect& a = p.rects[i];
    EXPECT_GE(a.x, 0.0);
    EXPECT_GE(a.y, 0.0);
    EXPECT_LE(a.x + a.w, p.width + 1e-9);
    EXPECT_LE(a.y + a.h, p.height + 1e-9);
    w = std::max(w, a.x + a.w);
    h = std::max(h, a.y + a.h);
    for (std::size_t j = i + 1; j < p.rects.size(); ++j) {
      ASSERT_FALSE(test::overlaps(a, p.rects[j])) << "nodes " << i << " and " << j;
    }
  }
  EXPECT_EQ(p.width, w);
  EXPECT_EQ(p.height, h);
}

}  // namespace

TEST(Pack, SingleBlock) {
  const BStarTree t({Node{0}}, 0);
  const std::vector<Dims> dims{{2, 3}};
  const Packing p = pack(t, dims);
  EXPECT_EQ(p.rects[0].x, 0.0);
  EXPECT_EQ(p.rects[0].y, 0.0);
  EXPECT_EQ(p.width, 2.0);
  EXPECT_EQ(p.height, 3.0);
}

TEST(Pack, LeftChildSitsToTheRight) {
  const BStarTree t({Node{0, 1, kNil, kNil}, Node{1, kNil, kNil, 0}}, 0);
  const std::vector<Dims> dims{{2, 2}, {3, 1}};
  const Packing p = pack(t, dims);
  EXPECT_EQ(p.rects[1].x, 2.0);
  EXPECT_EQ(p.rects[1].y, 0.0);
  EXPECT_EQ(p.width, 5.0);
  EXPECT_EQ(p.height, 2.0);
}

TEST(Pack, RightChildSitsAbove) {
  const BStarTree t({Node{0, kNil, 1, kNil}, Node{1, kNil, kNil, 0}}, 0);
  const std::vector<Dims> dims{{2, 2}, {3, 1}};
  const Packing p = pack(t, dims);
  EXPECT_EQ(p.rects[1].x, 0.0);
  EXPECT_EQ(p.rects[1].y, 2.0);
  EXPECT_EQ(p.width, 3.0);
  EXPECT_EQ(p.height, 3.0);
}

TEST(Pack, ContourLiftsOverTallNeighbour) {
  // The 4x1 block starts at x=1, so it clears the 2x1 block but not the taller root.
  const BStarTree t({Node{0, 1, kNil, kNil}, Node{1, kNil, 2, 0}, Node{2, kNil, kNil, 1}}, 0);
  const std::vector<Dims> dims{{1, 5}, {2, 1}, {4, 1}};
  const Packing p = pack(t, dims);
  EXPECT_EQ(p.rects[2].x, 1.0);
  EXPECT_EQ(p.rects[2].y, 1.0);
  expect_packing_valid(p);
}

TEST(Pack, MalformedTreeIsStructureError) {
  EXPECT_THROW(BStarTree({Node{0, 1, kNil, kNil}, Node{1, kNil, kNil, kNil}}, 0), StructureError);
  EXPECT_THROW(BStarTree({Node{0, 1, kNil, kNil}, Node{1, 0, kNil, 0}}, 0), StructureError);
  EXPECT_THROW(BStarTree({Node{0, 1, kNil, kNil}, Node{0, kNil, kNil, 0}}, 0), StructureError);
  EXPECT_THROW(BStarTree({Node{0}}, 3), StructureError);
  const BStarTree t({Node{5}}, 0);
  const std::vector<Dims> dims{{1, 1}};
  EXPECT_THROW(pack(t, dims), StructureError);
}

TEST(Pack, RandomTreesNeverOverlap) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    const Design d = shaped_blocks(n, rng);
    std::vector<double> ratio(n);
    for (double& r : ratio) r = d.blocks[0].ratios[rng.uniform_index(3)];
    const auto blocks = iota(n);
    const BStarTree t = random_tree(blocks, rng);
    const auto dims = dims_of(d, ratio);
    const Packing p = pack(t, dims);
    ASSERT_EQ(p.rects.size(), n);
    EXPECT_EQ(p.rects[static_cast<std::size_t>(t.root())].x, 0.0);
    for (int i = 0; i < static_cast<int>(n); ++i) {
      const Node& nd = t.node(i);
      if (nd.parent == kNil) continue;
      const Rect& par = p.rects[static_cast<std::size_t>(nd.parent)];
      const double want = t.node(nd.parent).left == i ? par.x + par.w : par.x;
      EXPECT_EQ(p.rects[static_cast<std::size_t>(i)].x, want);
    }
    expect_packing_valid(p);
  }
}

TEST(Pack, TwoHundredBlocksIsFast) {
  Rng rng(9);
  const Design d = shaped_blocks(200, rng);
  const std::vector<double> ratio(200, 1.0);
  const auto blocks = iota(200);
  const BStarTree t = random_tree(blocks, rng);
  const auto dims = dims_of(d, ratio);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) (void)pack(t, dims);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(ms / 10.0, 10.0);
}

TEST(Perturb, SwapOnTwoNodes) {
  Rng rng(1);
  BStarTree t({Node{0, 1, kNil, kNil}, Node{1, kNil, kNil, 0}}, 0);
  Design d = test::uniform_design({4, 4});
  std::vector<double> ratio{1.0, 1.0};
  ASSERT_TRUE(perturb(t, ratio, d, MoveKind::swap, rng).applied);
  EXPECT_EQ(t.node(t.root()).block, 1u);
  EXPECT_EQ(t.node(t.node(t.root()).left).block, 0u);
}

TEST(Perturb, RotateTransposes) {
  Rng rng(1);
  BStarTree t({Node{0}}, 0);
  Design d;
  d.technologies = {test::tech("t", 1.0)};
  d.blocks = {test::block("a", 8.0, {0.5, 1.0, 2.0})};
  std::vector<double> ratio{2.0};
  const Dims before = block_dims(d.blocks[0], 0, ratio[0]);
  const PerturbResult r = perturb(t, ratio, d, MoveKind::rotate, rng);
  EXPECT_TRUE(r.applied);
  EXPECT_EQ(r.resized_block, 0u);
  EXPECT_EQ(ratio[0], 0.5);
  const Dims after = block_dims(d.blocks[0], 0, ratio[0]);
  EXPECT_DOUBLE_EQ(after.width, before.height);
  EXPECT_DOUBLE_EQ(after.height, before.width);
}

TEST(Perturb, RotateNeedsReciprocalOption) {
  Rng rng(1);
  BStarTree t({Node{0}}, 0);
  Design d;
  d.technologies = {test::tech("t", 1.0)};
  d.blocks = {test::block("a", 8.0, {1.0, 2.0})};
  std::vector<double> ratio{2.0};
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::rotate, rng).applied);
  EXPECT_EQ(ratio[0], 2.0);
}

TEST(Perturb, HardIpIsNeverReshaped) {
  Rng rng(1);
  BStarTree t({Node{0}}, 0);
  Design d;
  d.technologies = {test::tech("t", 1.0)};
  d.blocks = {test::block("ip", 8.0, {0.5, 1.0, 2.0})};
  d.blocks[0].hard_ip = HardIpLock{0, 2.0};
  std::vector<double> ratio{2.0};
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::ratio_change, rng).applied);
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::rotate, rng).applied);
  EXPECT_EQ(ratio[0], 2.0);
}

TEST(Perturb, SmallTreesSignalNoOp) {
  Rng rng(1);
  BStarTree t({Node{0}}, 0);
  Design d = test::uniform_design({4});
  std::vector<double> ratio{1.0};
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::swap, rng).applied);
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::remove_insert, rng).applied);
  EXPECT_FALSE(perturb(t, ratio, d, MoveKind::ratio_change, rng).applied);
}

TEST(Perturb, PreservesInvariantsAndBlockSet) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(25);
    const Design d = shaped_blocks(n, rng);
    std::vector<double> ratio(n, 1.0);
    const auto ids = iota(n);
    BStarTree t = random_tree(ids, rng);
    for (int step = 0; step < 50; ++step) {
      const MoveKind k = kAllMoves[rng.uniform_index(kMoveKinds)];
      const int root_before = t.root();
      const std::size_t root_block = t.node(root_before).block;
      perturb(t, ratio, d, k, rng);
      ASSERT_NO_THROW(t.validate());
      auto blocks = t.blocks();
      std::sort(blocks.begin(), blocks.end());
      ASSERT_EQ(blocks, ids);
      if (k == MoveKind::remove_insert) {
        EXPECT_EQ(t.root(), root_before);
        EXPECT_EQ(t.node(t.root()).block, root_block);
      }
      for (std::size_t b = 0; b < n; ++b) EXPECT_TRUE(has_ratio_option(d.blocks[b], ratio[b]));
    }
  }
}

TEST(Detach, SplicesChildren) {
  // 0 -> left 1, 1 -> left 2, 1 -> right 3. Detaching 1 promotes 2 and hangs 3
  // under the leftmost free slot of 2's subtree.
  BStarTree t({Node{0, 1, kNil, kNil}, Node{1, 2, 3, 0}, Node{2, kNil, kNil, 1}, Node{3, kNil, kNil, 1}}, 0);
  t.detach(1);
  EXPECT_EQ(t.node(0).left, 2);
  EXPECT_EQ(t.node(2).parent, 0);
  EXPECT_EQ(t.node(2).left, 3);
  EXPECT_EQ(t.node(3).parent, 2);
  t.attach(1, 3, Side::right);
  EXPECT_NO_THROW(t.validate());
}

TEST(RandomTree, ShapeAndDeterminism) {
  Rng one(3);
  const std::vector<std::size_t> single{7};
  const BStarTree s = random_tree(single, one);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.node(s.root()).block, 7u);

  for (std::size_t n : {2u, 5u, 30u}) {
    const auto ids = iota(n);
    Rng a(42), b(42);
    const BStarTree ta = random_tree(ids, a), tb = random_tree(ids, b);
    std::size_t edges = 0;
    for (int i = 0; i < static_cast<int>(n); ++i) {
      edges += (ta.node(i).left != kNil) + (ta.node(i).right != kNil);
      EXPECT_EQ(ta.node(i).block, tb.node(i).block);
      EXPECT_EQ(ta.node(i).left, tb.node(i).left);
      EXPECT_EQ(ta.node(i).right, tb.node(i).right);
    }
    EXPECT_EQ(edges, n - 1);
    EXPECT_NO_THROW(ta.validate());
  }
}

TEST(Features, SingleNode) {
  Design d = test::uniform_design({4});
  const BStarTree t({Node{0}}, 0);
  const std::vector<Dims> dims{{2, 2}};
  const auto f = extract_features(t, pack(t, dims), d, 6);
  ASSERT_EQ(f.size(), 30u);
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 1.0);
  EXPECT_EQ(f[4], 0.0);
  for (std::size_t i = 5; i < 30; ++i) EXPECT_EQ(f[i], 0.0);
  EXPECT_THROW(extract_features(t, pack(t, dims), d, 0), ConfigError);
}

TEST(Features, PerfectThreeNodeTree) {
  Design d = test::uniform_design({4, 4, 4});
  d.nets = {test::net("a", {0, 1}), test::net("b", {1, 2})};
  const BStarTree t({Node{0, 1, 2, kNil}, Node{1, kNil, kNil, 0}, Node{2, kNil, kNil, 0}}, 0);
  const std::vector<Dims> dims{{2, 2}, {2, 2}, {2, 2}};
  const Packing p = pack(t, dims);
  // Centers: 0 at (1,1), 1 at (3,1), 2 at (1,3). Net a spans 2, net b spans 4.
  const auto f = extract_features(t, p, d, 2);
  ASSERT_EQ(f.size(), 10u);
  const std::vector<double> want{2, 1, 1, 3, 6, 1, 0, 0, 1, 0};
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(f[i], want[i]) << i;
}

TEST(Features, MirrorSwapsChildCounts) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    const Design d = shaped_blocks(n, rng);
    const std::vector<double> ratio(n, 1.0);
    const auto ids = iota(n);
    const BStarTree t = random_tree(ids, rng);
    const BStarTree m = t.mirrored();
    const auto dims = dims_of(d, ratio);
    const auto a = extract_features(t, pack(t, dims), d, 6);
    const auto b = extract_features(m, pack(m, dims), d, 6);
    for (std::size_t l = 0; l < 6; ++l) {
      EXPECT_EQ(a[l * 5 + 0], b[l * 5 + 0]);
      EXPECT_EQ(a[l * 5 + 1], b[l * 5 + 2]);
      EXPECT_EQ(a[l * 5 + 2], b[l * 5 + 1]);
      EXPECT_EQ(a[l * 5 + 3], b[l * 5 + 3]);
    }
  }
}
