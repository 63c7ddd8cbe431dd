#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace hfp;

TEST(Generator, SingleBlockHasNoNets) {
  GeneratorSpec s;
  s.n_blocks = 1;
  const Design d = generate(s);
  EXPECT_EQ(d.blocks.size(), 1u);
  EXPECT_TRUE(d.nets.empty());
}

TEST(Generator, SameSeedSameHash) {
  GeneratorSpec s;
  s.seed = 42;
  EXPECT_EQ(design_hash(generate(s)), design_hash(generate(s)));
  GeneratorSpec t = s;
  t.seed = 43;
  EXPECT_NE(design_hash(generate(s)), design_hash(generate(t)));
}

TEST(Generator, AreaRatioWithinNoise) {
  GeneratorSpec s;
  s.n_blocks = 1000;
  s.n_nets = 0;
  const Design d = generate(s);
  double mean = 0.0;
  for (const Block& b : d.blocks) {
    const double r = b.base(0).area / b.base(1).area;
    EXPECT_GE(r, s.area_ratio / (1 + s.area_noise) - 1e-9);
    EXPECT_LE(r, s.area_ratio / (1 - s.area_noise) + 1e-9);
    mean += std::log(r);
  }
  EXPECT_NEAR(std::exp(mean / 1000.0), s.area_ratio, 0.1);
}

TEST(Generator, TechnologyOrderingAndNets) {
  GeneratorSpec s;
  s.n_blocks = 40;
  s.n_nets = 80;
  s.n_dies = 3;
  const Design d = generate(s);
  ASSERT_EQ(d.technologies.size(), 2u);
  EXPECT_LT(d.technologies[0].cost_per_area, d.technologies[1].cost_per_area);
  EXPECT_EQ(d.oldest_tech(), 0u);
  EXPECT_EQ(d.dies[0].tech, 1u);
  EXPECT_EQ(d.dies[1].tech, 0u);
  EXPECT_EQ(d.dies[2].tech, 1u);
  for (const Block& b : d.blocks) {
    EXPECT_GT(b.base(0).area, b.base(1).area);
    EXPECT_GT(b.base(0).power, b.base(1).power);
    EXPECT_GT(b.base(0).tns, b.base(1).tns);
  }
  ASSERT_EQ(d.nets.size(), 80u);
  for (const Net& n : d.nets) {
    EXPECT_GE(n.pins.size(), 2u);
    EXPECT_LE(n.pins.size(), s.max_degree);
    for (std::size_t i = 1; i < n.pins.size(); ++i) EXPECT_LT(n.pins[i - 1], n.pins[i]);
    EXPECT_LT(n.pins.back(), d.blocks.size());
  }
  // The canonical form reloads to the same design.
  EXPECT_EQ(save_design_string(parse_design(save_design_string(d))), save_design_string(d));
}

TEST(Generator, HardIpsAreTheSmallestBlocks) {
  GeneratorSpec s;
  s.n_blocks = 20;
  s.hard_ip_count = 5;
  const Design d = generate(s);
  double largest_locked = 0.0, smallest_free = 1e300;
  std::size_t locked = 0;
  for (const Block& b : d.blocks) {
    if (b.locked()) {
      ++locked;
      EXPECT_EQ(b.hard_ip->tech, 0u);
      EXPECT_FALSE(b.has_tech(1));
      EXPECT_EQ(b.ratios, std::vector<double>{1.0});
      largest_locked = std::max(largest_locked, b.base(0).area);
    } else {
      smallest_free = std::min(smallest_free, b.base(0).area);
    }
  }
  EXPECT_EQ(locked, 5u);
  EXPECT_LE(largest_locked, smallest_free);
}

TEST(Generator, InvalidSpecs) {
  GeneratorSpec s;
  s.n_blocks = 0;
  EXPECT_THROW(generate(s), ConfigError);
  s = {};
  s.hard_ip_count = 100;
  EXPECT_THROW(generate(s), ConfigError);
  s = {};
  s.max_degree = 1;
  EXPECT_THROW(generate(s), ConfigError);
}
