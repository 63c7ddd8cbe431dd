#pragma once

// Small hand-built designs shared by the unit tests.

#include <string>
#include <vector>

#include "hfp/hfp.hpp"

namespace hfp::test {

inline Technology tech(const std::string& id, double scale, double delta = 0.0, double phi = 1.0) {
  return Technology{id, scale, delta, 10.0, phi};
}

inline Block block(const std::string& id, double area, std::vector<double> ratios = {1.0},
                   double power = 1.0, double tns = 1.0, double kappa = 0.0) {
  Block b;
  b.id = id;
  b.ppa = {BasePpa{area, power, tns, kappa}};
  b.ratios = std::move(ratios);
  b.ratio = b.ratios.front();
  for (double r : b.ratios) {
    if (r == 1.0) b.ratio = 1.0;
  }
  return b;
}

inline Net net(const std::string& id, std::vector<std::size_t> pins) { return Net{id, std::move(pins), 1.0}; }

/// One technology, `dies` identical dies, blocks with the given areas.
inline Design uniform_design(const std::vector<double>& areas, std::size_t dies = 1) {
  Design d;
  d.technologies = {tech("t0", 1.0)};
  for (std::size_t i = 0; i < areas.size(); ++i) d.blocks.push_back(block("b" + std::to_string(i), areas[i]));
  for (std::size_t i = 0; i < dies; ++i) d.dies.push_back({"d" + std::to_string(i), 0});
  return d;
}

/// Two technologies (old "45nm" and a newer one 9x denser), generated blocks.
inline Design small_generated(std::size_t blocks, std::uint64_t seed, std::size_t dies = 2) {
  GeneratorSpec spec;
  spec.n_blocks = blocks;
  spec.n_nets = blocks * 3 / 2;
  spec.n_dies = dies;
  spec.seed = seed;
  return generate(spec);
}

/// Interiors intersect, with a tolerance for touching edges.
inline bool overlaps(const Rect& a, const Rect& b, double eps = 1e-9) {
  return a.x + eps < b.x + b.w && b.x + eps < a.x + a.w && a.y + eps < b.y + b.h && b.y + eps < a.y + a.h;
}

}  // namespace hfp::test
