#pragma once

// Initial die assignment: average die area, greedy block placement and
// per-block aspect-ratio selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hfp/error.hpp"
#include "hfp/model.hpp"

namespace hfp {

struct DiePlan {
  std::vector<std::vector<std::size_t>> die_blocks;  // per die, block indices
  std::vector<std::size_t> die_of;                    // per block
  std::vector<std::size_t> tech_of;                   // per block
  std::vector<double> ratio_of;                       // per block
  std::vector<double> fill;  // per die, oldest-tech area divided by the die's scale
  double z = 0.0;            // common die area, in each die's own technology
};

/// Area of `b` expressed in the oldest technology at aspect ratio 1. Hard IPs
/// only exist in their locked technology, so their area is scaled up.
inline double oldest_area(const Design& design, const Block& b) {
  if (b.locked()) {
    const std::size_t t = b.hard_ip->tech;
    return b.base(t).area * design.technologies[t].scale_to_oldest;
  }
  return b.base(design.oldest_tech()).area;
}

/// Solve sum_i s_i * z = sum_b A(b, oldest, 1) for z.
inline double estimate_z(const Design& design) {
  if (design.blocks.empty()) throw ConfigError("estimate_z: design has no blocks");
  if (design.dies.empty()) throw ConfigError("estimate_z: design has no dies");
  double total_scale = 0.0;
  for (const Die& d : design.dies) total_scale += design.technologies[d.tech].scale_to_oldest;
  if (!(total_scale > 0.0)) throw ConfigError("estimate_z: total die scale is zero");
  double total_area = 0.0;
  for (const Block& b : design.blocks) total_area += oldest_area(design, b);
  return total_area / total_scale;
}

/// Greedy first-fit in non-increasing oldest-tech area. Hard IPs go first, to
/// the die of their technology with the most remaining capacity.
inline DiePlan assign_blocks(const Design& design, double z) {
  if (!(z > 0.0)) throw ConfigError("assign_blocks: z must be positive");
  const std::size_t n = design.blocks.size();
  const std::size_t m = design.dies.size();
  DiePlan plan;
  plan.z = z;
  plan.die_blocks.assign(m, {});
  plan.die_of.assign(n, 0);
  plan.tech_of.assign(n, 0);
  plan.ratio_of.assign(n, 1.0);
  plan.fill.assign(m, 0.0);

  std::vector<double> area(n);
  for (std::size_t i = 0; i < n; ++i) area[i] = oldest_area(design, design.blocks[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (area[a] != area[b]) return area[a] > area[b];
    return design.blocks[a].id < design.blocks[b].id;
  });

  auto scale = [&](std::size_t d) { return design.technologies[design.dies[d].tech].scale_to_oldest; };
  auto place = [&](std::size_t blk, std::size_t d) {
    plan.die_blocks[d].push_back(blk);
    plan.die_of[blk] = d;
    plan.tech_of[blk] = design.dies[d].tech;
    plan.fill[d] += area[blk] / scale(d);
    const Block& b = design.blocks[blk];
    plan.ratio_of[blk] = b.locked() ? b.hard_ip->ratio : b.ratio;
  };

  for (std::size_t blk : order) {
    const Block& b = design.blocks[blk];
    if (!b.locked()) continue;
    std::size_t best = m;
    for (std::size_t d = 0; d < m; ++d) {
      if (design.dies[d].tech != b.hard_ip->tech) continue;
      if (best == m || z - plan.fill[d] > z - plan.fill[best]) best = d;
    }
    if (best == m) {
      throw InfeasibleInput("hard IP '" + b.id + "' is locked to technology '" +
                            design.technologies[b.hard_ip->tech].id + "' but no die uses it");
    }
    place(blk, best);
  }

  for (std::size_t blk : order) {
    if (design.blocks[blk].locked()) continue;
    std::size_t chosen = m;
    for (std::size_t d = 0; d < m && chosen == m; ++d) {
      if (plan.fill[d] + area[blk] / scale(d) <= z) chosen = d;
    }
    if (chosen == m) {
      double least = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        const double over = plan.fill[d] + area[blk] / scale(d) - z;
        if (chosen == m || over < least) {
          chosen = d;
          least = over;
        }
      }
    }
    place(blk, chosen);
  }
  return plan;
}

/// Per-block argmin of beta*P + tau*T over the aspect-ratio options, in the
/// block's assigned technology. Ties prefer the ratio closest to 1, then the
/// smaller ratio. Hard IPs keep their locked ratio.
inline void refine_ratios(const Design& design, DiePlan& plan, const ObjectiveWeights& w) {
  for (std::size_t blk = 0; blk < design.blocks.size(); ++blk) {
    const Block& b = design.blocks[blk];
    if (b.locked()) {
      plan.ratio_of[blk] = b.hard_ip->ratio;
      continue;
    }
    double best_rho = 0.0;
    double best_val = 0.0;
    bool first = true;
    for (double rho : b.ratios) {
      const BlockPpa ppa = block_ppa(b, plan.tech_of[blk], rho);
      const double val = w.beta * ppa.power + w.tau * ppa.tns;
      bool better = first;
      if (!first) {
        const double tol = 1e-12 * std::max({1.0, std::abs(val), std::abs(best_val)});
        if (val < best_val - tol) {
          better = true;
        } else if (std::abs(val - best_val) <= tol) {
          const double da = std::abs(rho - 1.0), db = std::abs(best_rho - 1.0);
          better = da < db || (da == db && rho < best_rho);
        }
      }
      if (better) {
        best_rho = rho;
        best_val = val;
        first = false;
      }
    }
    plan.ratio_of[blk] = best_rho;
  }
}

/// Feasibility audit of a greedy plan, which ignores connectivity. When some
/// die pair shares more than n_max nets, FM-style passes move unlocked blocks
/// to shrink the excess and then the total cut. Fills stay inside the area
/// window with the upper edge pulled halfway to z, leaving room for packing
/// whitespace; a die already above that edge may not grow. Deterministic.
/// Returns true when the plan meets the net limit.
inline bool audit_net_limit(const Design& design, DiePlan& plan, const ObjectiveWeights& w, int max_passes = 8) {
  const std::size_t n = design.blocks.size();
  const std::size_t m = design.dies.size();
  if (m < 2) return true;

  std::vector<std::vector<std::size_t>> nets_of(n);
  for (std::size_t e = 0; e < design.nets.size(); ++e) {
    for (std::size_t b : design.nets[e].pins) nets_of[b].push_back(e);
  }
  // pins[e][d]: pins of net e on die d.
  std::vector<std::vector<int>> pins(design.nets.size(), std::vector<int>(m, 0));
  for (std::size_t e = 0; e < design.nets.size(); ++e) {
    for (std::size_t b : design.nets[e].pins) ++pins[e][plan.die_of[b]];
  }
  std::vector<int> pair(m * m, 0);
  auto account = [&](std::size_t e, int sign) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (pins[e][i] > 0 && pins[e][j] > 0) pair[i * m + j] += sign;
      }
    }
  };
  for (std::size_t e = 0; e < design.nets.size(); ++e) account(e, +1);
  auto excess = [&]() {
    int x = 0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) x += std::max(0, pair[i * m + j] - w.n_max);
    }
    return x;
  };
  auto cut = [&]() {
    int c = 0;
    for (int v : pair) c += v;
    return c;
  };
  if (excess() == 0) return true;

  auto scale = [&](std::size_t d) { return design.technologies[design.dies[d].tech].scale_to_oldest; };
  std::vector<double> area(n);
  for (std::size_t b = 0; b < n; ++b) area[b] = oldest_area(design, design.blocks[b]);
  const double lo = w.a_min_factor * plan.z;
  const double edge = 0.5 * (1.0 + w.a_max_factor) * plan.z;
  std::vector<double> hi(m);
  for (std::size_t d = 0; d < m; ++d) hi[d] = std::max(edge, plan.fill[d]);

  auto move = [&](std::size_t b, std::size_t to) {
    const std::size_t from = plan.die_of[b];
    for (std::size_t e : nets_of[b]) {
      account(e, -1);
      --pins[e][from];
      ++pins[e][to];
      account(e, +1);
    }
    plan.fill[from] -= area[b] / scale(from);
    plan.fill[to] += area[b] / scale(to);
    plan.die_of[b] = to;
  };
  auto spread = [&]() {
    double s = 0.0;
    for (double f : plan.fill) s += std::abs(f - plan.z);
    return s;
  };
  using Key = std::tuple<int, int, double>;
  auto key = [&]() { return Key{excess(), cut(), spread()}; };

  Key best = key();
  for (int pass = 0; pass < max_passes && std::get<0>(best) > 0; ++pass) {
    std::vector<bool> locked(n, false);
    std::vector<std::pair<std::size_t, std::size_t>> trail;  // (block, origin die)
    std::size_t keep = 0;
    Key pass_best = best;
    for (;;) {
      bool found = false;
      Key pick{};
      std::size_t pick_b = 0, pick_t = 0;
      for (std::size_t b = 0; b < n; ++b) {
        if (locked[b] || design.blocks[b].locked()) continue;
        const std::size_t from = plan.die_of[b];
        for (std::size_t t = 0; t < m; ++t) {
          if (t == from || !design.blocks[b].has_tech(design.dies[t].tech)) continue;
          const double f_from = plan.fill[from] - area[b] / scale(from);
          const double f_to = plan.fill[t] + area[b] / scale(t);
          if (f_from < lo || f_to > hi[t]) continue;
          move(b, t);
          const Key k = key();
          move(b, from);
          if (!found || k < pick) {
            found = true;
            pick = k;
            pick_b = b;
            pick_t = t;
          }
        }
      }
      if (!found) break;
      trail.emplace_back(pick_b, plan.die_of[pick_b]);
      move(pick_b, pick_t);
      locked[pick_b] = true;
      if (pick < pass_best) {
        pass_best = pick;
        keep = trail.size();
      }
    }
    while (trail.size() > keep) {
      move(trail.back().first, trail.back().second);
      trail.pop_back();
    }
    if (!(pass_best < best)) break;
    best = pass_best;
  }

  // Rebuild the per-die lists, keeping the greedy order of blocks that stayed.
  std::vector<std::vector<std::size_t>> lists(m);
  for (std::size_t d = 0; d < m; ++d) {
    for (std::size_t b : plan.die_blocks[d]) {
      if (plan.die_of[b] == d) lists[d].push_back(b);
    }
  }
  for (std::size_t d = 0; d < m; ++d) {
    for (std::size_t b : plan.die_blocks[d]) {
      if (plan.die_of[b] != d) lists[plan.die_of[b]].push_back(b);
    }
  }
  plan.die_blocks = std::move(lists);
  for (std::size_t b = 0; b < n; ++b) plan.tech_of[b] = design.dies[plan.die_of[b]].tech;
  return std::get<0>(best) == 0;
}

/// All three Phase I steps, plus the net-limit audit before ratio selection.
inline DiePlan initial_assignment(const Design& design, const ObjectiveWeights& w) {
  DiePlan plan = assign_blocks(design, estimate_z(design));
  audit_net_limit(design, plan, w);
  refine_ratios(design, plan, w);
  return plan;
}

}  // namespace hfp
