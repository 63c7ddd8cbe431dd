#pragma once

// Fiduccia-Mattheyses min-cut partitioning of the block/net hypergraph, used
// by the baseline flow. More than two parts are produced by recursive
// bisection.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hfp/die_assign.hpp"
#include "hfp/error.hpp"
#include "hfp/model.hpp"
#include "hfp/random.hpp"

namespace hfp {

struct PartitionConfig {
  double tolerance = 0.1;  // allowed deviation of a part's weight from its target, relative
  int starts = 8;          // random initial partitions; the best result is kept
  int max_passes = 20;
};

/// Weighted number of nets whose pins span more than one part.
inline double cut_size(const Design& design, std::span<const std::size_t> part_of) {
  double cut = 0.0;
  for (const Net& net : design.nets) {
    if (net.pins.empty()) continue;
    const std::size_t p = part_of[net.pins.front()];
    for (std::size_t pin : net.pins) {
      if (part_of[pin] != p) {
        cut += net.weight;
        break;
      }
    }
  }
  return cut;
}

namespace detail {

struct Hypergraph {
  std::vector<double> weight;                   // per vertex
  std::vector<std::vector<std::size_t>> nets;   // vertex lists, >= 2 pins
  std::vector<double> net_weight;
  std::vector<std::vector<std::size_t>> incident;  // per vertex, net indices
};

inline Hypergraph sub_hypergraph(const Design& design, std::span<const std::size_t> subset) {
  Hypergraph g;
  std::vector<std::size_t> local(design.blocks.size(), SIZE_MAX);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    local[subset[i]] = i;
    g.weight.push_back(oldest_area(design, design.blocks[subset[i]]));
  }
  g.incident.assign(subset.size(), {});
  for (const Net& net : design.nets) {
    std::vector<std::size_t> pins;
    for (std::size_t p : net.pins) {
      if (local[p] != SIZE_MAX) pins.push_back(local[p]);
    }
    if (pins.size() < 2) continue;
    for (std::size_t v : pins) g.incident[v].push_back(g.nets.size());
    g.nets.push_back(std::move(pins));
    g.net_weight.push_back(net.weight);
  }
  return g;
}

inline double bisection_cut(const Hypergraph& g, const std::vector<int>& side) {
  double cut = 0.0;
  for (std::size_t e = 0; e < g.nets.size(); ++e) {
    const int s = side[g.nets[e].front()];
    for (std::size_t v : g.nets[e]) {
      if (side[v] != s) {
        cut += g.net_weight[e];
        break;
      }
    }
  }
  return cut;
}

}  // namespace detail

/// Bisect `subset` so that side 0 carries about `fraction` of the total
/// oldest-tech area. `fixed[i]`, when set, pins subset[i] to a side. Returns
/// the side (0 or 1) of every subset element.
inline std::vector<int> fm_bisect(const Design& design, std::span<const std::size_t> subset,
                                  std::span<const std::optional<int>> fixed, double fraction,
                                  const PartitionConfig& cfg, Rng& rng) {
  const std::size_t n = subset.size();
  if (n == 0) return {};
  const detail::Hypergraph g = detail::sub_hypergraph(design, subset);
  double total = 0.0;
  for (double w : g.weight) total += w;
  const double target = fraction * total;
  const double slack = cfg.tolerance * target;

  std::vector<int> best_side(n, 0);
  double best_cut = std::numeric_limits<double>::infinity();
  double best_dev = std::numeric_limits<double>::infinity();

  for (int start = 0; start < std::max(1, cfg.starts); ++start) {
    // Random start: fixed vertices first, then fill side 0 in random order.
    std::vector<int> side(n, 1);
    double w0 = 0.0;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        side[i] = *fixed[i];
        if (side[i] == 0) w0 += g.weight[i];
      } else {
        order.push_back(i);
      }
    }
    rng.shuffle(order);
    for (std::size_t i : order) {
      if (std::abs(w0 + g.weight[i] - target) < std::abs(w0 - target)) {
        side[i] = 0;
        w0 += g.weight[i];
      }
    }
    // A pass may overshoot the balance by one vertex so unit moves are
    // possible; only prefixes inside the strict bound are kept.
    const double allowed = std::max(slack, std::abs(w0 - target));
    const double relaxed = allowed + *std::max_element(g.weight.begin(), g.weight.end());

    // count[e][s]: pins of net e on side s
    std::vector<std::array<int, 2>> count(g.nets.size(), {0, 0});
    for (std::size_t e = 0; e < g.nets.size(); ++e) {
      for (std::size_t v : g.nets[e]) ++count[e][static_cast<std::size_t>(side[v])];
    }
    auto gain = [&](std::size_t v) {
      const auto from = static_cast<std::size_t>(side[v]);
      const std::size_t to = 1 - from;
      double gsum = 0.0;
      for (std::size_t e : g.incident[v]) {
        if (count[e][from] == 1) gsum += g.net_weight[e];  // net leaves the cut
        if (count[e][to] == 0) gsum -= g.net_weight[e];    // net enters the cut
      }
      return gsum;
    };

    for (int pass = 0; pass < cfg.max_passes; ++pass) {
      std::vector<char> locked(n, 0);
      for (std::size_t i = 0; i < n; ++i) locked[i] = fixed[i].has_value();
      std::vector<std::size_t> moved;
      double running = 0.0, best_running = 0.0;
      std::size_t best_prefix = 0;
      for (;;) {
        std::size_t pick = n;
        double pick_gain = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
          if (locked[v]) continue;
          const double dw = side[v] == 0 ? -g.weight[v] : g.weight[v];
          if (std::abs(w0 + dw - target) > relaxed) continue;
          const double gv = gain(v);
          if (pick == n || gv > pick_gain) {
            pick = v;
            pick_gain = gv;
          }
        }
        if (pick == n) break;
        const auto from = static_cast<std::size_t>(side[pick]);
        for (std::size_t e : g.incident[pick]) {
          --count[e][from];
          ++count[e][1 - from];
        }
        w0 += side[pick] == 0 ? -g.weight[pick] : g.weight[pick];
        side[pick] = 1 - side[pick];
        locked[pick] = 1;
        moved.push_back(pick);
        running += pick_gain;
        if (running > best_running + 1e-12 && std::abs(w0 - target) <= allowed + 1e-9) {
          best_running = running;
          best_prefix = moved.size();
        }
      }
      // Roll back the moves after the best prefix.
      for (std::size_t k = moved.size(); k-- > best_prefix;) {
        const std::size_t v = moved[k];
        const auto from = static_cast<std::size_t>(side[v]);
        for (std::size_t e : g.incident[v]) {
          --count[e][from];
          ++count[e][1 - from];
        }
        w0 += side[v] == 0 ? -g.weight[v] : g.weight[v];
        side[v] = 1 - side[v];
      }
      if (best_prefix == 0) break;
    }

    const double cut = detail::bisection_cut(g, side);
    const double dev = std::max(0.0, std::abs(w0 - target) - slack);
    if (dev < best_dev || (dev == best_dev && cut < best_cut)) {
      best_dev = dev;
      best_cut = cut;
      best_side = side;
    }
  }
  return best_side;
}

/// Split all blocks into `parts` parts of equal oldest-tech area by recursive
/// bisection. `fixed_part[b]`, when set, forces block b into that part.
inline std::vector<std::size_t> partition_blocks(const Design& design, std::size_t parts,
                                                 std::span<const std::optional<std::size_t>> fixed_part,
                                                 const PartitionConfig& cfg, Rng& rng) {
  if (parts == 0) throw ConfigError("partition_blocks: zero parts");
  std::vector<std::size_t> part_of(design.blocks.size(), 0);
  std::vector<std::size_t> all(design.blocks.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto recurse = [&](auto&& self, std::vector<std::size_t> subset, std::size_t lo, std::size_t hi) -> void {
    if (hi - lo == 1 || subset.empty()) {
      for (std::size_t b : subset) part_of[b] = lo;
      return;
    }
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    std::vector<std::optional<int>> fixed(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (const auto& f = fixed_part[subset[i]]) fixed[i] = *f < mid ? 0 : 1;
    }
    const double fraction = static_cast<double>(mid - lo) / static_cast<double>(hi - lo);
    const std::vector<int> side = fm_bisect(design, subset, fixed, fraction, cfg, rng);
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < subset.size(); ++i) (side[i] == 0 ? a : b).push_back(subset[i]);
    self(self, std::move(a), lo, mid);
    self(self, std::move(b), mid, hi);
  };
  recurse(recurse, all, 0, parts);
  return part_of;
}

}  // namespace hfp
