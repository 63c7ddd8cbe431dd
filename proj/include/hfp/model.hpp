#pragma once

// Domain types and the analytic PPA / yield / cost / wirelength models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hfp/error.hpp"

namespace hfp {

inline constexpr double kUm2PerCm2 = 1e8;

struct Technology {
  std::string id;
  double scale_to_oldest = 1.0;  // area of an oldest-tech die / this tech's die
  double defect_density = 0.0;   // defects per cm^2
  double alpha = 10.0;           // yield clustering parameter
  double cost_per_area = 1.0;    // cost of a perfect-yield die per unit area
};

/// PPA of a block in one technology at aspect ratio 1.
struct BasePpa {
  double area = 0.0;   // um^2
  double power = 0.0;  // mW
  double tns = 0.0;    // ns, magnitude of total negative slack
  double kappa = 0.0;  // aspect-ratio sensitivity of power and tns
};

struct HardIpLock {
  std::size_t tech = 0;
  double ratio = 1.0;
};

struct Block {
  std::string id;
  std::vector<std::optional<BasePpa>> ppa;  // indexed by technology
  std::vector<double> ratios;               // height / width options
  std::optional<HardIpLock> hard_ip;
  std::size_t tech = 0;  // initial technology
  double ratio = 1.0;    // initial aspect ratio

  bool has_tech(std::size_t t) const { return t < ppa.size() && ppa[t].has_value(); }

  const BasePpa& base(std::size_t t) const {
    if (!has_tech(t)) {
      throw ConfigError("block '" + id + "' has no PPA entry for technology #" +
                        std::to_string(t));
    }
    return *ppa[t];
  }

  bool locked() const { return hard_ip.has_value(); }
};

struct Net {
  std::string id;
  std::vector<std::size_t> pins;  // block indices, distinct
  double weight = 1.0;
};

struct Die {
  std::string id;
  std::size_t tech = 0;
};

struct Design {
  std::vector<Technology> technologies;
  std::vector<Block> blocks;
  std::vector<Net> nets;
  std::vector<Die> dies;

  std::size_t oldest_tech() const {
    for (std::size_t t = 0; t < technologies.size(); ++t) {
      if (technologies[t].scale_to_oldest == 1.0) return t;
    }
    throw ConfigError("design has no technology with scale_to_oldest = 1");
  }
};

struct ObjectiveWeights {
  double omega = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
  double tau = 2.0;
  int n_max = 30;
  double a_min_factor = 0.8;
  double a_max_factor = 1.2;
  double die_margin = 0.0;          // um of margin around each die's block bbox
  bool cost_scale_by_area = false;  // C = Phi*A/Y instead of Phi/Y

  void validate() const {
    if (omega < 0 || beta < 0 || gamma < 0 || tau < 0) {
      throw ConfigError("objective weights must be non-negative");
    }
    if (n_max < 1) throw ConfigError("n_max must be a positive integer");
    if (!(a_min_factor > 0) || !(a_max_factor > 0) || !(a_min_factor < a_max_factor)) {
      throw ConfigError("require 0 < a_min_factor < a_max_factor");
    }
    if (die_margin < 0) throw ConfigError("die_margin must be non-negative");
  }
};

struct Dims {
  double width = 0.0;
  double height = 0.0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point center() const { return {x + 0.5 * w, y + 0.5 * h}; }
};

inline bool same_ratio(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

inline bool has_ratio_option(const Block& b, double rho) {
  return std::any_of(b.ratios.begin(), b.ratios.end(),
                     [rho](double r) { return same_ratio(r, rho); });
}

/// The aspect ratio option closest to 1 (smaller on ties).
inline double ratio_closest_to_one(const Block& b) {
  double best = b.ratio;
  double dist = std::numeric_limits<double>::infinity();
  for (double r : b.ratios) {
    const double d = std::abs(r - 1.0);
    if (d < dist || (d == dist && r < best)) {
      best = r;
      dist = d;
    }
  }
  return best;
}

/// Rectangle realizing the block's area at aspect ratio rho (height / width).
inline Dims block_dims(const Block& b, std::size_t tech, double rho) {
  const double area = b.base(tech).area;
  return {std::sqrt(area / rho), std::sqrt(area * rho)};
}

inline Dims block_dims(const Block& b) { return block_dims(b, b.tech, b.ratio); }

struct BlockPpa {
  double area = 0.0;
  double power = 0.0;
  double tns = 0.0;
};

/// Analytic stand-in for a learned PPA model: area is fixed per technology,
/// power and tns grow with the aspect-ratio penalty rho + 1/rho - 2.
inline BlockPpa block_ppa(const Block& b, std::size_t tech, double rho) {
  const BasePpa& base = b.base(tech);
  const double factor = 1.0 + base.kappa * (rho + 1.0 / rho - 2.0);
  return {base.area, base.power * factor, base.tns * factor};
}

inline BlockPpa block_ppa(const Block& b) { return block_ppa(b, b.tech, b.ratio); }

/// Negative-binomial die yield; `area` in um^2.
inline double die_yield(double area, const Technology& tech) {
  const double area_cm2 = area / kUm2PerCm2;
  return std::pow(1.0 + tech.defect_density * area_cm2 / tech.alpha, -tech.alpha);
}

/// Manufacturing cost per yielded area, Phi / Y. With `scale_by_area` the
/// result is the total die cost Phi * A / Y.
inline double die_cost(double area, const Technology& tech, bool scale_by_area = false) {
  const double per_area = tech.cost_per_area / die_yield(area, tech);
  return scale_by_area ? per_area * area : per_area;
}

/// Area of a die whose blocks occupy a width x height bounding box.
inline double die_area(double width, double height, double margin) {
  if (width <= 0.0 || height <= 0.0) return 0.0;
  return (width + 2.0 * margin) * (height + 2.0 * margin);
}

/// Weighted half-perimeter wirelength over the pin centers of `net`.
/// `centers` is indexed by block.
inline double net_hpwl(const Net& net, std::span<const Point> centers) {
  if (net.pins.empty()) return 0.0;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (std::size_t pin : net.pins) {
    if (pin >= centers.size()) {
      throw StateError("net '" + net.id + "' pin #" + std::to_string(pin) + " has no center");
    }
    const Point& c = centers[pin];
    xmin = std::min(xmin, c.x);
    xmax = std::max(xmax, c.x);
    ymin = std::min(ymin, c.y);
    ymax = std::max(ymax, c.y);
  }
  return net.weight * ((xmax - xmin) + (ymax - ymin));
}

/// Per-block placement facts the objective needs.
struct PlacedBlock {
  std::size_t die = 0;
  std::size_t tech = 0;
  double ratio = 1.0;
  Point center;
};

using DiePair = std::pair<std::size_t, std::size_t>;

struct ObjectiveBreakdown {
  double total_hpwl = 0.0;
  double total_power = 0.0;
  double total_cost = 0.0;
  double total_tns = 0.0;
  double f = 0.0;
  std::map<DiePair, int> inter_die_net_counts;  // only pairs with a shared net
  std::vector<double> die_areas;
  double area_violation = 0.0;  // sum of out-of-window die area, relative to z
  double net_violation = 0.0;   // sum of (N_ij - N_max) / N_max over pairs
  bool feasible = true;

  double violation() const { return area_violation + net_violation; }
};

/// Relative distance of `area` outside [a_min_factor*z, a_max_factor*z].
inline double area_window_violation(double area, double z, const ObjectiveWeights& w) {
  if (z <= 0.0) return 0.0;
  const double lo = w.a_min_factor * z;
  const double hi = w.a_max_factor * z;
  if (area > hi) return (area - hi) / z;
  if (area < lo) return (lo - area) / z;
  return 0.0;
}

/// Count, for each die pair, the nets with pins on both dies.
inline std::map<DiePair, int> count_inter_die_nets(const Design& design,
                                                   std::span<const std::size_t> die_of) {
  std::map<DiePair, int> counts;
  std::vector<std::size_t> touched;
  for (const Net& net : design.nets) {
    touched.clear();
    for (std::size_t pin : net.pins) touched.push_back(die_of[pin]);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::size_t i = 0; i < touched.size(); ++i) {
      for (std::size_t j = i + 1; j < touched.size(); ++j) ++counts[{touched[i], touched[j]}];
    }
  }
  return counts;
}

/// Full objective f = omega*W + beta*P + gamma*sum C + tau*T plus constraint
/// status. `blocks` is indexed like design.blocks and holds global centers;
/// `die_areas` includes margins.
inline ObjectiveBreakdown evaluate(const Design& design, std::span<const PlacedBlock> blocks,
                                   std::span<const double> die_areas, double z,
                                   const ObjectiveWeights& w) {
  if (blocks.size() != design.blocks.size() || die_areas.size() != design.dies.size()) {
    throw StateError("evaluate: placement does not match the design");
  }
  ObjectiveBreakdown out;
  std::vector<Point> centers(blocks.size());
  std::vector<std::size_t> die_of(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    centers[i] = blocks[i].center;
    die_of[i] = blocks[i].die;
    const BlockPpa ppa = block_ppa(design.blocks[i], blocks[i].tech, blocks[i].ratio);
    out.total_power += ppa.power;
    out.total_tns += ppa.tns;
  }
  for (const Net& net : design.nets) out.total_hpwl += net_hpwl(net, centers);
  out.die_areas.assign(die_areas.begin(), die_areas.end());
  for (std::size_t d = 0; d < design.dies.size(); ++d) {
    const Technology& tech = design.technologies[design.dies[d].tech];
    out.total_cost += die_cost(die_areas[d], tech, w.cost_scale_by_area);
    out.area_violation += area_window_violation(die_areas[d], z, w);
  }
  out.inter_die_net_counts = count_inter_die_nets(design, die_of);
  for (const auto& [pair, count] : out.inter_die_net_counts) {
    if (count > w.n_max) out.net_violation += double(count - w.n_max) / w.n_max;
  }
  out.feasible = out.area_violation == 0.0 && out.net_violation == 0.0;
  out.f = w.omega * out.total_hpwl + w.beta * out.total_power + w.gamma * out.total_cost +
          w.tau * out.total_tns;
  return out;
}

}  // namespace hfp
