#pragma once

// Seeded synthetic two-technology designs for benchmarking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hfp/error.hpp"
#include "hfp/model.hpp"
#include "hfp/random.hpp"

namespace hfp {

struct GeneratorSpec {
  std::size_t n_blocks = 24;
  std::size_t n_nets = 36;
  std::size_t n_dies = 2;         // alternating new / old technology, new first
  std::size_t hard_ip_count = 0;  // smallest blocks, locked to the old technology at ratio 1
  std::uint64_t seed = 1;

  double mean_area = 1e4;      // um^2, old technology, median of the lognormal
  double area_sigma = 0.5;     // lognormal shape
  double area_ratio = 9.0;     // old area / new area per block
  double area_noise = 0.1;     // relative uniform noise on the new area
  double power_min = 5.0, power_max = 30.0;  // mW, old technology
  double power_factor_min = 0.35, power_factor_max = 0.5;  // new / old
  double tns_min = 1.0, tns_max = 10.0;                    // ns, old technology
  double tns_factor_min = 0.4, tns_factor_max = 0.6;       // new / old
  double kappa_min = 0.02, kappa_max = 0.2;
  std::vector<double> ratios{0.5, 2.0 / 3.0, 1.0, 1.5, 2.0};

  double geometric_p = 0.5;  // extra pins beyond 2 follow Geometric(p)
  std::size_t max_degree = 8;
  std::size_t locality = 8;  // pins drawn from a window of this many block indices

  void validate() const {
    if (n_blocks == 0) throw ConfigError("generator: n_blocks must be positive");
    if (n_dies == 0) throw ConfigError("generator: n_dies must be positive");
    if (hard_ip_count > n_blocks) throw ConfigError("generator: more hard IPs than blocks");
    if (!(mean_area > 0.0) || area_sigma < 0.0 || !(area_ratio >= 1.0)) {
      throw ConfigError("generator: invalid area parameters");
    }
    if (area_noise < 0.0 || area_noise >= 1.0) throw ConfigError("generator: area_noise must be in [0,1)");
    if (power_min <= 0.0 || power_max < power_min || tns_min < 0.0 || tns_max < tns_min) {
      throw ConfigError("generator: invalid power/tns range");
    }
    if (!(geometric_p > 0.0 && geometric_p <= 1.0)) throw ConfigError("generator: geometric_p must be in (0,1]");
    if (max_degree < 2) throw ConfigError("generator: max_degree must be >= 2");
    if (ratios.empty()) throw ConfigError("generator: no aspect ratios");
    for (double r : ratios) {
      if (!(r > 0.0)) throw ConfigError("generator: aspect ratios must be positive");
    }
  }
};

/// Technologies used by generated designs: index 0 is the old node.
inline std::vector<Technology> default_technologies() {
  return {
      {"45nm", 1.0, 0.05, 10.0, 1.0},
      {"7nm", 9.0, 0.09, 10.0, 2.5},
  };
}

/// Lock the `count` smallest unlocked blocks (by oldest-tech area) to the
/// oldest technology at the ratio option closest to 1, dropping their other
/// PPA entries.
inline Design lock_hard_ips(Design design, std::size_t count) {
  const std::size_t old_t = design.oldest_tech();
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < design.blocks.size(); ++b) {
    if (!design.blocks[b].locked() && design.blocks[b].has_tech(old_t)) order.push_back(b);
  }
  if (count > order.size()) throw ConfigError("cannot lock " + std::to_string(count) + " blocks");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return design.blocks[a].base(old_t).area < design.blocks[b].base(old_t).area;
  });
  for (std::size_t k = 0; k < count; ++k) {
    Block& b = design.blocks[order[k]];
    const double rho = ratio_closest_to_one(b);
    for (std::size_t t = 0; t < b.ppa.size(); ++t) {
      if (t != old_t) b.ppa[t].reset();
    }
    b.hard_ip = HardIpLock{old_t, rho};
    b.ratios = {rho};
    b.tech = old_t;
    b.ratio = rho;
  }
  return design;
}

inline Design generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Design d;
  d.technologies = default_technologies();
  const std::size_t old_t = 0, new_t = 1;

  for (std::size_t i = 0; i < spec.n_blocks; ++i) {
    Block b;
    b.id = "b" + std::to_string(i);
    const double a_old = spec.mean_area * std::exp(spec.area_sigma * rng.normal());
    const double a_new = a_old / spec.area_ratio * (1.0 + spec.area_noise * rng.uniform(-1.0, 1.0));
    const double p_old = rng.uniform(spec.power_min, spec.power_max);
    const double p_new = p_old * rng.uniform(spec.power_factor_min, spec.power_factor_max);
    const double t_old = rng.uniform(spec.tns_min, spec.tns_max);
    const double t_new = t_old * rng.uniform(spec.tns_factor_min, spec.tns_factor_max);
    const double kappa = rng.uniform(spec.kappa_min, spec.kappa_max);
    b.ppa.resize(2);
    b.ppa[old_t] = BasePpa{a_old, p_old, t_old, kappa};
    b.ppa[new_t] = BasePpa{a_new, p_new, t_new, kappa};
    b.ratios = spec.ratios;
    b.tech = old_t;
    b.ratio = has_ratio_option(b, 1.0) ? 1.0 : b.ratios.front();
    d.blocks.push_back(std::move(b));
  }

  // Multi-pin nets need at least two blocks.
  const std::size_t n_nets = spec.n_blocks < 2 ? 0 : spec.n_nets;
  for (std::size_t e = 0; e < n_nets; ++e) {
    std::size_t degree = 2;
    while (degree < spec.max_degree && !rng.bernoulli(spec.geometric_p)) ++degree;
    const std::size_t window = std::min(spec.n_blocks, std::max(spec.locality, degree));
    degree = std::min(degree, window);
    const std::size_t base = rng.uniform_index(spec.n_blocks);
    std::vector<std::size_t> offsets(window);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    rng.shuffle(offsets);
    Net net;
    net.id = "n" + std::to_string(e);
    for (std::size_t k = 0; k < degree; ++k) net.pins.push_back((base + offsets[k]) % spec.n_blocks);
    std::sort(net.pins.begin(), net.pins.end());
    d.nets.push_back(std::move(net));
  }

  for (std::size_t i = 0; i < spec.n_dies; ++i) {
    d.dies.push_back({"d" + std::to_string(i), i % 2 == 0 ? new_t : old_t});
  }
  return spec.hard_ip_count > 0 ? lock_hard_ips(std::move(d), spec.hard_ip_count) : d;
}

}  // namespace hfp
