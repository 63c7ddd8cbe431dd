#pragma once

// Mutable solution state: die membership, technology and aspect ratio of every
// block, one B*-tree and packing per die, and the die arrangement.

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hfp/bstar_tree.hpp"
#include "hfp/die_assign.hpp"
#include "hfp/error.hpp"
#include "hfp/model.hpp"
#include "hfp/random.hpp"

namespace hfp {

/// Die arrangement and the penalty used to steer optimizers towards the
/// constraint window.
struct LayoutConfig {
  double min_die_spacing = 15.0;  // um
  double spacing_per_net = 0.0;   // um per allowed inter-die net
  double area_penalty = 1e6;      // per unit of relative constraint violation
  double infeasible_jump = 1e6;   // added to the ranking key of infeasible solutions
};

inline double die_gap(const LayoutConfig& cfg, const ObjectiveWeights& w) {
  return std::max(cfg.min_die_spacing, cfg.spacing_per_net * w.n_max);
}

/// Lower-left corners for die outlines laid out row-major on a grid
/// ceil(sqrt(m)) wide, separated by `gap`.
inline std::vector<Point> place_dies(std::span<const Dims> outlines, double gap) {
  const std::size_t m = outlines.size();
  std::vector<Point> origins(m);
  if (m == 0) return origins;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m)) - 1e-12));
  const std::size_t rows = (m + cols - 1) / cols;
  std::vector<double> col_w(cols, 0.0), row_h(rows, 0.0);
  for (std::size_t d = 0; d < m; ++d) {
    col_w[d % cols] = std::max(col_w[d % cols], outlines[d].width);
    row_h[d / cols] = std::max(row_h[d / cols], outlines[d].height);
  }
  std::vector<double> col_x(cols, 0.0), row_y(rows, 0.0);
  for (std::size_t c = 1; c < cols; ++c) col_x[c] = col_x[c - 1] + col_w[c - 1] + gap;
  for (std::size_t r = 1; r < rows; ++r) row_y[r] = row_y[r - 1] + row_h[r - 1] + gap;
  for (std::size_t d = 0; d < m; ++d) origins[d] = {col_x[d % cols], row_y[d / cols]};
  return origins;
}

struct DieLayout {
  BStarTree tree;
  Packing packing;
};

class Floorplan {
 public:
  Floorplan(const Design& design, const ObjectiveWeights& weights, const DiePlan& plan)
      : design_(&design),
        weights_(weights),
        z_(plan.z),
        die_of_(plan.die_of),
        tech_of_(plan.tech_of),
        ratio_of_(plan.ratio_of),
        dims_(design.blocks.size()),
        local_center_(design.blocks.size()),
        dies_(design.dies.size()) {
    for (std::size_t b = 0; b < dims_.size(); ++b) refresh_dims(b);
  }

  const Design& design() const { return *design_; }
  const ObjectiveWeights& weights() const { return weights_; }
  double z() const { return z_; }
  std::size_t die_count() const { return dies_.size(); }
  std::size_t block_count() const { return dims_.size(); }

  std::size_t die_of(std::size_t b) const { return die_of_[b]; }
  std::size_t tech_of(std::size_t b) const { return tech_of_[b]; }
  double ratio_of(std::size_t b) const { return ratio_of_[b]; }
  const Dims& dims(std::size_t b) const { return dims_[b]; }
  std::span<const Dims> all_dims() const { return dims_; }
  std::span<double> ratios() { return ratio_of_; }
  std::span<const double> ratios() const { return ratio_of_; }
  std::span<const std::size_t> die_assignment() const { return die_of_; }

  DieLayout& die(std::size_t d) { return dies_[d]; }
  const DieLayout& die(std::size_t d) const { return dies_[d]; }

  void set_tree(std::size_t d, BStarTree tree) {
    for (const auto& nd : tree.nodes()) die_of_[nd.block] = d;
    dies_[d].tree = std::move(tree);
    repack(d);
  }

  /// Random initial tree for every die from its current block set.
  void randomize_trees(std::span<const std::vector<std::size_t>> die_blocks, Rng& rng) {
    for (std::size_t d = 0; d < dies_.size(); ++d) set_tree(d, random_tree(die_blocks[d], rng));
  }

  void set_ratio(std::size_t b, double rho) {
    ratio_of_[b] = rho;
    refresh_dims(b);
  }

  void set_tech(std::size_t b, std::size_t t) {
    tech_of_[b] = t;
    refresh_dims(b);
  }

  void set_die(std::size_t b, std::size_t d) { die_of_[b] = d; }

  void refresh_dims(std::size_t b) { dims_[b] = block_dims(design_->blocks[b], tech_of_[b], ratio_of_[b]); }

  void repack(std::size_t d) {
    DieLayout& layout = dies_[d];
    layout.packing = pack(layout.tree, dims_);
    for (std::size_t i = 0; i < layout.tree.size(); ++i) {
      local_center_[layout.tree.node(static_cast<int>(i)).block] = layout.packing.rects[i].center();
    }
  }

  void restore_die(std::size_t d, const DieLayout& layout) {
    dies_[d] = layout;
    for (std::size_t i = 0; i < layout.tree.size(); ++i) {
      local_center_[layout.tree.node(static_cast<int>(i)).block] = layout.packing.rects[i].center();
    }
  }

  double die_area(std::size_t d) const {
    const Packing& p = dies_[d].packing;
    return hfp::die_area(p.width, p.height, weights_.die_margin);
  }

  Dims die_outline(std::size_t d) const {
    const Packing& p = dies_[d].packing;
    if (p.width <= 0.0 || p.height <= 0.0) return {0.0, 0.0};
    return {p.width + 2.0 * weights_.die_margin, p.height + 2.0 * weights_.die_margin};
  }

  Point local_center(std::size_t b) const { return local_center_[b]; }

  /// Objective restricted to die `d`: nets with at least two pins on the die
  /// contribute the HPWL of those pins, plus the die's power, tns and cost.
  double die_objective(std::size_t d) const {
    const Design& design = *design_;
    double hpwl = 0.0;
    for (const Net& net : design.nets) {
      std::size_t inside = 0;
      double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
      for (std::size_t pin : net.pins) {
        if (die_of_[pin] != d) continue;
        const Point c = local_center_[pin];
        if (inside++ == 0) {
          xmin = xmax = c.x;
          ymin = ymax = c.y;
        } else {
          xmin = std::min(xmin, c.x);
          xmax = std::max(xmax, c.x);
          ymin = std::min(ymin, c.y);
          ymax = std::max(ymax, c.y);
        }
      }
      if (inside >= 2) hpwl += net.weight * ((xmax - xmin) + (ymax - ymin));
    }
    double power = 0.0, tns = 0.0;
    for (const auto& nd : dies_[d].tree.nodes()) {
      const BlockPpa ppa = block_ppa(design.blocks[nd.block], tech_of_[nd.block], ratio_of_[nd.block]);
      power += ppa.power;
      tns += ppa.tns;
    }
    const double cost = die_cost(die_area(d), design.technologies[design.dies[d].tech],
                                 weights_.cost_scale_by_area);
    return weights_.omega * hpwl + weights_.beta * power + weights_.gamma * cost + weights_.tau * tns;
  }

  double die_violation(std::size_t d) const { return area_window_violation(die_area(d), z_, weights_); }

  std::vector<Dims> outlines() const {
    std::vector<Dims> out(dies_.size());
    for (std::size_t d = 0; d < dies_.size(); ++d) out[d] = die_outline(d);
    return out;
  }

  /// Lower-left corner of each die's block bounding box in global coordinates.
  std::vector<Point> die_origins(const LayoutConfig& cfg) const {
    const std::vector<Dims> outl = outlines();
    std::vector<Point> origins = place_dies(outl, die_gap(cfg, weights_));
    for (Point& o : origins) {
      o.x += weights_.die_margin;
      o.y += weights_.die_margin;
    }
    return origins;
  }

  std::vector<PlacedBlock> placed_blocks(std::span<const Point> origins) const {
    std::vector<PlacedBlock> out(dims_.size());
    for (std::size_t b = 0; b < dims_.size(); ++b) {
      const Point o = origins[die_of_[b]];
      out[b] = {die_of_[b], tech_of_[b], ratio_of_[b],
                {o.x + local_center_[b].x, o.y + local_center_[b].y}};
    }
    return out;
  }

  ObjectiveBreakdown evaluate(const LayoutConfig& cfg) const {
    for (std::size_t d = 0; d < dies_.size(); ++d) {
      if (dies_[d].packing.rects.size() != dies_[d].tree.size()) {
        throw StateError("evaluate: die " + std::to_string(d) + " is not packed");
      }
    }
    const std::vector<Point> origins = die_origins(cfg);
    const std::vector<PlacedBlock> placed = placed_blocks(origins);
    std::vector<double> areas(dies_.size());
    for (std::size_t d = 0; d < dies_.size(); ++d) areas[d] = die_area(d);
    return hfp::evaluate(*design_, placed, areas, z_, weights_);
  }

 private:
  const Design* design_;
  ObjectiveWeights weights_;
  double z_;
  std::vector<std::size_t> die_of_;
  std::vector<std::size_t> tech_of_;
  std::vector<double> ratio_of_;
  std::vector<Dims> dims_;
  std::vector<Point> local_center_;
  std::vector<DieLayout> dies_;
};

/// Ranking key for whole solutions: f plus a penalty growing with the
/// constraint violation, plus a jump so any feasible solution outranks any
/// infeasible one of comparable f. Equals f when feasible.
inline double solution_key(const ObjectiveBreakdown& bd, const LayoutConfig& cfg) {
  if (bd.feasible) return bd.f;
  return bd.f + cfg.area_penalty * bd.violation() + cfg.infeasible_jump;
}

/// One die of a floorplan as an optimization environment: apply a
/// perturbation, repack, rescore, and undo.
class DieEnv {
 public:
  struct Snapshot {
    DieLayout layout;
    std::vector<std::pair<std::size_t, double>> ratios;
    double score = 0.0;
    double violation = 0.0;  // area-window violation of this state
  };

  DieEnv(Floorplan& fp, std::size_t die, double penalty_weight)
      : fp_(&fp), die_(die), penalty_(penalty_weight) {
    resync();
  }

  std::size_t die() const { return die_; }
  std::size_t size() const { return fp_->die(die_).tree.size(); }
  Floorplan& floorplan() { return *fp_; }
  const Floorplan& floorplan() const { return *fp_; }

  /// Die objective plus the area-window penalty.
  double score() const { return score_; }

  double compute_score() const {
    return fp_->die_objective(die_) + penalty_ * fp_->die_violation(die_);
  }

  /// Re-read state after the floorplan was modified externally.
  void resync() {
    fp_->repack(die_);
    score_ = compute_score();
  }

  /// Apply a perturbation of `kind`; on success the die is repacked and
  /// rescored and undo() reverts it.
  PerturbResult apply(MoveKind kind, Rng& rng) {
    undo_ = snapshot();
    DieLayout& layout = fp_->die(die_);
    PerturbResult r = perturb(layout.tree, fp_->ratios(), fp_->design(), kind, rng);
    if (!r.applied) return r;
    if (r.resized_block) fp_->refresh_dims(*r.resized_block);
    fp_->repack(die_);
    score_ = compute_score();
    return r;
  }

  void undo() { restore(undo_); }

  Snapshot snapshot() const {
    Snapshot s{fp_->die(die_), {}, score_, fp_->die_violation(die_)};
    for (const auto& nd : s.layout.tree.nodes()) s.ratios.emplace_back(nd.block, fp_->ratio_of(nd.block));
    return s;
  }

  void restore(const Snapshot& s) {
    for (const auto& [b, rho] : s.ratios) {
      if (fp_->ratio_of(b) != rho) fp_->set_ratio(b, rho);
    }
    fp_->restore_die(die_, s.layout);
    score_ = s.score;
  }

  std::vector<double> features(int h) const {
    const DieLayout& layout = fp_->die(die_);
    return extract_features(layout.tree, layout.packing, fp_->design(), h);
  }

 private:
  Floorplan* fp_;
  std::size_t die_;
  double penalty_;
  double score_ = 0.0;
  Snapshot undo_;
};

}  // namespace hfp
