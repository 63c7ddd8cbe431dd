#pragma once

// End-to-end flows: initial die assignment, round-robin intra-die
// optimization (SA or PPO) interleaved with inter-die refinement, and the
// partition-first baseline.

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hfp/die_assign.hpp"
#include "hfp/error.hpp"
#include "hfp/floorplan.hpp"
#include "hfp/model.hpp"
#include "hfp/partition.hpp"
#include "hfp/ppo.hpp"
#include "hfp/random.hpp"
#include "hfp/sa.hpp"

namespace hfp {

enum class Method { baseline, sa, rl };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::sa: return "sa";
    case Method::rl: return "rl";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "baseline") return Method::baseline;
  if (s == "sa") return Method::sa;
  if (s == "rl") return Method::rl;
  throw ConfigError("unknown method '" + s + "' (expected baseline, sa or rl)");
}

inline constexpr int kNoRefinement = INT_MAX;

struct RefineConfig {
  int k_interval = 20;       // optimizer steps between refinements
  bool accept_any = false;   // skip the "f must not worsen" gate
};

struct MmfpConfig {
  ObjectiveWeights weights;
  LayoutConfig layout;
  RefineConfig refine;
  SaConfig sa;
  PpoConfig ppo;
  PartitionConfig partition;
  int max_total_steps = 2500;  // optimizer steps plus refinements
  bool budget_per_die = false;  // scale the budget by the die count
  double stop_epsilon = 1e-4;
  int window = 500;
  int die_window = 200;  // a die's own steps without progress before it leaves the rotation
  bool restart_stalled = true;  // a die stuck outside the area window restarts from a random tree

  void validate() const {
    weights.validate();
    sa.validate();
    ppo.validate();
    if (refine.k_interval < 1) throw ConfigError("k_interval must be >= 1");
    if (max_total_steps < 1 || window < 1 || die_window < 1) throw ConfigError("step budget and window must be positive");
    if (!(stop_epsilon > 0.0)) throw ConfigError("stop_epsilon must be positive");
    if (layout.min_die_spacing < 0.0 || layout.spacing_per_net < 0.0) {
      throw ConfigError("die spacing must be non-negative");
    }
  }
};

struct IterationRecord {
  std::size_t step = 0;
  double f = 0.0;  // best ranking key so far; equals f once feasible
};

struct MmfpSolution {
  MmfpSolution(Method m, DiePlan p, Floorplan fp, const LayoutConfig& l)
      : method(m), plan(std::move(p)), floorplan(std::move(fp)), layout(l) {}

  Method method = Method::sa;
  DiePlan plan;  // state after the initial assignment
  Floorplan floorplan;
  LayoutConfig layout;
  std::vector<Point> die_origins;
  ObjectiveBreakdown breakdown;
  std::vector<IterationRecord> log;
  std::size_t steps = 0;
  std::size_t refinements_tried = 0;
  std::size_t refinements_applied = 0;
  std::optional<PpoAgent> agent;

  double key() const { return solution_key(breakdown, layout); }
};

/// Called after every global step with the step count.
using FloorplanObserver = std::function<void(const Floorplan&, std::size_t step)>;

struct RefineResult {
  bool applied = false;
  std::string reason;  // why a move was rejected
};

namespace detail {

inline double point_rect_distance(Point p, const Rect& r) {
  const double dx = std::max({r.x - p.x, 0.0, p.x - (r.x + r.w)});
  const double dy = std::max({r.y - p.y, 0.0, p.y - (r.y + r.h)});
  return std::hypot(dx, dy);
}

}  // namespace detail

/// Move block `b` to die `target` if the constraints and the objective allow.
/// The block takes the target die's technology and is inserted at the free
/// child slot whose position lies closest to its source die.
inline RefineResult refine_move(Floorplan& fp, std::size_t b, std::size_t target,
                                const MmfpConfig& cfg) {
  const Design& design = fp.design();
  const std::size_t src = fp.die_of(b);
  if (fp.die_count() < 2) return {false, "single die"};
  if (target == src) return {false, "same die"};
  const Block& blk = design.blocks[b];
  const std::size_t tech = design.dies[target].tech;
  if (blk.locked() && blk.hard_ip->tech != tech) return {false, "hard IP technology lock"};
  if (!blk.has_tech(tech)) return {false, "no PPA entry for target technology"};

  const ObjectiveBreakdown before = fp.evaluate(cfg.layout);
  const double key_before = solution_key(before, cfg.layout);
  const std::vector<Point> origins = fp.die_origins(cfg.layout);
  const DieLayout src_saved = fp.die(src);
  const DieLayout dst_saved = fp.die(target);
  const std::size_t tech_saved = fp.tech_of(b);

  const Packing& sp = src_saved.packing;
  const Rect src_rect{origins[src].x, origins[src].y, sp.width, sp.height};

  BStarTree& stree = fp.die(src).tree;
  stree.erase(stree.find(b));
  fp.repack(src);

  fp.set_tech(b, tech);
  fp.set_die(b, target);
  const Dims dims = fp.dims(b);
  BStarTree& dtree = fp.die(target).tree;
  const Packing& dp = dst_saved.packing;
  int host = BStarTree::kNil;
  Side side = Side::left;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(dtree.size()); ++i) {
    const Rect& r = dp.rects[static_cast<std::size_t>(i)];
    for (Side s : {Side::left, Side::right}) {
      if (dtree.child(i, s) != BStarTree::kNil) continue;
      const Point corner = s == Side::left ? Point{r.x + r.w, r.y} : Point{r.x, r.y + r.h};
      const Point c{origins[target].x + corner.x + 0.5 * dims.width,
                    origins[target].y + corner.y + 0.5 * dims.height};
      const double dist = detail::point_rect_distance(c, src_rect);
      if (dist < best) {
        best = dist;
        host = i;
        side = s;
      }
    }
  }
  const int n = dtree.add_node(b);
  dtree.attach(n, host, side);
  fp.repack(target);

  const ObjectiveBreakdown after = fp.evaluate(cfg.layout);
  std::string reason;
  if (!after.feasible && !(!before.feasible && after.violation() < before.violation())) {
    reason = after.area_violation > before.area_violation ? "die area window" : "inter-die net limit";
  } else if (!cfg.refine.accept_any && solution_key(after, cfg.layout) > key_before) {
    reason = "objective would worsen";
  }
  if (!reason.empty()) {
    fp.restore_die(src, src_saved);
    fp.restore_die(target, dst_saved);
    fp.set_die(b, src);
    fp.set_tech(b, tech_saved);
    return {false, reason};
  }
  return {true, {}};
}

/// Random refinement: a uniformly chosen movable block and a uniformly chosen
/// other die. Returns the block and die tried, if any.
struct RefineAttempt {
  RefineResult result;
  std::size_t block = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

namespace detail {

inline bool may_move(const Design& design, std::size_t b, std::size_t target) {
  const Block& blk = design.blocks[b];
  const std::size_t tech = design.dies[target].tech;
  return blk.locked() ? blk.hard_ip->tech == tech : blk.has_tech(tech);
}

/// Moves that can shrink the current violation: pins of nets crossing an
/// over-limit die pair toward the other die, blocks leaving an over-full die,
/// blocks entering an under-full one.
inline std::vector<std::pair<std::size_t, std::size_t>> repair_candidates(const Floorplan& fp,
                                                                          const ObjectiveBreakdown& now,
                                                                          const ObjectiveWeights& w) {
  const Design& design = fp.design();
  const std::size_t m = fp.die_count();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto add = [&](std::size_t b, std::size_t t) {
    if (fp.die_of(b) != t && may_move(design, b, t)) out.emplace_back(b, t);
  };
  bool over_limit = false;
  for (const auto& entry : now.inter_die_net_counts) over_limit = over_limit || entry.second > w.n_max;
  if (over_limit) {
    std::vector<std::vector<std::size_t>> nets_of(fp.block_count());
    for (std::size_t e = 0; e < design.nets.size(); ++e) {
      for (std::size_t p : design.nets[e].pins) nets_of[p].push_back(e);
    }
    // Pins of nets crossing an over-limit pair, kept only if the move
    // uncuts more of that pair's nets than it cuts.
    for (const auto& [pair, count] : now.inter_die_net_counts) {
      if (count <= w.n_max) continue;
      for (std::size_t b = 0; b < fp.block_count(); ++b) {
        const std::size_t src = fp.die_of(b);
        if (src != pair.first && src != pair.second) continue;
        const std::size_t dst = src == pair.first ? pair.second : pair.first;
        int gain = 0;
        for (std::size_t e : nets_of[b]) {
          bool others_on_src = false, on_dst = false;
          for (std::size_t p : design.nets[e].pins) {
            if (p == b) continue;
            others_on_src = others_on_src || fp.die_of(p) == src;
            on_dst = on_dst || fp.die_of(p) == dst;
          }
          gain += (on_dst ? 1 : 0) - (others_on_src ? 1 : 0);
        }
        if (gain > 0) add(b, dst);
      }
    }
  }
  const double lo = w.a_min_factor * fp.z(), hi = w.a_max_factor * fp.z();
  for (std::size_t b = 0; b < fp.block_count(); ++b) {
    const std::size_t src = fp.die_of(b);
    for (std::size_t t = 0; t < m; ++t) {
      if (t == src) continue;
      if ((now.die_areas[src] > hi && now.die_areas[t] < hi) || (now.die_areas[t] < lo && now.die_areas[src] > lo)) {
        add(b, t);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// While the floorplan violates a constraint the block and target are drawn
/// from the repair candidates instead.
inline std::optional<RefineAttempt> refine_step(Floorplan& fp, const MmfpConfig& cfg, Rng& rng) {
  const Design& design = fp.design();
  const std::size_t m = fp.die_count();
  if (m < 2) return std::nullopt;
  const ObjectiveBreakdown now = fp.evaluate(cfg.layout);
  if (!now.feasible) {
    const auto repairs = detail::repair_candidates(fp, now, cfg.weights);
    if (!repairs.empty()) {
      RefineAttempt a;
      std::tie(a.block, a.to) = repairs[rng.uniform_index(repairs.size())];
      a.from = fp.die_of(a.block);
      a.result = refine_move(fp, a.block, a.to, cfg);
      return a;
    }
  }
  std::vector<std::size_t> movable;
  for (std::size_t b = 0; b < fp.block_count(); ++b) {
    const Block& blk = design.blocks[b];
    if (!blk.locked()) {
      movable.push_back(b);
      continue;
    }
    for (std::size_t d = 0; d < m; ++d) {
      if (d != fp.die_of(b) && design.dies[d].tech == blk.hard_ip->tech) {
        movable.push_back(b);
        break;
      }
    }
  }
  if (movable.empty()) return std::nullopt;
  RefineAttempt a;
  a.block = movable[rng.uniform_index(movable.size())];
  a.from = fp.die_of(a.block);
  std::vector<std::size_t> targets;
  for (std::size_t d = 0; d < m; ++d) {
    if (d == a.from) continue;
    if (design.blocks[a.block].locked() && design.dies[d].tech != design.blocks[a.block].hard_ip->tech) continue;
    targets.push_back(d);
  }
  a.to = targets[rng.uniform_index(targets.size())];
  a.result = refine_move(fp, a.block, a.to, cfg);
  return a;
}

namespace detail {

// Round-robin driver shared by all methods.
inline MmfpSolution optimize(Method method, const DiePlan& plan, Floorplan fp, const MmfpConfig& cfg,
                             Rng& rng, std::optional<PpoAgent> agent, const FloorplanObserver& observer) {
  const std::size_t m = fp.die_count();
  const bool refine = method != Method::baseline && m >= 2;
  const double penalty = cfg.layout.area_penalty;

  std::vector<SaOptimizer> sa;
  std::vector<RlOptimizer> rl;
  if (method == Method::rl) {
    if (!agent) agent = PpoAgent::make(cfg.ppo.feature_size(), cfg.ppo, rng);
    for (std::size_t d = 0; d < m; ++d) rl.emplace_back(DieEnv(fp, d, penalty), *agent, cfg.ppo);
  } else {
    SaConfig sc = cfg.sa;
    if (method == Method::baseline) {
      sc.moves = {true, false, true, false};  // fixed shapes: swap and remove/insert only
    }
    for (std::size_t d = 0; d < m; ++d) sa.emplace_back(DieEnv(fp, d, penalty), sc);
  }

  // A die leaves the rotation once its own best stalls inside the area
  // window; a refinement touching it brings it back.
  std::vector<ConvergenceMonitor> die_monitor;
  std::vector<std::size_t> active;
  auto activate = [&](std::size_t d) {
    die_monitor[d] = ConvergenceMonitor(cfg.die_window, cfg.stop_epsilon);
    if (fp.die(d).tree.size() > 0 && std::find(active.begin(), active.end(), d) == active.end()) {
      active.push_back(d);
      std::sort(active.begin(), active.end());
    }
  };
  die_monitor.assign(m, ConvergenceMonitor(cfg.die_window, cfg.stop_epsilon));
  for (std::size_t d = 0; d < m; ++d) activate(d);

  MmfpSolution sol(method, plan, fp, cfg.layout);
  // Ranking uses the key; convergence watches the continuous penalized
  // objective of the incumbent, which the infeasibility jump would swamp.
  // An infeasible incumbent never counts as converged.
  auto penalized = [&](const ObjectiveBreakdown& bd) { return bd.f + penalty * bd.violation(); };
  ObjectiveBreakdown bd = fp.evaluate(cfg.layout);
  double best_key = solution_key(bd, cfg.layout);
  double best_penalized = penalized(bd);
  bool best_feasible = bd.feasible;
  Floorplan best = fp;
  ConvergenceMonitor monitor(cfg.window, cfg.stop_epsilon);
  monitor.push(best_penalized);
  sol.log.push_back({0, best_key});

  const auto budget = static_cast<std::size_t>(cfg.max_total_steps) * (cfg.budget_per_die ? m : 1);
  std::size_t step = 0, moves = 0, turn = 0;
  auto record = [&]() {
    const ObjectiveBreakdown now = fp.evaluate(cfg.layout);
    const double key = solution_key(now, cfg.layout);
    if (key < best_key) {
      best_key = key;
      best_penalized = penalized(now);
      best_feasible = now.feasible;
      best = fp;
    }
    monitor.push(best_penalized);
    sol.log.push_back({step, best_key});
    if (observer) observer(fp, step);
  };

  auto refine_once = [&]() {
    const auto attempt = refine_step(fp, cfg, rng);
    ++step;
    if (attempt) {
      ++sol.refinements_tried;
      if (attempt->result.applied) {
        ++sol.refinements_applied;
        for (std::size_t x : {attempt->from, attempt->to}) {
          if (method == Method::rl) {
            rl[x].resync(rng);
          } else {
            sa[x].resync();
          }
          activate(x);
        }
        // Dies emptied by the move drop out.
        std::erase_if(active, [&](std::size_t e) { return fp.die(e).tree.size() == 0; });
      }
    }
    record();
  };

  while (step < budget) {
    if (active.empty()) {
      // Every die has settled; an infeasible incumbent keeps the remaining
      // budget for repairs, which wake the dies they touch.
      if (!refine || best_feasible) break;
      refine_once();
      continue;
    }
    turn %= active.size();
    const std::size_t d = active[turn];
    const DieEnv::Snapshot* die_best = nullptr;
    if (method == Method::rl) {
      rl[d].step(rng);
      die_best = &rl[d].best();
    } else {
      sa[d].step(rng);
      die_best = &sa[d].best();
    }
    die_monitor[d].push(die_best->score);
    const bool stalled = die_monitor[d].converged();
    if (stalled) {
      if (method == Method::rl) {
        rl[d].restore_best();
      } else {
        sa[d].restore_best();
      }
    }
    if (stalled && die_best->violation == 0.0) {
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(turn));
    } else {
      if (stalled) {
        die_monitor[d] = ConvergenceMonitor(cfg.die_window, cfg.stop_epsilon);
        if (cfg.restart_stalled) {
          fp.set_tree(d, random_tree(fp.die(d).tree.blocks(), rng));
          if (method == Method::rl) {
            rl[d].resync(rng);
          } else {
            sa[d].resync();
          }
        }
      }
      ++turn;
    }
    ++step;
    ++moves;
    record();
    if (best_feasible && monitor.converged()) break;
    if (refine && moves % static_cast<std::size_t>(cfg.refine.k_interval) == 0 && step < budget) {
      refine_once();
      if (best_feasible && monitor.converged()) break;
    }
  }
  if (method == Method::rl) {
    for (auto& r : rl) r.flush(rng);
    sol.agent = std::move(agent);
  }

  sol.floorplan = std::move(best);
  sol.steps = step;
  sol.die_origins = sol.floorplan.die_origins(cfg.layout);
  sol.breakdown = sol.floorplan.evaluate(cfg.layout);
  return sol;
}

}  // namespace detail

/// Phase I assignment followed by interleaved intra-die optimization and
/// inter-die refinement. `agent`, if given, seeds the RL policy.
inline MmfpSolution run_mmfp(const Design& design, Method method, const MmfpConfig& cfg, Rng& rng,
                             std::optional<PpoAgent> agent = std::nullopt,
                             const FloorplanObserver& observer = {}) {
  if (method == Method::baseline) throw ConfigError("run_mmfp: use run_baseline for the baseline");
  cfg.validate();
  const DiePlan plan = initial_assignment(design, cfg.weights);
  Floorplan fp(design, cfg.weights, plan);
  fp.randomize_trees(plan.die_blocks, rng);
  return detail::optimize(method, plan, std::move(fp), cfg, rng, std::move(agent), observer);
}

/// Min-cut partition, random part-to-die assignment, fixed ratios, then SA
/// per die with no refinement.
inline MmfpSolution run_baseline(const Design& design, const MmfpConfig& cfg, Rng& rng,
                                 const FloorplanObserver& observer = {}) {
  cfg.validate();
  const std::size_t m = design.dies.size();
  const std::size_t n = design.blocks.size();
  DiePlan plan;
  plan.z = estimate_z(design);

  std::vector<std::size_t> die_of_part(m);
  for (std::size_t p = 0; p < m; ++p) die_of_part[p] = p;
  rng.shuffle(die_of_part);

  // Blocks restricted to some technologies are pinned to a part whose die
  // provides one, in part order.
  std::vector<std::optional<std::size_t>> fixed(n);
  for (std::size_t b = 0; b < n; ++b) {
    const Block& blk = design.blocks[b];
    bool all = !blk.locked();
    for (std::size_t p = 0; p < m && all; ++p) all = blk.has_tech(design.dies[die_of_part[p]].tech);
    if (all) continue;
    for (std::size_t p = 0; p < m && !fixed[b]; ++p) {
      const std::size_t t = design.dies[die_of_part[p]].tech;
      if (blk.locked() ? blk.hard_ip->tech == t : blk.has_tech(t)) fixed[b] = p;
    }
    if (!fixed[b]) {
      throw InfeasibleInput("block '" + blk.id + "' has no technology provided by any die");
    }
  }
  const std::vector<std::size_t> part_of = partition_blocks(design, m, fixed, cfg.partition, rng);

  plan.die_blocks.assign(m, {});
  plan.die_of.assign(n, 0);
  plan.tech_of.assign(n, 0);
  plan.ratio_of.assign(n, 1.0);
  plan.fill.assign(m, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    const Block& blk = design.blocks[b];
    const std::size_t d = die_of_part[part_of[b]];
    plan.die_blocks[d].push_back(b);
    plan.die_of[b] = d;
    plan.tech_of[b] = design.dies[d].tech;
    plan.ratio_of[b] = blk.locked() ? blk.hard_ip->ratio : ratio_closest_to_one(blk);
    plan.fill[d] += oldest_area(design, blk) / design.technologies[design.dies[d].tech].scale_to_oldest;
  }
  Floorplan fp(design, cfg.weights, plan);
  fp.randomize_trees(plan.die_blocks, rng);
  return detail::optimize(Method::baseline, plan, std::move(fp), cfg, rng, std::nullopt, observer);
}

inline MmfpSolution run_method(const Design& design, Method method, const MmfpConfig& cfg, Rng& rng,
                               std::optional<PpoAgent> agent = std::nullopt,
                               const FloorplanObserver& observer = {}) {
  if (method == Method::baseline) return run_baseline(design, cfg, rng, observer);
  return run_mmfp(design, method, cfg, rng, std::move(agent), observer);
}

}  // namespace hfp
