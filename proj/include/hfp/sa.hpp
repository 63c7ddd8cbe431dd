#pragma once

// Simulated-annealing intra-die floorplanning with Metropolis acceptance.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "hfp/bstar_tree.hpp"
#include "hfp/error.hpp"
#include "hfp/floorplan.hpp"
#include "hfp/random.hpp"

namespace hfp {

struct SaConfig {
  double t_initial = 400.0;
  double cooling = 0.85;
  double stop_epsilon = 1e-4;
  int moves_per_temperature = 30;
  int max_total_steps = 2500;
  int window = 500;        // steps over which convergence is measured
  int max_resample = 16;   // kind resamples after a no-op perturbation
  std::array<bool, kMoveKinds> moves{true, true, true, true};

  void validate() const {
    if (!(cooling > 0.0 && cooling < 1.0)) throw ConfigError("SA cooling must be in (0,1)");
    if (!(stop_epsilon > 0.0)) throw ConfigError("SA stop_epsilon must be positive");
    if (t_initial < 0.0) throw ConfigError("SA initial temperature must be >= 0");
    if (moves_per_temperature < 1 || max_total_steps < 1 || window < 1) {
      throw ConfigError("SA step counts must be positive");
    }
  }
};

/// Metropolis rule. At zero temperature only strict improvements pass.
inline double acceptance_probability(double delta, double temperature) {
  if (temperature <= 0.0) return delta < 0.0 ? 1.0 : 0.0;
  if (delta <= 0.0) return 1.0;
  return std::exp(-delta / temperature);
}

/// Tracks the best-so-far sequence and reports when it stalls: the relative
/// change over the last `window` entries falls below epsilon.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(int window, double epsilon) : window_(window), epsilon_(epsilon) {}

  void push(double best) { history_.push_back(best); }

  bool converged() const {
    const auto w = static_cast<std::size_t>(window_);
    if (history_.size() <= w) return false;
    const double now = history_.back();
    const double then = history_[history_.size() - 1 - w];
    const double scale = std::max(std::abs(now), 1e-12);
    return std::abs(then - now) / scale < epsilon_;
  }

  const std::vector<double>& history() const { return history_; }

 private:
  int window_;
  double epsilon_;
  std::vector<double> history_;
};

struct SaStepResult {
  bool accepted = false;
  bool perturbed = false;  // false: every sampled kind was a no-op
  double delta = 0.0;
  MoveKind kind = MoveKind::swap;
};

/// One annealing step on `env`: sample an enabled move kind uniformly (resampling
/// on no-ops), evaluate, and accept or revert.
inline SaStepResult sa_step(DieEnv& env, double temperature, const SaConfig& cfg, Rng& rng) {
  std::vector<MoveKind> kinds;
  for (MoveKind k : kAllMoves) {
    if (cfg.moves[static_cast<std::size_t>(k)]) kinds.push_back(k);
  }
  SaStepResult out;
  if (kinds.empty()) return out;
  const double before = env.score();
  for (int attempt = 0; attempt <= cfg.max_resample; ++attempt) {
    out.kind = kinds[rng.uniform_index(kinds.size())];
    if (env.apply(out.kind, rng).applied) {
      out.perturbed = true;
      break;
    }
  }
  if (!out.perturbed) return out;
  out.delta = env.score() - before;
  const double p = acceptance_probability(out.delta, temperature);
  out.accepted = p >= 1.0 || rng.uniform() < p;
  if (!out.accepted) env.undo();
  return out;
}

/// Stateful annealer for one die; the orchestrator interleaves several.
class SaOptimizer {
 public:
  SaOptimizer(DieEnv env, const SaConfig& cfg)
      : env_(std::move(env)), cfg_(cfg), temperature_(cfg.t_initial), best_(env_.snapshot()) {}

  DieEnv& env() { return env_; }
  double temperature() const { return temperature_; }
  double best_score() const { return best_.score; }
  const DieEnv::Snapshot& best() const { return best_; }
  std::size_t steps() const { return steps_; }

  SaStepResult step(Rng& rng) {
    SaStepResult r = sa_step(env_, temperature_, cfg_, rng);
    ++steps_;
    if (steps_ % static_cast<std::size_t>(cfg_.moves_per_temperature) == 0) temperature_ *= cfg_.cooling;
    if (env_.score() < best_.score) best_ = env_.snapshot();
    return r;
  }

  /// Put the die back in its best state seen so far.
  void restore_best() { env_.restore(best_); }

  /// The die was changed from outside (inter-die refinement).
  void resync() {
    env_.resync();
    best_ = env_.snapshot();
  }

 private:
  DieEnv env_;
  SaConfig cfg_;
  double temperature_;
  DieEnv::Snapshot best_;
  std::size_t steps_ = 0;
};

struct SaRunResult {
  double initial_score = 0.0;
  double best_score = 0.0;
  std::size_t steps = 0;
  std::vector<double> best_history;  // best score before the first step and after each step
};

using StepHook = std::function<void(std::size_t step)>;

/// Anneal one die until convergence or the step budget; leaves the best-seen
/// state in the floorplan.
inline SaRunResult sa_run(DieEnv env, const SaConfig& cfg, Rng& rng, const StepHook& hook = {}) {
  cfg.validate();
  SaOptimizer opt(std::move(env), cfg);
  ConvergenceMonitor monitor(cfg.window, cfg.stop_epsilon);
  SaRunResult out;
  out.initial_score = opt.best_score();
  monitor.push(opt.best_score());
  while (opt.steps() < static_cast<std::size_t>(cfg.max_total_steps)) {
    opt.step(rng);
    monitor.push(opt.best_score());
    if (hook) hook(opt.steps());
    if (monitor.converged()) break;
  }
  opt.env().restore(opt.best());
  out.best_score = opt.best_score();
  out.steps = opt.steps();
  out.best_history = monitor.history();
  return out;
}

}  // namespace hfp
