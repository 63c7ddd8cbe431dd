#pragma once

// Proximal policy optimization over B*-tree perturbation kinds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hfp/bstar_tree.hpp"
#include "hfp/dense_net.hpp"
#include "hfp/error.hpp"
#include "hfp/floorplan.hpp"
#include "hfp/random.hpp"
#include "hfp/sa.hpp"

namespace hfp {

struct PpoConfig {
  double clip = 0.2;       // lambda
  double discount = 0.95;  // eta
  int feature_height = 6;  // h
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double momentum = 0.0;
  int epochs = 4;
  int minibatch = 32;
  int steps_per_trajectory = 64;  // actions gathered per update
  int episode_length = 1;         // actions before returning to the die's best state
  double stop_epsilon = 1e-4;
  int window = 500;
  int max_total_steps = 2500;
  double entropy_coef = 0.0;
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  double policy_head_scale = 0.01;
  std::vector<std::size_t> policy_hidden{64, 64};
  std::vector<std::size_t> value_hidden{64, 64, 64};

  void validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("PPO clip must be in (0,1)");
    if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("PPO discount must be in (0,1]");
    if (feature_height < 1) throw ConfigError("feature height must be positive");
    if (policy_lr < 0.0 || value_lr < 0.0) throw ConfigError("learning rates must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
    if (epochs < 1 || minibatch < 1 || steps_per_trajectory < 1 || episode_length < 1 || window < 1 || max_total_steps < 1) {
      throw ConfigError("PPO step counts must be positive");
    }
    if (!(stop_epsilon > 0.0)) throw ConfigError("PPO stop_epsilon must be positive");
  }

  std::size_t feature_size() const { return kNodeFeatures * static_cast<std::size_t>(feature_height); }
};

struct TrajectoryStep {
  std::vector<double> state;
  std::size_t action = 0;
  double log_prob = 0.0;  // under the behavior policy
  double reward = 0.0;
  double value = 0.0;     // V(s_t) at collection time
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Discounted returns computed backward with a zero terminal value, and
/// advantages = returns - values.
inline std::pair<std::vector<double>, std::vector<double>> advantages(
    std::span<const double> rewards, std::span<const double> values, double eta) {
  if (rewards.size() != values.size()) throw ConfigError("advantages: length mismatch");
  std::vector<double> adv(rewards.size()), ret(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + eta * acc;
    ret[t] = acc;
    adv[t] = acc - values[t];
  }
  return {adv, ret};
}

inline void compute_advantages(Trajectory& traj, double eta) {
  std::vector<double> r, v;
  for (const auto& s : traj.steps) {
    if (!std::isfinite(s.reward)) throw NumericError("non-finite reward in trajectory");
    r.push_back(s.reward);
    v.push_back(s.value);
  }
  auto [adv, ret] = advantages(r, v, eta);
  traj.advantages = std::move(adv);
  traj.returns = std::move(ret);
}

inline double clip_surrogate(double p, double adv, double lambda) {
  const double clipped = std::clamp(p, 1.0 - lambda, 1.0 + lambda);
  return std::min(p * adv, clipped * adv);
}

/// d clip_surrogate / dp; the unclipped branch wins ties.
inline double clip_surrogate_grad(double p, double adv, double lambda) {
  if (adv >= 0.0) return p <= 1.0 + lambda ? adv : 0.0;
  return p >= 1.0 - lambda ? adv : 0.0;
}

/// One training sample flattened out of a trajectory.
struct PpoSample {
  std::vector<double> state;
  std::size_t action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double target = 0.0;  // discounted return
};

/// Mean over `samples` of the clip surrogate plus the entropy bonus.
inline double surrogate_objective(const DenseNet& policy, std::span<const PpoSample> samples,
                                  double lambda, double entropy_coef = 0.0) {
  double total = 0.0;
  for (const PpoSample& s : samples) {
    const std::vector<double> probs = policy.forward(s.state);
    const double p = std::exp(std::log(probs[s.action]) - s.old_log_prob);
    total += clip_surrogate(p, s.advantage, lambda);
    if (entropy_coef != 0.0) {
      double h = 0.0;
      for (double q : probs) if (q > 0.0) h -= q * std::log(q);
      total += entropy_coef * h;
    }
  }
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

inline NetGradient surrogate_gradient(const DenseNet& policy, std::span<const PpoSample> samples,
                                      double lambda, double entropy_coef = 0.0,
                                      std::size_t* clipped = nullptr) {
  NetGradient g = policy.zero_gradient();
  if (samples.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  DenseNet::Tape tape;
  std::vector<double> grad_out(policy.output_size());
  for (const PpoSample& s : samples) {
    const std::vector<double>& probs = policy.forward(s.state, tape);
    const double pa = probs[s.action];
    const double p = std::exp(std::log(pa) - s.old_log_prob);
    if (clipped && std::abs(p - 1.0) > lambda) ++*clipped;
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    // dp/dpi_a = p / pi_a
    grad_out[s.action] = inv_n * clip_surrogate_grad(p, s.advantage, lambda) * p / pa;
    if (entropy_coef != 0.0) {
      for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) grad_out[k] -= inv_n * entropy_coef * (std::log(probs[k]) + 1.0);
      }
    }
    policy.backward(tape, grad_out, g);
  }
  return g;
}

/// Mean squared error between V(s) and the discounted-return targets.
inline double value_loss(const DenseNet& value, std::span<const PpoSample> samples) {
  double total = 0.0;
  for (const PpoSample& s : samples) {
    const double e = value.forward(s.state)[0] - s.target;
    total += e * e;
  }
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

inline NetGradient value_loss_gradient(const DenseNet& value, std::span<const PpoSample> samples) {
  NetGradient g = value.zero_gradient();
  if (samples.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  DenseNet::Tape tape;
  for (const PpoSample& s : samples) {
    const double v = value.forward(s.state, tape)[0];
    const double d = 2.0 * (v - s.target) * inv_n;
    value.backward(tape, std::span<const double>(&d, 1), g);
  }
  return g;
}

struct PpoAgent {
  DenseNet policy;
  DenseNet value;
  NetGradient policy_velocity;
  NetGradient value_velocity;

  static PpoAgent make(std::size_t feature_size, const PpoConfig& cfg, Rng& rng) {
    PpoAgent a;
    std::vector<std::size_t> ps{feature_size};
    ps.insert(ps.end(), cfg.policy_hidden.begin(), cfg.policy_hidden.end());
    ps.push_back(kMoveKinds);
    a.policy = DenseNet::glorot(ps, Activation::relu, Activation::softmax, rng);
    for (double& w : a.policy.layers().back().weights) w *= cfg.policy_head_scale;
    std::vector<std::size_t> vs{feature_size};
    vs.insert(vs.end(), cfg.value_hidden.begin(), cfg.value_hidden.end());
    vs.push_back(1);
    a.value = DenseNet::glorot(vs, Activation::relu, Activation::identity, rng);
    a.reset_velocity();
    return a;
  }

  void reset_velocity() {
    policy_velocity = policy.zero_gradient();
    value_velocity = value.zero_gradient();
  }

  void check_dimensions(std::size_t feature_size) const {
    if (policy.input_size() != feature_size || value.input_size() != feature_size) {
      throw ConfigError("agent expects " + std::to_string(policy.input_size()) +
                        " features, environment provides " + std::to_string(feature_size));
    }
    if (policy.output_size() != kMoveKinds || value.output_size() != 1) {
      throw ConfigError("agent output dimensions do not match the action space");
    }
  }
};

struct PpoStats {
  double mean_surrogate = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  std::size_t samples = 0;
  std::size_t minibatches = 0;
};

namespace detail {

inline void clip_norm(NetGradient& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(g.squared_norm());
  if (norm > max_norm) g.scale(max_norm / norm);
}

// v = mu*v + g; params += sign*lr*v
inline void momentum_step(DenseNet& net, NetGradient& velocity, const NetGradient& g, double mu,
                          double lr, double sign) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (std::size_t i = 0; i < g.weights[l].size(); ++i) {
      velocity.weights[l][i] = mu * velocity.weights[l][i] + g.weights[l][i];
    }
    for (std::size_t i = 0; i < g.bias[l].size(); ++i) {
      velocity.bias[l][i] = mu * velocity.bias[l][i] + g.bias[l][i];
    }
  }
  net.add_scaled(velocity, sign * lr);
}

}  // namespace detail

inline std::vector<PpoSample> flatten_batch(std::span<const Trajectory> batch, bool normalize) {
  std::vector<PpoSample> samples;
  for (const Trajectory& t : batch) {
    if (t.advantages.size() != t.steps.size() || t.returns.size() != t.steps.size()) {
      throw StateError("ppo_update: advantages not computed");
    }
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      samples.push_back({t.steps[i].state, t.steps[i].action, t.steps[i].log_prob, t.advantages[i],
                         t.returns[i]});
    }
  }
  if (normalize && samples.size() > 1) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(samples.size()));
    if (sd > 1e-12) {
      for (auto& s : samples) s.advantage = (s.advantage - mean) / sd;
    } else {
      for (auto& s : samples) s.advantage = 0.0;
    }
  }
  return samples;
}

/// Epochs of shuffled minibatch ascent on the clip surrogate and descent on
/// the value loss. On a non-finite gradient the agent is restored and
/// NumericError is thrown.
inline PpoStats ppo_update(PpoAgent& agent, std::span<const Trajectory> batch, const PpoConfig& cfg,
                           Rng& rng) {
  const std::vector<PpoSample> samples = flatten_batch(batch, cfg.normalize_advantages);
  if (samples.empty()) throw StateError("ppo_update: empty batch");
  const PpoAgent saved = agent;
  PpoStats stats;
  stats.samples = samples.size();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<PpoSample> mb;
  std::size_t clipped = 0, seen = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      mb.clear();
      for (std::size_t k = start; k < stop; ++k) mb.push_back(samples[order[k]]);
      const double surr = surrogate_objective(agent.policy, mb, cfg.clip, cfg.entropy_coef);
      const double vloss = value_loss(agent.value, mb);
      NetGradient gp = surrogate_gradient(agent.policy, mb, cfg.clip, cfg.entropy_coef, &clipped);
      NetGradient gv = value_loss_gradient(agent.value, mb);
      if (!std::isfinite(surr) || !std::isfinite(vloss) || !gp.finite() || !gv.finite()) {
        agent = saved;
        throw NumericError("ppo_update: non-finite " +
                           std::string(gp.finite() && std::isfinite(surr) ? "value" : "policy") +
                           " gradient in epoch " + std::to_string(epoch) + ", minibatch at sample " +
                           std::to_string(start) + " (surrogate " + std::to_string(surr) +
                           ", value loss " + std::to_string(vloss) + ")");
      }
      detail::clip_norm(gp, cfg.max_grad_norm);
      detail::clip_norm(gv, cfg.max_grad_norm);
      detail::momentum_step(agent.policy, agent.policy_velocity, gp, cfg.momentum, cfg.policy_lr, +1.0);
      detail::momentum_step(agent.value, agent.value_velocity, gv, cfg.momentum, cfg.value_lr, -1.0);
      stats.mean_surrogate += surr * static_cast<double>(mb.size());
      stats.value_loss += vloss * static_cast<double>(mb.size());
      seen += mb.size();
      ++stats.minibatches;
    }
  }
  stats.mean_surrogate /= static_cast<double>(seen);
  stats.value_loss /= static_cast<double>(seen);
  stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(seen);
  return stats;
}

/// sign(x) * log(1 + |x|), applied to features before the networks.
inline std::vector<double> squash_features(std::vector<double> x) {
  for (double& v : x) v = std::copysign(std::log1p(std::abs(v)), v);
  return x;
}

/// Scores are snapped to a 2^-20 grid before differencing so the rewards of
/// an episode sum exactly to its start score minus its end score.
inline double reward_grid(double score) { return std::nearbyint(score * 0x1.0p20) * 0x1.0p-20; }

struct EpisodeSummary {
  double start_score = 0.0;  // on the reward grid
  double end_score = 0.0;
  double reward_sum = 0.0;
  std::size_t steps = 0;
  PpoStats stats;
};

struct RlStepResult {
  bool applied = false;
  MoveKind kind = MoveKind::swap;
  double reward = 0.0;
};

/// Acting and learning loop for one die. Several optimizers may share one
/// agent; each keeps its own trajectory.
class RlOptimizer {
 public:
  RlOptimizer(DieEnv env, PpoAgent& agent, const PpoConfig& cfg)
      : env_(std::move(env)), agent_(&agent), cfg_(cfg), best_(env_.snapshot()) {
    cfg_.validate();
    agent.check_dimensions(cfg_.feature_size());
    begin_episode();
  }

  DieEnv& env() { return env_; }
  double best_score() const { return best_.score; }
  const DieEnv::Snapshot& best() const { return best_; }
  std::size_t steps() const { return steps_; }
  const std::vector<EpisodeSummary>& episodes() const { return episodes_; }

  RlStepResult step(Rng& rng) {
    RlStepResult out;
    TrajectoryStep ts;
    ts.state = squash_features(env_.features(cfg_.feature_height));
    const std::vector<double> probs = agent_->policy.forward(ts.state);
    const double u = rng.uniform();
    double cum = 0.0;
    ts.action = probs.size() - 1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      cum += probs[k];
      if (u < cum) {
        ts.action = k;
        break;
      }
    }
    ts.log_prob = std::log(probs[ts.action]);
    ts.value = agent_->value.forward(ts.state)[0];
    out.kind = kAllMoves[ts.action];
    out.applied = env_.apply(out.kind, rng).applied;
    const double now = reward_grid(env_.score());
    ts.reward = last_ - now;
    last_ = now;
    out.reward = ts.reward;
    traj_.steps.push_back(std::move(ts));
    ++steps_;
    if (env_.score() < best_.score) best_ = env_.snapshot();
    if (traj_.steps.size() >= static_cast<std::size_t>(cfg_.episode_length)) {
      end_episode();
      env_.restore(best_);
      begin_episode();
    }
    if (pending_ >= static_cast<std::size_t>(cfg_.steps_per_trajectory)) train(rng);
    return out;
  }

  /// The die was changed from outside: close the running episode on the
  /// state before the change and continue from the new state.
  void resync(Rng& rng) {
    end_episode();
    train(rng);
    env_.resync();
    best_ = env_.snapshot();
    begin_episode();
  }

  /// Put the die back in its best state seen so far.
  void restore_best() {
    end_episode();
    env_.restore(best_);
    begin_episode();
  }

  /// Train on whatever has been gathered, including a partial episode.
  void flush(Rng& rng) {
    end_episode();
    train(rng);
    begin_episode();
  }

 private:
  void begin_episode() {
    traj_ = {};
    start_ = last_ = reward_grid(env_.score());
  }

  void end_episode() {
    if (traj_.steps.empty()) return;
    compute_advantages(traj_, cfg_.discount);
    EpisodeSummary e;
    e.start_score = start_;
    e.end_score = last_;
    e.steps = traj_.steps.size();
    for (const auto& s : traj_.steps) e.reward_sum += s.reward;
    episodes_.push_back(e);
    pending_ += traj_.steps.size();
    batch_.push_back(std::move(traj_));
    traj_ = {};
  }

  void train(Rng& rng) {
    if (batch_.empty()) return;
    episodes_.back().stats = ppo_update(*agent_, batch_, cfg_, rng);
    batch_.clear();
    pending_ = 0;
  }

  DieEnv env_;
  PpoAgent* agent_;
  PpoConfig cfg_;
  DieEnv::Snapshot best_;
  Trajectory traj_;
  std::vector<Trajectory> batch_;  // finished episodes awaiting an update
  std::size_t pending_ = 0;        // steps in batch_
  double start_ = 0.0;
  double last_ = 0.0;
  std::size_t steps_ = 0;
  std::vector<EpisodeSummary> episodes_;
};

struct RlRunResult {
  double initial_score = 0.0;
  double best_score = 0.0;
  std::size_t steps = 0;
  std::vector<double> best_history;
  std::vector<EpisodeSummary> episodes;
};

/// Train-and-act on one die until convergence or budget; leaves the best-seen
/// state in the floorplan and the trained parameters in `agent`.
inline RlRunResult rl_run(DieEnv env, PpoAgent& agent, const PpoConfig& cfg, Rng& rng,
                          const StepHook& hook = {}) {
  cfg.validate();
  RlOptimizer opt(std::move(env), agent, cfg);
  ConvergenceMonitor monitor(cfg.window, cfg.stop_epsilon);
  RlRunResult out;
  out.initial_score = opt.best_score();
  monitor.push(opt.best_score());
  while (opt.steps() < static_cast<std::size_t>(cfg.max_total_steps)) {
    opt.step(rng);
    monitor.push(opt.best_score());
    if (hook) hook(opt.steps());
    if (monitor.converged()) break;
  }
  opt.flush(rng);
  opt.env().restore(opt.best());
  out.best_score = opt.best_score();
  out.steps = opt.steps();
  out.best_history = monitor.history();
  out.episodes = opt.episodes();
  return out;
}

}  // namespace hfp
