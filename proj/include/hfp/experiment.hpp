#pragma once

// Multi-seed method comparisons and parameter sweeps.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hfp/error.hpp"
#include "hfp/generator.hpp"
#include "hfp/io.hpp"
#include "hfp/model.hpp"
#include "hfp/orchestrator.hpp"
#include "hfp/random.hpp"

namespace hfp {

/// Worker count: HFP_THREADS if set, else the hardware concurrency.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HFP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

/// Run fn(i) for i in [0, n) on up to `threads` workers. The first exception
/// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline constexpr std::size_t kMetricCount = 6;
inline constexpr const char* kMetricNames[kMetricCount] = {"f", "hpwl", "power", "tns", "cost", "area"};

struct RunRecord {
  Method method = Method::sa;
  std::uint64_t seed = 0;
  double grid_value = 0.0;
  std::array<double, kMetricCount> metrics{};  // f, hpwl, power, tns, cost, total die area
  bool feasible = false;
  std::size_t steps = 0;
  std::size_t refinements_applied = 0;
  std::vector<IterationRecord> log;
};

inline RunRecord make_record(Method method, std::uint64_t seed, double grid, const MmfpSolution& sol) {
  RunRecord r;
  r.method = method;
  r.seed = seed;
  r.grid_value = grid;
  const ObjectiveBreakdown& bd = sol.breakdown;
  double area = 0.0;
  for (double a : bd.die_areas) area += a;
  r.metrics = {bd.f, bd.total_hpwl, bd.total_power, bd.total_tns, bd.total_cost, area};
  r.feasible = bd.feasible;
  r.steps = sol.steps;
  r.refinements_applied = sol.refinements_applied;
  r.log = sol.log;
  return r;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct NormalizedAverage {
  double value = std::numeric_limits<double>::quiet_NaN();  // NaN when no pair qualifies
  std::size_t pairs = 0;
};

/// Mean over paired runs of method/baseline, skipping pairs where either run
/// is infeasible or the baseline value is zero.
inline NormalizedAverage normalized_average(std::span<const double> method, std::span<const double> baseline,
                                            const std::vector<bool>& method_ok,
                                            const std::vector<bool>& baseline_ok) {
  NormalizedAverage out;
  double sum = 0.0;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (!method_ok[i] || !baseline_ok[i] || baseline[i] == 0.0) continue;
    sum += method[i] / baseline[i];
    ++out.pairs;
  }
  if (out.pairs) out.value = sum / static_cast<double>(out.pairs);
  return out;
}

struct MethodSummary {
  Method method = Method::sa;
  double grid_value = 0.0;
  std::size_t runs = 0;
  std::size_t feasible = 0;
  std::array<double, kMetricCount> median{};
  std::array<NormalizedAverage, kMetricCount> normalized{};  // vs baseline, feasible pairs
  std::array<double, kMetricCount> normalized_median{};     // median / baseline median
  bool has_baseline = false;
};

struct ExperimentReport {
  std::string kind;  // "compare" or "ablate"
  std::string axis;
  std::string design_hash;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods;
  std::vector<RunRecord> runs;
  std::vector<MethodSummary> summary;

  const MethodSummary* find(Method m, double grid_value = 0.0) const {
    for (const auto& s : summary) {
      if (s.method == m && s.grid_value == grid_value) return &s;
    }
    return nullptr;
  }
};

inline void summarize(ExperimentReport& rep) {
  rep.summary.clear();
  const std::vector<double> grid = rep.grid.empty() ? std::vector<double>{0.0} : rep.grid;
  for (double g : grid) {
    auto runs_of = [&](Method m) {
      std::vector<const RunRecord*> out;
      for (const auto& r : rep.runs) {
        if (r.method == m && r.grid_value == g) out.push_back(&r);
      }
      std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->seed < b->seed; });
      return out;
    };
    const auto base = runs_of(Method::baseline);
    for (Method m : rep.methods) {
      const auto mine = runs_of(m);
      MethodSummary s;
      s.method = m;
      s.grid_value = g;
      s.runs = mine.size();
      for (auto* r : mine) s.feasible += r->feasible;
      s.has_baseline = !base.empty() && base.size() == mine.size();
      for (std::size_t k = 0; k < kMetricCount; ++k) {
        std::vector<double> v, b;
        std::vector<bool> vok, bok;
        for (auto* r : mine) {
          v.push_back(r->metrics[k]);
          vok.push_back(r->feasible);
        }
        s.median[k] = median(v);
        if (!s.has_baseline) continue;
        for (auto* r : base) {
          b.push_back(r->metrics[k]);
          bok.push_back(r->feasible);
        }
        if (m == Method::baseline) {
          s.normalized[k] = {1.0, static_cast<std::size_t>(std::count(bok.begin(), bok.end(), true))};
        } else {
          s.normalized[k] = normalized_average(v, b, vok, bok);
        }
        const double bm = median(b);
        s.normalized_median[k] = m == Method::baseline ? 1.0 : (bm != 0.0 ? s.median[k] / bm : 0.0);
      }
      rep.summary.push_back(s);
    }
  }
}

/// Random stream of one (seed, method) cell. Grid points of an ablation share
/// it, so sweeps compare configurations on common random numbers.
inline std::uint64_t cell_seed(std::uint64_t seed, Method m) {
  return Rng::mix(seed, static_cast<std::uint64_t>(m));
}

/// Baseline / MMFP-SA / MMFP-RL (or the given subset) on every seed.
inline ExperimentReport compare_methods(const Design& design, const std::vector<std::uint64_t>& seeds,
                                        const MmfpConfig& cfg,
                                        std::vector<Method> methods = {Method::baseline, Method::sa, Method::rl},
                                        std::size_t threads = worker_count()) {
  if (seeds.empty()) throw ConfigError("compare_methods: at least one seed is required");
  ExperimentReport rep;
  rep.kind = "compare";
  rep.design_hash = design_hash(design);
  rep.seeds = seeds;
  rep.methods = methods;
  rep.runs.resize(methods.size() * seeds.size());
  parallel_for(rep.runs.size(), threads, [&](std::size_t i) {
    const Method m = methods[i / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    Rng rng(cell_seed(seed, m));
    rep.runs[i] = make_record(m, seed, 0.0, run_method(design, m, cfg, rng));
  });
  summarize(rep);
  return rep;
}

inline const std::vector<std::string>& ablation_axes() {
  static const std::vector<std::string> axes{"k_interval", "n_max", "beta_tau", "tau", "gamma_beta",
                                             "spacing_per_net", "hard_ip_count"};
  return axes;
}

/// Apply one grid value of `axis` to a configuration and design.
inline void apply_axis(const std::string& axis, double v, MmfpConfig& cfg, Design& design) {
  if (axis == "k_interval") {
    cfg.refine.k_interval = v >= static_cast<double>(kNoRefinement) ? kNoRefinement : static_cast<int>(v);
  } else if (axis == "n_max") {
    cfg.weights.n_max = static_cast<int>(v);
  } else if (axis == "beta_tau") {
    cfg.weights.beta = v;
  } else if (axis == "tau") {
    cfg.weights.tau = v;
  } else if (axis == "gamma_beta") {
    cfg.weights.gamma = v;
  } else if (axis == "spacing_per_net") {
    cfg.layout.spacing_per_net = v;
  } else if (axis == "hard_ip_count") {
    design = lock_hard_ips(std::move(design), static_cast<std::size_t>(v));
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
}

/// Sweep `axis` over `grid`, all else fixed. Hard-IP sweeps also run the
/// baseline so each point has a reference.
inline ExperimentReport ablate(const Design& design, const std::string& axis, const std::vector<double>& grid,
                               const std::vector<std::uint64_t>& seeds, const MmfpConfig& cfg,
                               std::vector<Method> methods = {Method::sa},
                               std::size_t threads = worker_count()) {
  if (grid.empty()) throw ConfigError("ablate: grid must not be empty");
  if (seeds.empty()) throw ConfigError("ablate: at least one seed is required");
  if (std::find(ablation_axes().begin(), ablation_axes().end(), axis) == ablation_axes().end()) {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
  if (axis == "hard_ip_count" && std::find(methods.begin(), methods.end(), Method::baseline) == methods.end()) {
    methods.insert(methods.begin(), Method::baseline);
  }
  ExperimentReport rep;
  rep.kind = "ablate";
  rep.axis = axis;
  rep.design_hash = design_hash(design);
  rep.grid = grid;
  rep.seeds = seeds;
  rep.methods = methods;

  std::vector<Design> designs;
  std::vector<MmfpConfig> configs;
  for (double v : grid) {
    Design d = design;
    MmfpConfig c = cfg;
    apply_axis(axis, v, c, d);
    c.validate();
    designs.push_back(std::move(d));
    configs.push_back(c);
  }
  const std::size_t per_grid = methods.size() * seeds.size();
  rep.runs.resize(grid.size() * per_grid);
  parallel_for(rep.runs.size(), threads, [&](std::size_t i) {
    const std::size_t g = i / per_grid;
    const Method m = methods[(i % per_grid) / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    Rng rng(cell_seed(seed, m));
    rep.runs[i] = make_record(m, seed, grid[g], run_method(designs[g], m, configs[g], rng));
  });
  summarize(rep);
  return rep;
}

// ---------------------------------------------------------------- output

namespace detail {

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline json report_to_json(const ExperimentReport& rep) {
  json runs = json::array();
  for (const auto& r : rep.runs) {
    json jr{{"method", to_string(r.method)}, {"seed", r.seed}, {"feasible", r.feasible}, {"steps", r.steps},
            {"refinements_applied", r.refinements_applied}};
    if (rep.kind == "ablate") jr["grid"] = r.grid_value;
    for (std::size_t k = 0; k < kMetricCount; ++k) jr[kMetricNames[k]] = r.metrics[k];
    runs.push_back(std::move(jr));
  }
  json summary = json::array();
  for (const auto& s : rep.summary) {
    json js{{"method", to_string(s.method)}, {"runs", s.runs}, {"feasible", s.feasible}};
    if (rep.kind == "ablate") js["grid"] = s.grid_value;
    json med, norm, normmed;
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      med[kMetricNames[k]] = detail::finite_or_null(s.median[k]);
      if (s.has_baseline) {
        norm[kMetricNames[k]] = detail::finite_or_null(s.normalized[k].value);
        normmed[kMetricNames[k]] = detail::finite_or_null(s.normalized_median[k]);
      }
    }
    js["median"] = med;
    if (s.has_baseline) {
      norm["pairs"] = s.normalized[0].pairs;
      js["normalized_average"] = norm;
      js["normalized_median"] = normmed;
    }
    summary.push_back(std::move(js));
  }
  json methods = json::array();
  for (Method m : rep.methods) methods.push_back(to_string(m));
  json out{{"kind", rep.kind}, {"design_hash", rep.design_hash}, {"seeds", rep.seeds}, {"methods", methods},
           {"runs", runs}, {"summary", summary}};
  if (rep.kind == "ablate") {
    out["axis"] = rep.axis;
    out["grid"] = rep.grid;
  }
  return out;
}

inline std::string report_to_string(const ExperimentReport& rep) { return report_to_json(rep).dump(2) + "\n"; }

/// One row per (grid point, method): medians and normalized values.
inline std::string report_to_csv(const ExperimentReport& rep) {
  std::string s = "kind,axis,grid,method,runs,feasible";
  for (const char* m : kMetricNames) s += std::string(",median_") + m;
  for (const char* m : kMetricNames) s += std::string(",norm_avg_") + m;
  s += ",norm_pairs";
  for (const char* m : kMetricNames) s += std::string(",norm_median_") + m;
  s += "\n";
  for (const auto& r : rep.summary) {
    s += rep.kind + "," + rep.axis + "," + (rep.kind == "ablate" ? detail::csv_num(r.grid_value) : "") + "," +
         to_string(r.method) + "," + std::to_string(r.runs) + "," + std::to_string(r.feasible);
    for (double v : r.median) s += "," + detail::csv_num(v);
    for (const auto& n : r.normalized) s += "," + (r.has_baseline ? detail::csv_num(n.value) : "");
    s += "," + (r.has_baseline ? std::to_string(r.normalized[0].pairs) : "");
    for (double v : r.normalized_median) s += "," + (r.has_baseline ? detail::csv_num(v) : "");
    s += "\n";
  }
  return s;
}

/// Convergence curves as (method, seed, grid, step, f) rows.
inline std::string curves_to_csv(const ExperimentReport& rep) {
  std::string s = "method,seed,grid,step,f\n";
  for (const auto& r : rep.runs) {
    const std::string prefix = std::string(to_string(r.method)) + "," + std::to_string(r.seed) + "," +
                               detail::csv_num(r.grid_value) + ",";
    for (const auto& rec : r.log) s += prefix + std::to_string(rec.step) + "," + detail::csv_num(rec.f) + "\n";
  }
  return s;
}

}  // namespace hfp
