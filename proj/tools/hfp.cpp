// Command-line front end: run, bench, ablate, gen.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hfp/hfp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUsage = 64;

struct UsageError : hfp::Error {
  using hfp::Error::Error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  if (s == "inf" || s == "infinity") return static_cast<double>(hfp::kNoRefinement);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + s + "' in " + what);
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw UsageError(what + " must not be empty");
  return out;
}

std::vector<hfp::Method> parse_methods(const std::string& s) {
  std::vector<hfp::Method> out;
  for (const auto& item : split(s, ',')) {
    try {
      out.push_back(hfp::method_from_string(item));
    } catch (const hfp::ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("--methods must not be empty");
  return out;
}

// Flags shared by run, bench and ablate.
struct CommonFlags {
  std::string weights;
  int n_max = 30;
  std::string k_interval = "20";
  int max_steps = 2500;
  double min_spacing = 15.0;
  double spacing_per_net = 0.0;
  double die_margin = 0.0;
  bool accept_any = false;
  bool per_die = false;
  bool cost_by_area = false;

  void add(CLI::App* app) {
    app->add_option("--weights", weights, "objective weights omega,beta,gamma,tau (default 1,1,0.5,2)");
    app->add_option("--nmax", n_max, "maximum nets between any die pair")->capture_default_str();
    app->add_option("--k-interval", k_interval, "optimizer steps between inter-die refinements, or 'inf'")
        ->capture_default_str();
    app->add_option("--max-steps", max_steps, "global step budget (optimizer steps plus refinements)")
        ->capture_default_str();
    app->add_flag("--budget-per-die", per_die, "grant --max-steps to every die instead of sharing it");
    app->add_option("--min-die-spacing", min_spacing, "minimum gap between dies (um)")->capture_default_str();
    app->add_option("--spacing-per-net", spacing_per_net, "extra die gap per allowed inter-die net (um)")
        ->capture_default_str();
    app->add_option("--die-margin", die_margin, "margin around each die's blocks (um)")->capture_default_str();
    app->add_flag("--refine-accept-any", accept_any, "accept refinements that worsen the objective");
    app->add_flag("--cost-by-area", cost_by_area, "use total die cost Phi*A/Y instead of Phi/Y");
  }

  hfp::MmfpConfig config() const {
    hfp::MmfpConfig cfg;
    if (!weights.empty()) {
      const std::vector<double> w = parse_list(weights, "--weights");
      if (w.size() != 4) throw UsageError("--weights expects four values omega,beta,gamma,tau");
      cfg.weights.omega = w[0];
      cfg.weights.beta = w[1];
      cfg.weights.gamma = w[2];
      cfg.weights.tau = w[3];
    }
    cfg.weights.n_max = n_max;
    cfg.weights.die_margin = die_margin;
    cfg.weights.cost_scale_by_area = cost_by_area;
    const double k = parse_number(k_interval, "--k-interval");
    if (k < 1) throw UsageError("--k-interval must be >= 1 or 'inf'");
    cfg.refine.k_interval = k >= hfp::kNoRefinement ? hfp::kNoRefinement : static_cast<int>(k);
    cfg.refine.accept_any = accept_any;
    cfg.max_total_steps = max_steps;
    cfg.budget_per_die = per_die;
    cfg.layout.min_die_spacing = min_spacing;
    cfg.layout.spacing_per_net = spacing_per_net;
    try {
      cfg.validate();
    } catch (const hfp::ConfigError& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    hfp::write_file(path, text);
  }
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  if (count < 1) throw UsageError("--seeds must be >= 1");
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-die heterogeneous floorplanner"};
  app.require_subcommand(1);

  // run
  CLI::App* run = app.add_subcommand("run", "floorplan one design");
  std::string design_path, method = "sa", out_path, svg_path, save_agent, load_agent;
  std::uint64_t seed = 1;
  CommonFlags run_flags;
  run->add_option("--design", design_path, "design JSON")->required();
  run->add_option("--method", method, "baseline, sa or rl")->capture_default_str();
  run->add_option("--seed", seed, "random seed")->capture_default_str();
  run->add_option("--out", out_path, "result JSON path (default: stdout)");
  run->add_option("--svg", svg_path, "floorplan SVG path");
  run->add_option("--save-agent", save_agent, "write the trained agent (rl only)");
  run->add_option("--load-agent", load_agent, "start from a saved agent (rl only)");
  run_flags.add(run);

  // bench
  CLI::App* bench = app.add_subcommand("bench", "compare methods over seeds");
  std::string bench_design, bench_methods = "baseline,sa,rl", bench_out, bench_csv, bench_curves;
  int bench_seeds = 20;
  std::uint64_t bench_base = 1;
  CommonFlags bench_flags;
  bench->add_option("--design", bench_design, "design JSON")->required();
  bench->add_option("--methods", bench_methods, "comma-separated methods")->capture_default_str();
  bench->add_option("--seeds", bench_seeds, "number of seeds")->capture_default_str();
  bench->add_option("--seed-base", bench_base, "first seed")->capture_default_str();
  bench->add_option("--out", bench_out, "report JSON path (default: stdout)");
  bench->add_option("--csv", bench_csv, "summary CSV path");
  bench->add_option("--curves", bench_curves, "convergence curve CSV path");
  bench_flags.add(bench);

  // ablate
  CLI::App* abl = app.add_subcommand("ablate", "sweep one parameter");
  std::string abl_design, abl_axis, abl_grid, abl_methods = "sa", abl_out, abl_csv;
  int abl_seeds = 20;
  std::uint64_t abl_base = 1;
  CommonFlags abl_flags;
  abl->add_option("--design", abl_design, "design JSON")->required();
  abl->add_option("--axis", abl_axis, "k_interval, n_max, beta_tau, tau, gamma_beta, spacing_per_net or hard_ip_count")
      ->required();
  abl->add_option("--grid", abl_grid, "comma-separated grid values")->required();
  abl->add_option("--methods", abl_methods, "comma-separated methods")->capture_default_str();
  abl->add_option("--seeds", abl_seeds, "number of seeds")->capture_default_str();
  abl->add_option("--seed-base", abl_base, "first seed")->capture_default_str();
  abl->add_option("--out", abl_out, "report JSON path (default: stdout)");
  abl->add_option("--csv", abl_csv, "summary CSV path");
  abl_flags.add(abl);

  // gen
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic design");
  hfp::GeneratorSpec spec;
  std::string gen_out;
  gen->add_option("--blocks", spec.n_blocks, "number of blocks")->capture_default_str();
  gen->add_option("--nets", spec.n_nets, "number of nets")->capture_default_str();
  gen->add_option("--dies", spec.n_dies, "number of dies (alternating 7nm / 45nm)")->capture_default_str();
  gen->add_option("--hard-ips", spec.hard_ip_count, "blocks locked to 45nm")->capture_default_str();
  gen->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  gen->add_option("--mean-area", spec.mean_area, "median 45nm block area (um^2)")->capture_default_str();
  gen->add_option("--area-sigma", spec.area_sigma, "lognormal area spread")->capture_default_str();
  gen->add_option("--area-ratio", spec.area_ratio, "45nm / 7nm block area ratio")->capture_default_str();
  gen->add_option("--locality", spec.locality, "net pin window in block indices")->capture_default_str();
  gen->add_option("--max-degree", spec.max_degree, "maximum pins per net")->capture_default_str();
  gen->add_option("--out", gen_out, "design JSON path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*run) {
      const hfp::MmfpConfig cfg = run_flags.config();
      hfp::Method m;
      try {
        m = hfp::method_from_string(method);
      } catch (const hfp::ConfigError& e) {
        throw UsageError(e.what());
      }
      if ((!save_agent.empty() || !load_agent.empty()) && m != hfp::Method::rl) {
        throw UsageError("--save-agent/--load-agent require --method rl");
      }
      const hfp::Design design = hfp::load_design(design_path);
      std::optional<hfp::PpoAgent> agent;
      if (!load_agent.empty()) agent = hfp::load_agent(load_agent);
      hfp::Rng rng(seed);
      const hfp::MmfpSolution sol = hfp::run_method(design, m, cfg, rng, agent);
      const std::string text = hfp::solution_to_string(design, sol, seed, cfg);
      write_or_print(out_path, text);
      if (!svg_path.empty()) hfp::emit_svg(sol, svg_path);
      if (!save_agent.empty() && sol.agent) hfp::save_agent(*sol.agent, save_agent);
      if (!out_path.empty() && out_path != "-") {
        std::cout << hfp::to_string(m) << " seed " << seed << ": f = " << sol.breakdown.f
                  << (sol.breakdown.feasible ? " (feasible)" : " (infeasible)") << "\n";
      }
    } else if (*bench) {
      const hfp::MmfpConfig cfg = bench_flags.config();
      const auto methods = parse_methods(bench_methods);
      const hfp::Design design = hfp::load_design(bench_design);
      const auto rep = hfp::compare_methods(design, seed_range(bench_base, bench_seeds), cfg, methods);
      write_or_print(bench_out, hfp::report_to_string(rep));
      if (!bench_csv.empty()) hfp::write_file(bench_csv, hfp::report_to_csv(rep));
      if (!bench_curves.empty()) hfp::write_file(bench_curves, hfp::curves_to_csv(rep));
    } else if (*abl) {
      const hfp::MmfpConfig cfg = abl_flags.config();
      const auto methods = parse_methods(abl_methods);
      const auto grid = parse_list(abl_grid, "--grid");
      const auto& axes = hfp::ablation_axes();
      if (std::find(axes.begin(), axes.end(), abl_axis) == axes.end()) {
        throw UsageError("unknown --axis '" + abl_axis + "'");
      }
      const hfp::Design design = hfp::load_design(abl_design);
      const auto rep = hfp::ablate(design, abl_axis, grid, seed_range(abl_base, abl_seeds), cfg, methods);
      write_or_print(abl_out, hfp::report_to_string(rep));
      if (!abl_csv.empty()) hfp::write_file(abl_csv, hfp::report_to_csv(rep));
    } else if (*gen) {
      hfp::Design design;
      try {
        design = hfp::generate(spec);
      } catch (const hfp::ConfigError& e) {
        throw UsageError(e.what());
      }
      write_or_print(gen_out, hfp::save_design_string(design));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hfp::InfeasibleInput& e) {
    std::cerr << "infeasible input: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const hfp::DesignFileError& e) {
    std::cerr << "invalid design: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
