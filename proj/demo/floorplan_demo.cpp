// Generate a small two-die design, floorplan it with each method and print
// the objective breakdown.

#include <cstdio>

#include "hfp/hfp.hpp"

int main() {
  hfp::GeneratorSpec spec;
  spec.n_blocks = 20;
  spec.n_nets = 30;
  spec.seed = 3;
  const hfp::Design design = hfp::generate(spec);

  hfp::MmfpConfig cfg;
  std::printf("%-9s %12s %10s %9s %9s %7s %9s\n", "method", "f", "hpwl", "power", "tns", "cost", "feasible");
  for (hfp::Method m : {hfp::Method::baseline, hfp::Method::sa, hfp::Method::rl}) {
    hfp::Rng rng(42);
    const hfp::MmfpSolution sol = hfp::run_method(design, m, cfg, rng);
    const hfp::ObjectiveBreakdown& bd = sol.breakdown;
    std::printf("%-9s %12.2f %10.1f %9.2f %9.2f %7.3f %9s\n", hfp::to_string(m), bd.f, bd.total_hpwl,
                bd.total_power, bd.total_tns, bd.total_cost, bd.feasible ? "yes" : "no");
  }
  return 0;
}
