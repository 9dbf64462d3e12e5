// Library use without the CLI: audit a problem, run the mountain-pass
// search at one half-period, polish the saddle and print the level.
//
//   solve_level [problem] [k]

#include <cstdlib>
#include <iostream>
#include <string>

#include "homoclinic/io.hpp"
#include "homoclinic/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace homoclinic;
  const std::string id = argc > 1 ? argv[1] : "example1_compliant";
  const double k = argc > 2 ? std::atof(argv[2]) : 5.0;
  try {
    const Problem p = load_problem(id);
    const ConditionReport audit = check_conditions(p);
    for (const auto& c : audit.conditions) std::cout << c.condition << " " << to_string(c.status) << "\n";

    const BumpDatum bump = find_zeta(p, PeriodicGrid::with_density(1.0, 64));
    const PeriodicGrid grid = PeriodicGrid::with_density(k, 64);
    const PathState path = mp_search(p, grid, build_bump(grid, bump.zeta, p.dim));
    const CriticalPoint cp = newton_polish(p, grid, path.points[path.peak_index]);

    std::cout << "path peak " << format_g17(path.peak_level) << " after " << path.iterations << " iterations\n"
              << "c_k " << format_g17(cp.level) << " residual " << format_g17(cp.residual_sup)
              << (cp.converged ? "" : " (unconverged)") << "\n"
              << "bracket [" << format_g17(audit.constants.alpha) << ", " << format_g17(bump.M0) << "]\n";
    return cp.converged ? 0 : 4;
  } catch (const std::exception& e) {
    std::cerr << "solve_level: " << e.what() << "\n";
    return 1;
  }
}
