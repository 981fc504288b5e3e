// Solves the G = 2, T = pi/2 problem with the switch-time solver and prints the pulse.

#include <cstdio>
#include <numbers>

#include "optent/optent.hpp"

int main() {
  using namespace optent;
  const double G = 2.0, T = std::numbers::pi / 2;
  const auto res = solve_switch_times(G, T, Structure::BBSB, 1);
  std::printf("structure %s, r = %.6f, S = %.6f\n", to_string(res.structure), res.r, entropy_of_squeezing(res.r));
  double start = 0.0;
  for (std::size_t k = 0; k < res.piece_values.size(); ++k) {
    const double end = k < res.switch_times.size() ? res.switch_times[k] : T;
    std::printf("  [%.6f, %.6f]  g = %+.0f\n", start, end, res.piece_values[k]);
    start = end;
  }
  if (res.pmp)
    std::printf("minimum principle: %s (max |Phi| on singular arc %.1e)\n", res.pmp->pass ? "pass" : "fail",
                res.pmp->max_abs_phi_singular);
  return 0;
}
