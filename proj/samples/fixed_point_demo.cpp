// Solves the a priori test problem on an 8x8 Q2 mesh and prints the iteration
// history next to the a priori tail bound.

#include <iostream>
#include <memory>

#include "monofem/monofem.hpp"

int main() {
  using namespace monofem;
  const ProblemDef problem = builtin("apriori");
  auto mesh = std::make_shared<const Mesh>(uniform_quad_mesh(8));
  auto space = std::make_shared<const FeSpace>(build_space(mesh, 2));

  const Constants k = make_constants(problem);
  std::cout << "L = " << k.lipschitz << ", k = " << k.contraction << ", dofs = " << space->dof_count() << '\n';

  const FixedPointResult r = run_fixed_point(space, problem, Vector::Zero(space->dof_count()), StopRule::residual(1e-12, 500));
  write_history_csv(std::cout, r.history);
  const ErrorNorms err = true_error(*space, r.coef, problem);
  std::cout << "iterations " << r.iterations << ", |||u - u_h||| = " << err.energy << " (relative " << err.relative()
            << ")\n";
}
