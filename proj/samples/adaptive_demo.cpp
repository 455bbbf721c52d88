// Adaptive run for ex1 on a 4x4 criss-cross start mesh; writes the final mesh
// with its indicators to adaptive_demo.vtk.

#include <iostream>

#include "monofem/monofem.hpp"

int main() {
  using namespace monofem;
  const ProblemDef problem = builtin("ex1");
  AdaptConfig config;
  config.theta = problem.theta;
  config.max_meshes = 8;

  IndicatorField last;
  const AdaptResult r = adaptive_solve(problem, uniform_tri_mesh(4), 1, config, nullptr,
                                       [&](const AdaptRecord&, const FeSpace&, const Vector&, const IndicatorField& f) { last = f; });
  write_records_csv(std::cout, r.records);
  write_vtk_file("adaptive_demo.vtk", r.space->mesh(), {CellField{"eta", last.eta}}, "ex1 final mesh");
}
