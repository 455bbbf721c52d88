#pragma once

// Adaptive loop: iterate on each mesh until E_FP <= theta E_FEM, then mark a
// fixed fraction of cells, coarsen, refine and carry the iterate over.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "monofem/core.hpp"
#include "monofem/estimator.hpp"
#include "monofem/mesh.hpp"
#include "monofem/problems.hpp"
#include "monofem/solver.hpp"
#include "monofem/space.hpp"

namespace monofem {

struct AdaptConfig {
  double theta = 0.5;
  double refine_fraction = 0.25;
  double derefine_fraction = 0.05;
  int max_meshes = 10;
  int max_inner = 200;       // safety cap per mesh; hitting it flags the record
  double target_bound = 0.0;  // stop once C_I E_FEM + E_FP <= target; 0 disables
  double c_i = 1.0;

  void validate() const {
    if (!(theta > 0.0)) {
      throw std::invalid_argument("AdaptConfig: theta must be positive");
    }
    if (!(refine_fraction >= 0.0 && refine_fraction < 1.0) || !(derefine_fraction >= 0.0 && derefine_fraction < 1.0)) {
      throw std::invalid_argument("AdaptConfig: fractions must lie in [0, 1)");
    }
    if (refine_fraction + derefine_fraction > 1.0) {
      throw std::invalid_argument("AdaptConfig: refine + derefine fraction exceeds 1");
    }
    if (max_meshes < 1 || max_inner < 1) {
      throw std::invalid_argument("AdaptConfig: max_meshes and max_inner must be >= 1");
    }
    if (!(target_bound >= 0.0) || !(c_i > 0.0)) {
      throw std::invalid_argument("AdaptConfig: need target_bound >= 0 and c_i > 0");
    }
  }
};

/// State after one fixed-point step on mesh i.
struct AdaptStep {
  int mesh = 0;
  int iteration = 0;
  std::size_t dofs = 0;
  double e_fem = 0.0;
  double e_fp = 0.0;
  double bound = 0.0;
  double true_error = -1.0;  // -1 without exact solution
  double effectivity = -1.0;
};

struct AdaptRecord {
  int mesh = 0;
  std::size_t dofs = 0;
  std::size_t cells = 0;
  int iterations = 0;  // n*
  double e_fem = 0.0;
  double e_fp = 0.0;
  double bound = 0.0;
  double true_error = -1.0;
  double relative_error = -1.0;
  double effectivity = -1.0;
  bool flagged = false;  // inner loop hit the safety cap
};

struct Marking {
  std::vector<int> refine;
  std::vector<int> derefine;
};

/// ceil(refine_frac #K) largest and floor(derefine_frac #K) smallest indicators,
/// ties by ascending id, the two sets disjoint. Both lists come back sorted by id.
inline Marking mark_fixed_fraction(std::span<const double> eta, double refine_frac, double derefine_frac) {
  if (!(refine_frac >= 0.0 && refine_frac <= 1.0) || !(derefine_frac >= 0.0 && derefine_frac <= 1.0)) {
    throw std::invalid_argument("mark_fixed_fraction: fractions must lie in [0, 1]");
  }
  const std::size_t n = eta.size();
  // Guard against 0.25 * 100 landing a hair above 25.
  auto nr = static_cast<std::size_t>(std::ceil(refine_frac * static_cast<double>(n) - 1e-9));
  auto nd = static_cast<std::size_t>(std::floor(derefine_frac * static_cast<double>(n) + 1e-9));
  nr = std::min(nr, n);
  nd = std::min(nd, n - nr);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> by_large = order;
  std::stable_sort(by_large.begin(), by_large.end(), [&](int a, int b) { return eta[a] > eta[b]; });
  Marking m;
  m.refine.assign(by_large.begin(), by_large.begin() + static_cast<std::ptrdiff_t>(nr));
  std::vector<char> taken(n, 0);
  for (int k : m.refine) {
    taken[static_cast<std::size_t>(k)] = 1;
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta[a] < eta[b]; });
  for (int k : order) {
    if (m.derefine.size() == nd) {
      break;
    }
    if (!taken[static_cast<std::size_t>(k)]) {
      m.derefine.push_back(k);
    }
  }
  std::sort(m.refine.begin(), m.refine.end());
  std::sort(m.derefine.begin(), m.derefine.end());
  return m;
}

/// Derefines first, then refines the surviving marked cells.
inline Mesh adapt_mesh(const Mesh& mesh, const Marking& marking) {
  DerefineResult coarse = derefine_with_map(mesh, marking.derefine);
  std::vector<int> refine;
  refine.reserve(marking.refine.size());
  for (int k : marking.refine) {
    refine.push_back(coarse.cell_map[static_cast<std::size_t>(k)]);
  }
  std::sort(refine.begin(), refine.end());
  refine.erase(std::unique(refine.begin(), refine.end()), refine.end());
  return refine.empty() ? std::move(coarse.mesh) : monofem::refine(coarse.mesh, refine);
}

struct AdaptResult {
  std::vector<AdaptRecord> records;
  std::vector<AdaptStep> steps;
  std::shared_ptr<const FeSpace> space;  // final space
  Vector coef;                           // final iterate
};

/// Called once per mesh after the inner loop, before marking.
using MeshCallback = std::function<void(const AdaptRecord&, const FeSpace&, const Vector&, const IndicatorField&)>;

inline AdaptResult adaptive_solve(const ProblemDef& problem, const Mesh& initial_mesh, int degree, const AdaptConfig& config,
                                  const Vector* initial = nullptr, const MeshCallback& on_mesh = {}) {
  config.validate();
  const Constants constants = make_constants(problem);
  const double lipschitz = constants.lipschitz;

  auto space = std::make_shared<const FeSpace>(build_space(initial_mesh, degree));
  Vector coef = initial != nullptr ? *initial : Vector::Zero(static_cast<Eigen::Index>(space->dof_count()));
  space->check_coef(coef);

  AdaptResult result;
  for (int i = 0; i < config.max_meshes; ++i) {
    IterationState state(space, problem, coef);
    AdaptRecord rec;
    rec.mesh = i;
    rec.dofs = space->dof_count();
    rec.cells = space->cell_count();
    IndicatorField field;
    while (true) {
      state.step();
      field = local_indicators(*space, state.current(), state.previous(), problem, lipschitz, config.c_i);
      AdaptStep s;
      s.mesh = i;
      s.iteration = state.iteration();
      s.dofs = rec.dofs;
      s.e_fem = field.e_fem;
      s.e_fp = field.e_fp;
      s.bound = total_bound(field);
      if (problem.exact) {
        const ErrorNorms err = true_error(*space, state.current(), problem);
        s.true_error = err.energy;
        s.effectivity = err.energy > 0.0 ? s.bound / err.energy : -1.0;
        rec.relative_error = err.relative();
      }
      result.steps.push_back(s);
      if (field.e_fp <= config.theta * field.e_fem) {
        break;
      }
      if (state.iteration() >= config.max_inner) {
        rec.flagged = true;
        break;
      }
    }
    const AdaptStep& last = result.steps.back();
    rec.iterations = state.iteration();
    rec.e_fem = last.e_fem;
    rec.e_fp = last.e_fp;
    rec.bound = last.bound;
    rec.true_error = last.true_error;
    rec.effectivity = last.effectivity;
    coef = state.current();
    result.records.push_back(rec);
    if (on_mesh) {
      on_mesh(rec, *space, coef, field);
    }
    const bool done = i + 1 == config.max_meshes || (config.target_bound > 0.0 && rec.bound <= config.target_bound);
    if (done) {
      break;
    }
    const Marking marking = mark_fixed_fraction(field.eta, config.refine_fraction, config.derefine_fraction);
    auto next_space =
        std::make_shared<const FeSpace>(build_space(std::make_shared<const Mesh>(adapt_mesh(space->mesh(), marking)), degree));
    coef = transfer(*space, coef, *next_space);
    space = std::move(next_space);
  }
  result.space = space;
  result.coef = coef;
  return result;
}

/// One row per (mesh, iteration): mesh,iteration,dofs,e_fem,e_fp,bound,true_error,effectivity.
inline void write_steps_csv(std::ostream& out, const std::vector<AdaptStep>& steps) {
  out << "mesh,iteration,dofs,e_fem,e_fp,bound,true_error,effectivity\n";
  out.precision(17);
  for (const auto& s : steps) {
    out << s.mesh << ',' << s.iteration << ',' << s.dofs << ',' << s.e_fem << ',' << s.e_fp << ',' << s.bound << ','
        << s.true_error << ',' << s.effectivity << '\n';
  }
}

/// One row per mesh.
inline void write_records_csv(std::ostream& out, const std::vector<AdaptRecord>& records) {
  out << "mesh,dofs,cells,iterations,e_fem,e_fp,bound,true_error,relative_error,effectivity,flagged\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.mesh << ',' << r.dofs << ',' << r.cells << ',' << r.iterations << ',' << r.e_fem << ',' << r.e_fp << ','
        << r.bound << ',' << r.true_error << ',' << r.relative_error << ',' << r.effectivity << ',' << (r.flagged ? 1 : 0)
        << '\n';
  }
}

}  // namespace monofem
