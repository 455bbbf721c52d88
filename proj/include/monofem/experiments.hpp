#pragma once

// Drivers for the three studies: p sweep on a fixed mesh, h sweep at fixed p,
// and the adaptive loop (with an epsilon sweep for ex2 / ex3).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "monofem/adapt.hpp"
#include "monofem/config.hpp"
#include "monofem/estimator.hpp"
#include "monofem/mesh.hpp"
#include "monofem/mesh_io.hpp"
#include "monofem/problems.hpp"
#include "monofem/solver.hpp"
#include "monofem/space.hpp"

namespace monofem {

/// One error measurement of an a priori study. `rule` is "C<k>" for budget
/// k*p (or k*N) iterations and "reference" for the tolerance run.
struct AprioriRow {
  int level = 0;  // p, or N for the h study
  double h = 0.0;
  std::string rule;
  int budget = 0;
  int iterations = 0;
  double error = 0.0;
  double relative_error = 0.0;
  bool converged = true;  // reference rows: tolerance reached before the cap
};

struct AprioriTable {
  std::string kind;  // apriori-p | apriori-h
  std::vector<AprioriRow> rows;

  /// Rows of one rule ordered by level.
  std::vector<AprioriRow> series(const std::string& rule) const {
    std::vector<AprioriRow> out;
    for (const auto& r : rows) {
      if (r.rule == rule) {
        out.push_back(r);
      }
    }
    return out;
  }
};

namespace detail {

inline ProblemDef make_problem(const ExperimentConfig& c, std::optional<double> epsilon) {
  BuiltinParams params;
  params.epsilon = epsilon;
  params.poincare = c.poincare;
  return builtin(c.problem, params);
}

inline NodeFamily node_family(const ExperimentConfig& c) {
  return c.nodes == "gauss_lobatto" ? NodeFamily::gauss_lobatto : NodeFamily::equispaced;
}

inline std::vector<int> budgets_or(const ExperimentConfig& c, std::vector<int> fallback) {
  return c.budgets.empty() ? fallback : c.budgets;
}

/// Iterates from zero on `space`, measuring the true error after each budgeted
/// iteration count, then continues to the reference tolerance.
inline void apriori_level(const ExperimentConfig& c, const ProblemDef& problem, std::shared_ptr<const FeSpace> space,
                          int level, int scale, double h, const std::vector<int>& factors,
                          std::vector<AprioriRow>& rows) {
  IterationState state(space, problem, Vector::Zero(static_cast<Eigen::Index>(space->dof_count())));
  std::vector<std::pair<int, int>> targets;  // (iterations, factor)
  for (int f : factors) {
    targets.emplace_back(f * scale, f);
  }
  std::sort(targets.begin(), targets.end());
  std::vector<AprioriRow> budget_rows;
  std::size_t next = 0;
  bool reached = state.residual_max() <= c.tolerance;
  const int cap = std::max(c.reference_cap, targets.empty() ? 0 : targets.back().first);
  while (!(reached && next == targets.size()) && state.iteration() < cap) {
    state.step();
    while (next < targets.size() && targets[next].first == state.iteration()) {
      const ErrorNorms err = true_error(*space, state.current(), problem);
      AprioriRow r;
      r.level = level;
      r.h = h;
      r.rule = "C" + std::to_string(targets[next].second);
      r.budget = r.iterations = targets[next].first;
      r.error = err.energy;
      r.relative_error = err.relative();
      budget_rows.push_back(r);
      ++next;
    }
    if (!reached && state.residual_max() <= c.tolerance) {
      reached = true;
    }
  }
  // The reference iterate is the one at which the tolerance was first met
  // unless a larger budget ran past it; the extra steps only shrink the error.
  const ErrorNorms err = true_error(*space, state.current(), problem);
  std::sort(budget_rows.begin(), budget_rows.end(),
            [](const AprioriRow& a, const AprioriRow& b) { return a.budget < b.budget; });
  for (auto& r : budget_rows) {
    rows.push_back(r);
  }
  AprioriRow ref;
  ref.level = level;
  ref.h = h;
  ref.rule = "reference";
  ref.budget = ref.iterations = state.iteration();
  ref.error = err.energy;
  ref.relative_error = err.relative();
  ref.converged = reached;
  rows.push_back(ref);
}

}  // namespace detail

/// Fixed n x n mesh, p = p_min..p_max, budgets C_p p (default C_p = 1, 2, 3).
inline AprioriTable run_apriori_p(const ExperimentConfig& c) {
  validate(c);
  const ProblemDef problem = detail::make_problem(c, c.epsilons.empty() ? std::nullopt : std::optional(c.epsilons[0]));
  auto mesh = std::make_shared<const Mesh>(c.mesh == "tri" ? uniform_tri_mesh(c.n) : uniform_quad_mesh(c.n));
  const auto factors = detail::budgets_or(c, {1, 2, 3});
  AprioriTable table;
  table.kind = "apriori-p";
  for (int p = c.p_min; p <= c.p_max; ++p) {
    auto space = std::make_shared<const FeSpace>(build_space(mesh, p, detail::node_family(c)));
    detail::apriori_level(c, problem, space, p, p, 1.0 / c.n, factors, table.rows);
  }
  return table;
}

/// 2^N x 2^N meshes for N = n_min..n_max at degree p, budgets C_N N (default C_N = 1, 2).
inline AprioriTable run_apriori_h(const ExperimentConfig& c) {
  validate(c);
  const ProblemDef problem = detail::make_problem(c, c.epsilons.empty() ? std::nullopt : std::optional(c.epsilons[0]));
  const auto factors = detail::budgets_or(c, {1, 2});
  AprioriTable table;
  table.kind = "apriori-h";
  for (int level = c.n_min; level <= c.n_max; ++level) {
    const int cells = 1 << level;
    auto mesh = std::make_shared<const Mesh>(c.mesh == "tri" ? uniform_tri_mesh(cells) : uniform_quad_mesh(cells));
    auto space = std::make_shared<const FeSpace>(build_space(mesh, c.p, detail::node_family(c)));
    detail::apriori_level(c, problem, space, level, level, 1.0 / cells, factors, table.rows);
  }
  return table;
}

/// apriori-p: p,rule,budget,iterations,error,relative_error,converged
/// apriori-h: N,h,rule,budget,iterations,error,relative_error,converged
inline void write_apriori_csv(std::ostream& out, const AprioriTable& table) {
  const bool h = table.kind == "apriori-h";
  out << (h ? "N,h," : "p,") << "rule,budget,iterations,error,relative_error,converged\n";
  out.precision(17);
  for (const auto& r : table.rows) {
    out << r.level << ',';
    if (h) {
      out << r.h << ',';
    }
    out << r.rule << ',' << r.budget << ',' << r.iterations << ',' << r.error << ',' << r.relative_error << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

struct AdaptiveRun {
  std::string label;  // file stem, e.g. ex1 or ex3_eps1e-06
  std::optional<double> epsilon;
  double lipschitz = 0.0;
  double contraction = 0.0;
  double theta = 0.0;
  std::size_t assemblies = 0;  // iteration matrices assembled during the run
  AdaptResult result;
};

namespace detail {

inline std::string epsilon_label(double eps) {
  std::ostringstream os;
  os << eps;
  return os.str();
}

inline Mesh adaptive_initial_mesh(const ExperimentConfig& c) {
  return c.mesh_file.empty() ? uniform_tri_mesh(c.n) : read_mesh_file(c.mesh_file);
}

}  // namespace detail

/// Runs the adaptive loop once per epsilon (once for ex1). When `out_dir` is
/// non-empty, writes per-mesh VTK and indicator CSV files there.
inline std::vector<AdaptiveRun> run_adaptive(const ExperimentConfig& c, const std::string& out_dir = {}) {
  validate(c);
  std::vector<std::optional<double>> eps;
  if (c.epsilons.empty()) {
    eps.emplace_back(std::nullopt);
  } else {
    for (double e : c.epsilons) {
      eps.emplace_back(e);
    }
  }
  const Mesh initial = detail::adaptive_initial_mesh(c);
  if (initial.has_quads()) {
    throw config_error("config: adaptive runs need a triangle mesh");
  }
  std::vector<AdaptiveRun> runs;
  for (const auto& e : eps) {
    const ProblemDef problem = detail::make_problem(c, e);
    const Constants k = make_constants(problem);
    AdaptConfig ac;
    ac.theta = c.theta.value_or(problem.theta);
    ac.refine_fraction = c.refine_fraction;
    ac.derefine_fraction = c.derefine_fraction;
    ac.max_meshes = c.max_meshes;
    ac.max_inner = c.max_inner;
    ac.target_bound = c.target_bound;
    ac.c_i = c.c_i;

    AdaptiveRun run;
    run.label = c.problem + (e ? "_eps" + detail::epsilon_label(*e) : "");
    run.epsilon = e;
    run.lipschitz = k.lipschitz;
    run.contraction = k.contraction;
    run.theta = ac.theta;

    MeshCallback dump;
    if (!out_dir.empty() && c.write_vtk) {
      dump = [&](const AdaptRecord& rec, const FeSpace& space, const Vector&, const IndicatorField& field) {
        const std::string stem =
            (std::filesystem::path(out_dir) / (run.label + "_mesh" + std::to_string(rec.mesh))).string();
        write_vtk_file(stem + ".vtk", space.mesh(), {CellField{"eta", field.eta}, CellField{"gamma", field.gamma}},
                       run.label + " mesh " + std::to_string(rec.mesh));
        std::ofstream csv(stem + "_indicators.csv");
        write_indicator_csv(csv, field);
      };
    }
    const std::size_t before = iteration_matrix_assemblies();
    run.result = adaptive_solve(problem, initial, c.p, ac, nullptr, dump);
    run.assemblies = iteration_matrix_assemblies() - before;
    runs.push_back(std::move(run));
  }
  return runs;
}

/// One row per (epsilon, mesh): label,epsilon,lipschitz,contraction,mesh,dofs,iterations,bound,true_error,effectivity,flagged
inline void write_sweep_csv(std::ostream& out, const std::vector<AdaptiveRun>& runs) {
  out << "label,epsilon,lipschitz,contraction,mesh,dofs,iterations,bound,true_error,effectivity,flagged\n";
  out.precision(17);
  for (const auto& run : runs) {
    for (const auto& r : run.result.records) {
      out << run.label << ',' << (run.epsilon ? *run.epsilon : 0.0) << ',' << run.lipschitz << ',' << run.contraction
          << ',' << r.mesh << ',' << r.dofs << ',' << r.iterations << ',' << r.bound << ',' << r.true_error << ','
          << r.effectivity << ',' << (r.flagged ? 1 : 0) << '\n';
    }
  }
}

/// Runs the configured experiment and writes its CSV files into out_dir.
/// Returns the list of files written.
inline std::vector<std::string> run_experiment(const ExperimentConfig& c, const std::string& out_dir) {
  validate(c);
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) { return (std::filesystem::path(out_dir) / name).string(); };
  std::vector<std::string> written;
  const auto open = [&](const std::string& name) {
    written.push_back(path(name));
    std::ofstream f(written.back());
    if (!f) {
      throw std::runtime_error("cannot write '" + written.back() + "'");
    }
    return f;
  };
  {
    std::ofstream f = open("config.txt");
    f << to_text(c);
  }
  if (c.experiment == "apriori-p" || c.experiment == "apriori-h") {
    const AprioriTable t = c.experiment == "apriori-p" ? run_apriori_p(c) : run_apriori_h(c);
    std::ofstream f = open(c.experiment + ".csv");
    write_apriori_csv(f, t);
    return written;
  }
  const auto runs = run_adaptive(c, out_dir);
  for (const auto& run : runs) {
    {
      std::ofstream f = open(run.label + "_records.csv");
      write_records_csv(f, run.result.records);
    }
    std::ofstream f = open(run.label + "_steps.csv");
    write_steps_csv(f, run.result.steps);
  }
  std::ofstream f = open("adaptive_summary.csv");
  write_sweep_csv(f, runs);
  return written;
}

}  // namespace monofem
