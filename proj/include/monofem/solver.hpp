#pragma once

// Constants of the monotone fixed-point iteration, the linear step
//   M a^n = M a^{n-1} - (c0 / L^2) A(a^{n-1}),
// SPD solves, stopping rules and the a priori tail bound.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "monofem/assembly.hpp"
#include "monofem/core.hpp"
#include "monofem/problems.hpp"
#include "monofem/space.hpp"

namespace monofem {

/// Lipschitz constant of the quasilinear form in the energy norm, using the
/// optimal split delta* of the reaction bound between the two norm parts.
inline double lipschitz_constant(double alpha1, double alpha2, double beta1, double beta2, double poincare) {
  if (!(alpha2 > 0.0) || !(alpha1 >= alpha2)) {
    throw std::invalid_argument("lipschitz_constant: need alpha1 >= alpha2 > 0");
  }
  if (!(beta2 >= 0.0) || !(beta1 >= beta2)) {
    throw std::invalid_argument("lipschitz_constant: need beta1 >= beta2 >= 0");
  }
  if (!(poincare > 0.0)) {
    throw std::invalid_argument("lipschitz_constant: Poincare constant must be positive");
  }
  const double cp2 = poincare * poincare;
  if (beta2 == 0.0) {
    return (alpha1 + beta1 * cp2) / alpha2;
  }
  // delta* = 0 when alpha1/alpha2 >= beta1/beta2.
  if (alpha1 * beta2 >= beta1 * alpha2) {
    return alpha1 / alpha2;
  }
  const double delta = (beta1 * alpha2 - beta2 * alpha1) / (alpha2 + beta2 * cp2);
  return std::max((alpha1 + delta * cp2) / alpha2, (beta1 - delta) / beta2);
}

/// k = sqrt(1 - (c0/L)^2).
inline double contraction_constant(double c0, double lipschitz) {
  if (!(c0 > 0.0) || !(c0 <= lipschitz)) {
    throw std::invalid_argument("contraction_constant: need 0 < c0 <= L");
  }
  const double r = c0 / lipschitz;
  return std::sqrt(std::max(0.0, 1.0 - r * r));
}

struct Constants {
  double c0 = 1.0;
  double lipschitz = 1.0;
  double contraction = 0.0;
  double poincare = unit_square_poincare;

  /// Damping factor c0 / L^2 of the fixed-point step.
  double damping() const { return c0 / (lipschitz * lipschitz); }
};

inline Constants make_constants(const ProblemDef& problem) {
  Constants c;
  c.c0 = 1.0;
  c.poincare = problem.poincare;
  c.lipschitz = lipschitz_constant(problem.alpha1, problem.alpha2, problem.beta1, problem.beta2, problem.poincare);
  c.contraction = contraction_constant(c.c0, c.lipschitz);
  return c;
}

/// k^n / (1 - k) * d01, the bound on |||u_h - u_h^n|||.
inline double apriori_tail(double k, int n, double d01) {
  if (!(k >= 0.0 && k < 1.0) || n < 1 || !(d01 >= 0.0)) {
    throw std::invalid_argument("apriori_tail: need 0 <= k < 1, n >= 1, d01 >= 0");
  }
  return std::pow(k, n) / (1.0 - k) * d01;
}

/// Preconditioned CG; throws solver_error if ||M x - rhs|| > tol ||rhs|| after max_iterations.
inline Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs, double tol = 1e-13, int max_iterations = -1) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  if (rhs.size() == 0) {
    return rhs;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iterations > 0 ? max_iterations : static_cast<int>(10 * rhs.size() + 100));
  cg.compute(matrix);
  if (cg.info() != Eigen::Success) {
    throw solver_error("solve_spd: preconditioner setup failed");
  }
  Vector x = cg.solve(rhs);
  const double r = (matrix * x - rhs).norm();
  if (cg.info() != Eigen::Success || r > tol * rhs.norm() * (1.0 + 1e-6)) {
    throw solver_error("solve_spd: no convergence after " + std::to_string(cg.iterations()) +
                       " iterations, relative residual " + std::to_string(r / rhs.norm()));
  }
  return x;
}

/// Factorizes the iteration matrix once and reuses it for every step: sparse
/// Cholesky up to 2e5 unknowns, preconditioned CG beyond.
class SpdSolver {
public:
  static constexpr Eigen::Index direct_limit = 200000;

  explicit SpdSolver(std::shared_ptr<const SparseMatrix> matrix, double tol = 1e-13)
      : matrix_(std::move(matrix)), tol_(tol) {
    if (matrix_->rows() <= direct_limit && matrix_->rows() > 0) {
      cholesky_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(*matrix_);
      if (cholesky_->info() != Eigen::Success) {
        throw solver_error("iteration matrix is not positive definite");
      }
    }
  }

  Vector solve(const Vector& rhs) const {
    if (rhs.size() == 0) {
      return rhs;
    }
    if (cholesky_) {
      Vector x = cholesky_->solve(rhs);
      if (!x.allFinite()) {
        throw numeric_error("iteration solve produced non-finite values");
      }
      return x;
    }
    return solve_spd(*matrix_, rhs, tol_);
  }

  bool direct() const { return static_cast<bool>(cholesky_); }

private:
  std::shared_ptr<const SparseMatrix> matrix_;
  double tol_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> cholesky_;
};

struct StepRecord {
  int n = 0;
  double step_norm = 0.0;     // |||u^n - u^{n-1}|||
  double residual_max = 0.0;  // max_j |A(u^n, phi_j)|
  double tail_bound = 0.0;    // k^n / (1 - k) |||u^1 - u^0|||
};

/// Iterates on one space; owns the iteration matrix and its factorization.
class IterationState {
public:
  IterationState(std::shared_ptr<const FeSpace> space, const ProblemDef& problem, Vector initial,
                 std::optional<double> damping = std::nullopt)
      : space_(std::move(space)), problem_(&problem), constants_(make_constants(problem)) {
    space_->check_coef(initial);
    damping_ = damping.value_or(constants_.damping());
    matrix_ = std::make_shared<const SparseMatrix>(assemble_iteration_matrix(*space_, problem.alpha2, problem.beta2));
    solver_ = std::make_shared<const SpdSolver>(matrix_);
    curr_ = std::move(initial);
    prev_ = curr_;
  }

  const FeSpace& space() const { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const { return space_; }
  const ProblemDef& problem() const { return *problem_; }
  const Constants& constants() const { return constants_; }
  const SparseMatrix& matrix() const { return *matrix_; }
  double damping() const { return damping_; }

  int iteration() const { return n_; }
  const Vector& current() const { return curr_; }
  const Vector& previous() const { return prev_; }
  const std::vector<StepRecord>& history() const { return history_; }

  /// Residual vector A(u^n, .) of the current iterate (computed once per iterate).
  const Vector& residual() {
    if (!residual_) {
      residual_ = assemble_residual(*space_, curr_, *problem_);
    }
    return *residual_;
  }

  /// One fixed-point step; the matrix and its factorization are reused.
  void step() {
    const Vector& r = residual();
    Vector rhs = (*matrix_) * curr_ - damping_ * r;
    Vector next = solver_->solve(rhs);
    prev_ = std::move(curr_);
    curr_ = std::move(next);
    residual_.reset();
    ++n_;

    StepRecord rec;
    rec.n = n_;
    rec.step_norm = energy_norm(*matrix_, curr_ - prev_);
    const Vector& rn = residual();
    rec.residual_max = rn.size() > 0 ? rn.cwiseAbs().maxCoeff() : 0.0;
    if (n_ == 1) {
      d01_ = rec.step_norm;
    }
    rec.tail_bound = constants_.contraction < 1.0 ? apriori_tail(constants_.contraction, n_, d01_) : 0.0;
    history_.push_back(rec);
  }

  double residual_max() {
    const Vector& r = residual();
    return r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  }

private:
  std::shared_ptr<const FeSpace> space_;
  const ProblemDef* problem_;
  Constants constants_;
  double damping_ = 1.0;
  std::shared_ptr<const SparseMatrix> matrix_;
  std::shared_ptr<const SpdSolver> solver_;
  Vector prev_;
  Vector curr_;
  std::optional<Vector> residual_;
  int n_ = 0;
  double d01_ = 0.0;
  std::vector<StepRecord> history_;
};

inline void fixed_point_step(IterationState& state) { state.step(); }

struct StopRule {
  int max_iterations = 100000;
  double residual_tolerance = 0.0;  // stop once max_j |A(u^n, phi_j)| <= tolerance; 0 disables
  std::function<bool(IterationState&)> predicate;  // extra stop test, e.g. estimator balance

  static StopRule iterations(int n) {
    StopRule r;
    r.max_iterations = n;
    return r;
  }
  static StopRule residual(double tolerance, int cap = 100000) {
    StopRule r;
    r.residual_tolerance = tolerance;
    r.max_iterations = cap;
    return r;
  }
};

struct FixedPointResult {
  Vector coef;
  std::vector<StepRecord> history;
  int iterations = 0;
  bool converged = false;  // the residual or predicate rule fired before the cap
};

inline FixedPointResult run_fixed_point(std::shared_ptr<const FeSpace> space, const ProblemDef& problem, Vector initial,
                                        const StopRule& rule, std::optional<double> damping = std::nullopt) {
  IterationState state(std::move(space), problem, std::move(initial), damping);
  FixedPointResult out;
  const auto satisfied = [&]() {
    if (rule.residual_tolerance > 0.0 && state.residual_max() <= rule.residual_tolerance) {
      return true;
    }
    return rule.predicate && state.iteration() > 0 && rule.predicate(state);
  };
  out.converged = satisfied();
  while (!out.converged && state.iteration() < rule.max_iterations) {
    state.step();
    out.converged = satisfied();
  }
  out.coef = state.current();
  out.history = state.history();
  out.iterations = state.iteration();
  return out;
}

inline FixedPointResult run_fixed_point(const FeSpace& space, const ProblemDef& problem, Vector initial,
                                        const StopRule& rule, std::optional<double> damping = std::nullopt) {
  return run_fixed_point(std::make_shared<const FeSpace>(space), problem, std::move(initial), rule, damping);
}

/// History as CSV: n,step_norm,residual_max,tail_bound.
inline void write_history_csv(std::ostream& out, const std::vector<StepRecord>& history) {
  out << "n,step_norm,residual_max,tail_bound\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.n << ',' << r.step_norm << ',' << r.residual_max << ',' << r.tail_bound << '\n';
  }
}

}  // namespace monofem
