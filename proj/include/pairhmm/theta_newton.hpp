#pragma once

#include <vector>

#include "pairhmm/types.hpp"

namespace pairhmm {

/// |det Θ| accumulated from the log-magnitudes of the LU pivots.
double abs_determinant(const Matrix& theta);

/// Ξ = |det Θ| Θ^{-T}, the gradient of |det Θ|. Returns zero when the
/// reciprocal condition estimate of Θ is below 1e-12.
Matrix determinant_gradient(const Matrix& theta);

/// Objective of the Θ subproblem: Σ -S_kj log Θ_kj + λ Σ Ξ_kj Θ_kj.
double theta_objective(const Matrix& theta, const Matrix& stat, const Matrix& xi, double lambda);
/// Its gradient, -S ⊘ Θ + λΞ.
Matrix theta_objective_gradient(const Matrix& theta, const Matrix& stat, const Matrix& xi,
                                double lambda);

/// One Newton step of the Θ subproblem with the equality constraints
/// 1ᵀΘ1 = 1 and Θ1 = Θᵀ1 eliminated blockwise. The Hessian is diagonal,
/// so the only linear solve is the K x K system H d = g, where H is
/// A diag(R) Aᵀ with the redundant last balance row of A dropped.
struct NewtonState {
  Matrix G;      // negative gradient, S ⊘ Θ - λΞ
  Matrix R;      // inverse Hessian diagonal, Θ ∗ Θ ⊘ S
  Matrix Xi;     // determinant gradient held fixed for the subproblem
  Matrix H;      // reduced K x K normal matrix
  Vector g;      // reduced right-hand side
  Vector d;      // reduced multipliers; d(0) for the mass constraint
  Matrix delta;  // descent step: Θ + t·delta stays on the constraint set
  double decrement_sq = 0.0;
};

NewtonState newton_direction(const Matrix& theta, const Matrix& stat, const Matrix& xi,
                             double lambda);

struct NewtonOptions {
  int max_iters = 50;
  /// Stop once half the squared Newton decrement drops below this.
  double tol = 1e-14;
  double armijo_c = 1e-4;
  double armijo_beta = 0.5;
};

struct ThetaNewtonResult {
  ThetaMatrix theta;
  int iterations = 0;
  double decrement_sq = 0.0;
  std::vector<double> objective_trace;
  /// max(|1ᵀΘ1 - 1|, ‖Θ1 - Θᵀ1‖∞) after each accepted step.
  std::vector<double> constraint_residuals;
};

/// max(|1ᵀΘ1 - 1|, ‖Θ1 - Θᵀ1‖∞).
double theta_constraint_residual(const Matrix& theta);

/// Minimizes the Θ subproblem from a strictly positive feasible start with
/// Ξ fixed at determinant_gradient(start). Zero entries of `stat` are
/// floored at 1e-14 · ΣS so the diagonal Hessian stays finite.
ThetaNewtonResult theta_newton(const ThetaMatrix& start, const Matrix& stat, double lambda,
                               const NewtonOptions& opts = {});

/// Same, with an explicit Ξ.
ThetaNewtonResult theta_newton(const ThetaMatrix& start, const Matrix& stat, const Matrix& xi,
                               double lambda, const NewtonOptions& opts = {});

}  // namespace pairhmm
