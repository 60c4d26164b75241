#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pairhmm/theta_newton.hpp"
#include "pairhmm/types.hpp"

namespace pairhmm {

enum class InitMethod { Spa, Random, Provided };

struct SolverOptions {
  /// Weight of the |det Θ| regularizer.
  double lambda = 0.05;
  int max_outer_iters = 20000;
  /// Stop once the relative loss decrease of an outer iteration falls below this.
  double outer_tol = 1e-13;
  int newton_max_iters = 50;
  double newton_tol = 1e-14;
  double armijo_c = 1e-4;
  double armijo_beta = 0.5;
  /// Smallest line-search step tried before the iteration is declared stalled.
  double min_alpha = 0x1.0p-30;
  InitMethod init_method = InitMethod::Spa;
  /// Θ-only iterations (M held at its initial value) run before the joint
  /// updates, so the first M update sees a Θ consistent with M⁰. 0 disables.
  int warm_start_iters = 2000;
  std::uint64_t seed = 0;
  /// Starting emission for InitMethod::Provided.
  std::optional<Matrix> initial_emission;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

struct IterationLog {
  int iter = 0;
  double loss = 0.0;
  double alpha = 0.0;
  int newton_iters = 0;
};

struct FitResult {
  EmissionMatrix M;
  ThetaMatrix Theta;
  std::vector<double> loss_trace;
  std::vector<IterationLog> log;
  int outer_iters = 0;
  bool converged = false;
  /// The line search shrank below min_alpha without sufficient decrease.
  bool stalled = false;
};

/// M Θ Mᵀ.
Matrix reconstruct(const Matrix& m, const Matrix& theta);

/// Σ_{Ω>0} -Ω log (MΘMᵀ) + λ|det Θ|, reconstruction floored at 1e-300.
double loss(const Matrix& omega, const Matrix& m, const Matrix& theta, double lambda);
/// KL(Ω ‖ MΘMᵀ): the loss with λ = 0 minus the entropy of Ω.
double reconstruction_kl(const Matrix& omega, const Matrix& m, const Matrix& theta);

/// Ω ⊘ (MΘMᵀ) with 0 wherever Ω is 0. Throws NumericalBreakdown where Ω > 0
/// but the reconstruction vanishes.
Matrix ratio_matrix(const Matrix& omega, const Matrix& m, const Matrix& theta);

struct LossGradient {
  Matrix dM;
  Matrix dTheta;
};
LossGradient loss_gradient(const Matrix& omega, const Matrix& m, const Matrix& theta,
                           double lambda);

/// Distance to stationarity of (M, Θ) for the regularized problem:
/// the 2-norm of [ M - P(M - ∇_M), Θ - P(Θ - ∇_Θ) ] where P projects each
/// column of M onto the simplex and Θ onto {Θ ≥ 0, 1ᵀΘ1 = 1, Θ1 = Θᵀ1}.
/// Zero exactly at KKT points.
double stationarity_residual(const Matrix& omega, const Matrix& m, const Matrix& theta,
                             double lambda);

/// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);
/// Euclidean projection onto the Θ constraint set (Dykstra's method).
Matrix project_to_theta_set(const Matrix& v);

/// Successive projection on the row-normalized (symmetrized) Ω; returns the
/// K selected row indices in selection order.
std::vector<int> spa_select(const Matrix& omega, int k);

/// argmin_{x >= 0} ‖A x - b‖ by the Lawson-Hanson active-set method.
Vector nonnegative_least_squares(const Matrix& a, const Vector& b);

struct Initialization {
  EmissionMatrix M;
  ThetaMatrix Theta;
  std::vector<int> anchors;  // filled by InitMethod::Spa
};

/// Θ⁰ = (I + 11ᵀ)/(K(K+1)); M⁰ per opts.init_method, floored at 1e-6 and
/// renormalized. Throws KTooLarge when K > N.
/// (I + 11ᵀ) / (K(K+1)): symmetric, strictly positive and feasible.
ThetaMatrix initial_theta(int k);

Initialization initialize(const Matrix& omega, int k, const SolverOptions& opts);

struct ScaStep {
  Matrix M;      // closed-form surrogate minimizer, columns normalized
  Matrix Theta;  // Newton solution of the Θ surrogate
  Matrix omega_tilde;
  int newton_iters = 0;
};

/// One surrogate minimization at (M, Θ). The Θ statistic is
/// S = Θ ∗ (MᵀΩ̃M); the four-index posterior is never formed.
ScaStep sca_step(const Matrix& omega, const Matrix& m, const ThetaMatrix& theta, double lambda,
                 const NewtonOptions& newton = {});

/// Full solve: surrogate step, then Armijo backtracking on the true loss
/// along the segment towards the surrogate minimizer.
struct ThetaFitOptions {
  int max_iters = 2000;
  double relative_tol = 1e-7;
  NewtonOptions newton{};
};

struct ThetaFitResult {
  ThetaMatrix theta;
  std::vector<double> objective_trace;
  int iterations = 0;
};

/// Minimizes loss(Ω, M, ·, λ) over Θ with M fixed: repeated Θ-surrogate
/// Newton solves with Armijo backtracking, stopping once the relative
/// decrease falls below relative_tol.
ThetaFitResult fit_theta(const Matrix& omega, const Matrix& m, const ThetaMatrix& theta0,
                         double lambda, const ThetaFitOptions& opts = {});

FitResult sca_solve(const CooccurrenceMatrix& omega, int k, const SolverOptions& opts = {});

struct NmfResult {
  EmissionMatrix M;
  /// Unbalanced joint; row-normalize for a transition estimate.
  Matrix joint;
  std::vector<double> kl_trace;
};

/// Multiplicative updates for Ω ≈ MΘMᵀ under KL with 1ᵀM = 1ᵀ and 1ᵀΘ1 = 1.
NmfResult nmf_baseline(const CooccurrenceMatrix& omega, int k, std::uint64_t seed, int iters);

}  // namespace pairhmm
