#include "pairhmm/theta_newton.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pairhmm/error.hpp"

namespace pairhmm {
namespace {

constexpr double kStatFloor = 1e-14;
constexpr double kMaxCondition = 1e12;

Matrix floor_statistic(const Matrix& stat) {
  const double total = stat.sum();
  if (!(total > 0.0) || !stat.allFinite() || stat.minCoeff() < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "theta statistic must be nonnegative, finite and not all zero");
  }
  return stat.cwiseMax(kStatFloor * total);
}

}  // namespace

double abs_determinant(const Matrix& theta) {
  const Eigen::PartialPivLU<Matrix> lu(theta);
  double log_abs = 0.0;
  const auto diag = lu.matrixLU().diagonal();
  for (Index i = 0; i < diag.size(); ++i) {
    if (diag(i) == 0.0) return 0.0;
    log_abs += std::log(std::abs(diag(i)));
  }
  return std::exp(log_abs);
}

Matrix determinant_gradient(const Matrix& theta) {
  const Index k = theta.rows();
  const Eigen::PartialPivLU<Matrix> lu(theta);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxCondition >= 1.0)) return Matrix::Zero(k, k);
  return abs_determinant(theta) * lu.inverse().transpose();
}

double theta_objective(const Matrix& theta, const Matrix& stat, const Matrix& xi,
                       double lambda) {
  return -(stat.array() * theta.array().log()).sum() + lambda * (xi.array() * theta.array()).sum();
}

Matrix theta_objective_gradient(const Matrix& theta, const Matrix& stat, const Matrix& xi,
                                double lambda) {
  return -stat.cwiseQuotient(theta) + lambda * xi;
}

double theta_constraint_residual(const Matrix& theta) {
  const double mass = std::abs(theta.sum() - 1.0);
  const double balance =
      (theta.rowwise().sum() - theta.colwise().sum().transpose()).cwiseAbs().maxCoeff();
  return std::max(mass, balance);
}

NewtonState newton_direction(const Matrix& theta, const Matrix& stat, const Matrix& xi,
                             double lambda) {
  const Index k = theta.rows();
  NewtonState st;
  st.Xi = xi;
  st.G = stat.cwiseQuotient(theta) - lambda * xi;
  st.R = theta.cwiseProduct(theta).cwiseQuotient(stat);

  const Vector r_rows = st.R.rowwise().sum();
  const Vector r_cols = st.R.colwise().sum().transpose();
  Matrix h_full(k + 1, k + 1);
  h_full(0, 0) = st.R.sum();
  h_full.block(1, 0, k, 1) = r_rows - r_cols;
  h_full.block(0, 1, 1, k) = (r_rows - r_cols).transpose();
  h_full.block(1, 1, k, k) = Matrix((r_rows + r_cols).asDiagonal()) - st.R - st.R.transpose();

  const Matrix rg = st.R.cwiseProduct(st.G);
  Vector g_full(k + 1);
  g_full(0) = rg.sum();
  g_full.tail(k) = rg.rowwise().sum() - rg.colwise().sum().transpose();

  // The last balance constraint is implied by the others.
  st.H = h_full.topLeftCorner(k, k);
  st.g = g_full.head(k);
  const Eigen::LLT<Matrix> llt(st.H);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularKKT, "reduced Newton system is not positive definite");
  }
  st.d = llt.solve(st.g);
  if (!st.d.allFinite()) {
    throw Error(ErrorCode::SingularKKT, "reduced Newton system produced non-finite multipliers");
  }

  const double d0 = st.d(0);
  Vector dt = Vector::Zero(k);
  dt.head(k - 1) = st.d.tail(k - 1);
  Matrix lifted = Matrix::Constant(k, k, d0);
  lifted.colwise() += dt;
  lifted.rowwise() -= dt.transpose();

  st.delta = st.R.cwiseProduct(st.G - lifted);
  st.decrement_sq = st.delta.cwiseProduct(st.delta).cwiseQuotient(st.R).sum();
  return st;
}

ThetaNewtonResult theta_newton(const ThetaMatrix& start, const Matrix& stat, double lambda,
                               const NewtonOptions& opts) {
  return theta_newton(start, stat, determinant_gradient(start.matrix()), lambda, opts);
}

ThetaNewtonResult theta_newton(const ThetaMatrix& start, const Matrix& stat, const Matrix& xi,
                               double lambda, const NewtonOptions& opts) {
  const Index k = start.states();
  if (stat.rows() != k || stat.cols() != k || xi.rows() != k || xi.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "theta, statistic and Xi must all be K x K");
  }
  Matrix theta = start.matrix();
  if (!(theta.minCoeff() > 0.0)) {
    throw Error(ErrorCode::NonFeasibleStart, "Newton start must be strictly positive");
  }
  if (theta_constraint_residual(theta) > ThetaMatrix::kBalanceTolerance) {
    throw Error(ErrorCode::NonFeasibleStart,
                fmt::format("Newton start violates the equality constraints by {:.3g}",
                            theta_constraint_residual(theta)));
  }
  const Matrix s = floor_statistic(stat);

  ThetaNewtonResult out{start, 0, 0.0, {}, {}};
  double f = theta_objective(theta, s, xi, lambda);
  out.objective_trace.push_back(f);
  for (int it = 0; it < opts.max_iters; ++it) {
    const NewtonState st = newton_direction(theta, s, xi, lambda);
    out.decrement_sq = st.decrement_sq;
    if (0.5 * st.decrement_sq <= opts.tol) break;

    double t = 1.0;
    while ((theta + t * st.delta).minCoeff() <= 0.0) t *= opts.armijo_beta;
    double f_new = theta_objective(theta + t * st.delta, s, xi, lambda);
    while (f_new > f - opts.armijo_c * t * st.decrement_sq) {
      t *= opts.armijo_beta;
      if (t < 1e-20) break;
      f_new = theta_objective(theta + t * st.delta, s, xi, lambda);
    }
    if (!(f_new <= f)) break;  // no progress possible at working precision
    theta += t * st.delta;
    f = f_new;
    out.iterations = it + 1;
    out.objective_trace.push_back(f);
    out.constraint_residuals.push_back(theta_constraint_residual(theta));
  }
  out.theta = ThetaMatrix(std::move(theta));
  return out;
}

}  // namespace pairhmm
