#include "pairhmm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/rng.hpp"

namespace pairhmm {
namespace {

constexpr double kReconstructionFloor = 1e-300;
constexpr double kInitFloor = 1e-6;
constexpr std::uint64_t kInitStream = 11;

void check_square(const Matrix& omega) {
  if (omega.rows() != omega.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "co-occurrence matrix must be square");
  }
}

void check_dims(const Matrix& omega, const Matrix& m, const Matrix& theta) {
  check_square(omega);
  if (m.rows() != omega.rows() || m.cols() != theta.rows() || theta.rows() != theta.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("incompatible shapes: Omega {}x{}, M {}x{}, Theta {}x{}",
                            omega.rows(), omega.cols(), m.rows(), m.cols(), theta.rows(),
                            theta.cols()));
  }
}

Matrix symmetrized(const Matrix& omega) { return 0.5 * (omega + omega.transpose()); }

// Rows of the symmetrized Ω scaled to sum to one; zero rows stay zero.
Matrix normalized_rows(const Matrix& omega) { return normalize_rows(symmetrized(omega)); }

// Equality-constraint operator of the Θ set with the redundant last balance
// row dropped: A vec(X) = [1ᵀX1, (X1 - Xᵀ1)_{0..K-2}].
Vector theta_constraint_apply(const Matrix& x) {
  const Index k = x.rows();
  Vector out(k);
  out(0) = x.sum();
  const Vector bal = x.rowwise().sum() - x.colwise().sum().transpose();
  out.tail(k - 1) = bal.head(k - 1);
  return out;
}

Matrix theta_constraint_adjoint(const Vector& w) {
  const Index k = w.size();
  Vector dt = Vector::Zero(k);
  dt.head(k - 1) = w.tail(k - 1);
  Matrix out = Matrix::Constant(k, k, w(0));
  out.colwise() += dt;
  out.rowwise() -= dt.transpose();
  return out;
}

Matrix theta_constraint_gram(Index k) {
  Matrix gram(k, k);
  for (Index i = 0; i < k; ++i) {
    Vector e = Vector::Zero(k);
    e(i) = 1.0;
    gram.col(i) = theta_constraint_apply(theta_constraint_adjoint(e));
  }
  return gram;
}

}  // namespace

void SolverOptions::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (max_outer_iters < 0) fail("max_outer_iters must be >= 0");
  if (!(outer_tol > 0.0)) fail("outer_tol must be > 0");
  if (newton_max_iters < 1) fail("newton_max_iters must be >= 1");
  if (!(newton_tol > 0.0)) fail("newton_tol must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0, 1)");
  if (!(armijo_beta > 0.0 && armijo_beta < 1.0)) fail("armijo_beta must lie in (0, 1)");
  if (!(min_alpha > 0.0 && min_alpha <= 1.0)) fail("min_alpha must lie in (0, 1]");
  if (warm_start_iters < 0) fail("warm_start_iters must be >= 0");
  if (init_method == InitMethod::Provided && !initial_emission) {
    fail("init_method=provided requires an initial emission matrix");
  }
}

Matrix reconstruct(const Matrix& m, const Matrix& theta) {
  return m * theta * m.transpose();
}

double loss(const Matrix& omega, const Matrix& m, const Matrix& theta, double lambda) {
  check_dims(omega, m, theta);
  const Matrix recon = reconstruct(m, theta);
  double fit = 0.0;
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i < omega.rows(); ++i) {
      const double w = omega(i, j);
      if (w == 0.0) continue;
      fit -= w * std::log(std::max(recon(i, j), kReconstructionFloor));
    }
  }
  return fit + lambda * abs_determinant(theta);
}

double reconstruction_kl(const Matrix& omega, const Matrix& m, const Matrix& theta) {
  double entropy = 0.0;
  for (Index j = 0; j < omega.cols(); ++j)
    for (Index i = 0; i < omega.rows(); ++i)
      if (omega(i, j) > 0.0) entropy -= omega(i, j) * std::log(omega(i, j));
  return loss(omega, m, theta, 0.0) - entropy;
}

Matrix ratio_matrix(const Matrix& omega, const Matrix& m, const Matrix& theta) {
  check_dims(omega, m, theta);
  const Matrix recon = reconstruct(m, theta);
  Matrix out = Matrix::Zero(omega.rows(), omega.cols());
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i < omega.rows(); ++i) {
      const double w = omega(i, j);
      if (w == 0.0) continue;
      if (!(recon(i, j) > 0.0)) {
        throw Error(ErrorCode::NumericalBreakdown,
                    fmt::format("reconstruction vanishes at ({}, {}) where Omega = {}", i, j, w));
      }
      out(i, j) = w / recon(i, j);
    }
  }
  return out;
}

LossGradient loss_gradient(const Matrix& omega, const Matrix& m, const Matrix& theta,
                           double lambda) {
  const Matrix ot = ratio_matrix(omega, m, theta);
  LossGradient g;
  g.dM = -(ot * m * theta.transpose() + ot.transpose() * m * theta);
  g.dTheta = -(m.transpose() * ot * m) + lambda * determinant_gradient(theta);
  return g;
}

Vector project_to_simplex(const Vector& v) {
  const Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double shift = 0.0;
  for (Index i = 0; i < n; ++i) {
    cumsum += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).cwiseMax(0.0).matrix();
}

Matrix project_to_theta_set(const Matrix& v) {
  const Index k = v.rows();
  const Eigen::LLT<Matrix> gram(theta_constraint_gram(k));
  Vector target = Vector::Zero(k);
  target(0) = 1.0;
  auto to_affine = [&](const Matrix& x) -> Matrix {
    const Vector w = gram.solve(theta_constraint_apply(x) - target);
    return x - theta_constraint_adjoint(w);
  };

  // Dykstra alternation between the affine constraint set and the orthant.
  Matrix x = v;
  Matrix p = Matrix::Zero(k, k);
  Matrix q = Matrix::Zero(k, k);
  for (int it = 0; it < 200000; ++it) {
    const Matrix y = to_affine(x + p);
    p = x + p - y;
    const Matrix next = (y + q).cwiseMax(0.0);
    q = y + q - next;
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change < 1e-16 && theta_constraint_residual(x) < 1e-14) break;
  }
  return x;
}

double stationarity_residual(const Matrix& omega, const Matrix& m, const Matrix& theta,
                             double lambda) {
  const LossGradient g = loss_gradient(omega, m, theta, lambda);
  double acc = 0.0;
  for (Index k = 0; k < m.cols(); ++k) {
    const Vector col = m.col(k);
    acc += (col - project_to_simplex(col - g.dM.col(k))).squaredNorm();
  }
  acc += (theta - project_to_theta_set(theta - g.dTheta)).squaredNorm();
  return std::sqrt(acc);
}

std::vector<int> spa_select(const Matrix& omega, int k) {
  check_square(omega);
  if (k < 1 || k > omega.rows()) {
    throw Error(ErrorCode::KTooLarge, fmt::format("cannot select {} of {} rows", k, omega.rows()));
  }
  Matrix resid = normalized_rows(omega);
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (int step = 0; step < k; ++step) {
    const Vector norms = resid.rowwise().squaredNorm();
    Index best = 0;
    for (Index i = 1; i < norms.size(); ++i)
      if (norms(i) > norms(best)) best = i;
    picked.push_back(static_cast<int>(best));
    const double len = std::sqrt(norms(best));
    if (!(len > 0.0)) continue;
    const Vector u = resid.row(best).transpose() / len;
    resid -= (resid * u) * u.transpose();
  }
  return picked;
}

Vector nonnegative_least_squares(const Matrix& a, const Vector& b) {
  const Index n = a.cols();
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max(1.0, b.norm());

  auto solve_passive = [&]() {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Matrix sub(a.rows(), static_cast<Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Index>(c)) = a.col(idx[c]);
    const Vector zs = sub.colPivHouseholderQr().solve(b);
    Vector z = Vector::Zero(n);
    for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zs(static_cast<Index>(c));
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
    const Vector w = a.transpose() * (b - a * x);
    Index best = -1;
    for (Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) continue;
      if (w(j) > tol && (best < 0 || w(j) > w(best))) best = j;
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
      const Vector z = solve_passive();
      bool feasible = true;
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || z(j) > 0.0) continue;
        feasible = false;
        const double denom = x(j) - z(j);
        if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
      }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

ThetaMatrix initial_theta(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  Matrix theta = Matrix::Identity(k, k) + Matrix::Ones(k, k);
  return ThetaMatrix(theta / static_cast<double>(k * (k + 1)));
}

Initialization initialize(const Matrix& omega, int k, const SolverOptions& opts) {
  check_square(omega);
  const Index n = omega.rows();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  if (k > n) throw Error(ErrorCode::KTooLarge, fmt::format("K = {} exceeds N = {}", k, n));

  Matrix m(n, k);
  std::vector<int> anchors;
  switch (opts.init_method) {
    case InitMethod::Spa: {
      anchors = spa_select(omega, k);
      const Matrix rows = normalized_rows(omega);
      const Vector mass = symmetrized(omega).rowwise().sum();
      Matrix basis(n, k);
      for (int c = 0; c < k; ++c) basis.col(c) = rows.row(anchors[static_cast<std::size_t>(c)]).transpose();
      for (Index i = 0; i < n; ++i) {
        if (!(mass(i) > 0.0)) {
          m.row(i).setZero();
          continue;
        }
        m.row(i) = nonnegative_least_squares(basis, rows.row(i).transpose()).transpose() * mass(i);
      }
      break;
    }
    case InitMethod::Random: {
      Rng rng(derive_seed(opts.seed, kInitStream));
      for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n; ++i) m(i, j) = rng.exponential();
      break;
    }
    case InitMethod::Provided: {
      if (!opts.initial_emission) {
        throw Error(ErrorCode::InvalidArgument, "no initial emission provided");
      }
      m = *opts.initial_emission;
      if (m.rows() != n || m.cols() != k) {
        throw Error(ErrorCode::DimensionMismatch,
                    fmt::format("provided emission is {}x{}, expected {}x{}", m.rows(), m.cols(),
                                n, k));
      }
      break;
    }
  }
  for (Index j = 0; j < k; ++j) {
    if (!(m.col(j).sum() > 0.0)) m.col(j).setOnes();
  }
  m = normalize_columns(std::move(m)).cwiseMax(kInitFloor);
  m = normalize_columns(std::move(m));
  return {EmissionMatrix(std::move(m)), initial_theta(k), std::move(anchors)};
}

ScaStep sca_step(const Matrix& omega, const Matrix& m, const ThetaMatrix& theta, double lambda,
                 const NewtonOptions& newton) {
  const Matrix& th = theta.matrix();
  ScaStep step;
  step.omega_tilde = ratio_matrix(omega, m, th);
  const Matrix& ot = step.omega_tilde;

  Matrix m_new = m.cwiseProduct(ot * m * th.transpose() + ot.transpose() * m * th);
  for (Index j = 0; j < m_new.cols(); ++j) {
    const double s = m_new.col(j).sum();
    if (!(s > 0.0)) {
      throw Error(ErrorCode::NumericalBreakdown,
                  fmt::format("emission column {} lost all mass in the update", j));
    }
    m_new.col(j) /= s;
  }
  step.M = std::move(m_new);

  const Matrix stat = th.cwiseProduct(m.transpose() * ot * m);
  const ThetaNewtonResult solved = theta_newton(theta, stat, lambda, newton);
  step.Theta = solved.theta.matrix();
  step.newton_iters = solved.iterations;
  return step;
}

ThetaFitResult fit_theta(const Matrix& omega, const Matrix& m, const ThetaMatrix& theta0,
                         double lambda, const ThetaFitOptions& opts) {
  Matrix theta = theta0.matrix();
  double f = loss(omega, m, theta, lambda);
  ThetaFitResult out{theta0, {f}, 0};
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix ot = ratio_matrix(omega, m, theta);
    const Matrix mom = m.transpose() * ot * m;
    const Matrix stat = theta.cwiseProduct(mom);
    const Matrix cand = theta_newton(ThetaMatrix(theta), stat, lambda, opts.newton).theta.matrix();
    const Matrix dir = cand - theta;
    const double slope = (-mom + lambda * determinant_gradient(theta)).cwiseProduct(dir).sum();
    if (!(slope < 0.0)) break;
    double alpha = 1.0;
    double f_new = f;
    bool accepted = false;
    while (alpha >= 0x1.0p-30) {
      f_new = loss(omega, m, theta + alpha * dir, lambda);
      if (f_new <= f + opts.newton.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opts.newton.armijo_beta;
    }
    if (!accepted) break;
    theta += alpha * dir;
    const double decrease = f - f_new;
    f = f_new;
    out.objective_trace.push_back(f);
    out.iterations = it;
    if (decrease <= opts.relative_tol * std::max(1.0, std::abs(f))) break;
  }
  out.theta = ThetaMatrix(std::move(theta));
  return out;
}

FitResult sca_solve(const CooccurrenceMatrix& omega_in, int k, const SolverOptions& opts) {
  opts.validate();
  const Matrix& omega = omega_in.matrix();
  Initialization init = initialize(omega, k, opts);
  Matrix m = init.M.matrix();
  Matrix theta = init.Theta.matrix();
  const NewtonOptions newton{opts.newton_max_iters, opts.newton_tol, opts.armijo_c,
                             opts.armijo_beta};

  std::vector<double> warm_trace;
  if (opts.warm_start_iters > 0 && k > 1) {
    ThetaFitOptions warm;
    warm.max_iters = opts.warm_start_iters;
    warm.relative_tol = opts.outer_tol;
    warm.newton = newton;
    ThetaFitResult fitted = fit_theta(omega, m, init.Theta, opts.lambda, warm);
    theta = fitted.theta.matrix();
    warm_trace = std::move(fitted.objective_trace);
    warm_trace.pop_back();  // re-pushed below as the joint phase's starting loss
  }

  FitResult out{init.M, init.Theta, std::move(warm_trace), {}, 0, false, false};
  double f = loss(omega, m, theta, opts.lambda);
  out.loss_trace.push_back(f);
  out.log.push_back({0, f, 0.0, 0});

  for (int it = 1; it <= opts.max_outer_iters; ++it) {
    const ScaStep step = sca_step(omega, m, ThetaMatrix(theta), opts.lambda, newton);
    const Matrix& ot = step.omega_tilde;
    const Matrix grad_m = -(ot * m * theta.transpose() + ot.transpose() * m * theta);
    const Matrix grad_theta =
        -(m.transpose() * ot * m) + opts.lambda * determinant_gradient(theta);
    const Matrix dir_m = step.M - m;
    const Matrix dir_theta = step.Theta - theta;
    const double slope = grad_m.cwiseProduct(dir_m).sum() + grad_theta.cwiseProduct(dir_theta).sum();
    if (!(slope < 0.0)) {
      out.converged = true;
      break;
    }

    double alpha = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    while (alpha >= opts.min_alpha) {
      f_new = loss(omega, m + alpha * dir_m, theta + alpha * dir_theta, opts.lambda);
      if (f_new <= f + opts.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opts.armijo_beta;
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }

    m += alpha * dir_m;
    theta += alpha * dir_theta;
    const double decrease = f - f_new;
    f = f_new;
    out.outer_iters = it;
    out.loss_trace.push_back(f);
    out.log.push_back({it, f, alpha, step.newton_iters});
    if (decrease <= opts.outer_tol * std::max(1.0, std::abs(f))) {
      out.converged = true;
      break;
    }
  }

  out.M = EmissionMatrix(normalize_columns(std::move(m)));
  out.Theta = ThetaMatrix(std::move(theta));
  return out;
}

NmfResult nmf_baseline(const CooccurrenceMatrix& omega_in, int k, std::uint64_t seed, int iters) {
  const Matrix& omega = omega_in.matrix();
  const Index n = omega.rows();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  if (k > n) throw Error(ErrorCode::KTooLarge, fmt::format("K = {} exceeds N = {}", k, n));
  Rng rng(derive_seed(seed, kInitStream));
  Matrix m(n, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = rng.exponential();
  m = normalize_columns(std::move(m));
  Matrix theta(k, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < k; ++i) theta(i, j) = rng.exponential();
  theta /= theta.sum();

  std::vector<double> trace{reconstruction_kl(omega, m, theta)};
  for (int it = 0; it < iters; ++it) {
    const Matrix ot = ratio_matrix(omega, m, theta);
    Matrix m_new = normalize_columns(
        m.cwiseProduct(ot * m * theta.transpose() + ot.transpose() * m * theta));
    Matrix theta_new = theta.cwiseProduct(m.transpose() * ot * m);
    theta_new /= theta_new.sum();
    m = std::move(m_new);
    theta = std::move(theta_new);
    trace.push_back(reconstruction_kl(omega, m, theta));
  }
  return {EmissionMatrix(normalize_columns(std::move(m))), std::move(theta), std::move(trace)};
}

}  // namespace pairhmm
