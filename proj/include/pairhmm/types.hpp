#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pairhmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Token ids in [0, N). One-hot encodings are never materialized.
using ObservationSequence = std::vector<int>;

/// K x K row-stochastic matrix Pr[X_{t+1} | X_t].
class TransitionMatrix {
 public:
  static constexpr double kRowTolerance = 1e-12;

  explicit TransitionMatrix(Matrix p);

  const Matrix& matrix() const noexcept { return p_; }
  Index states() const noexcept { return p_.rows(); }
  double operator()(Index from, Index to) const { return p_(from, to); }

 private:
  Matrix p_;
};

/// N x K column-stochastic matrix Pr[Y | X].
class EmissionMatrix {
 public:
  static constexpr double kColumnTolerance = 1e-12;

  explicit EmissionMatrix(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  Index symbols() const noexcept { return m_.rows(); }
  Index states() const noexcept { return m_.cols(); }
  double operator()(Index symbol, Index state) const { return m_(symbol, state); }

 private:
  Matrix m_;
};

/// Probability vector over hidden states.
class StateDistribution {
 public:
  explicit StateDistribution(Vector p);

  const Vector& vector() const noexcept { return p_; }
  Index states() const noexcept { return p_.size(); }
  double operator()(Index k) const { return p_(k); }

 private:
  Vector p_;
};

/// K x K joint Pr[X_t, X_{t+1}]: nonnegative, total mass 1, equal margins.
class ThetaMatrix {
 public:
  static constexpr double kMassTolerance = 1e-10;
  static constexpr double kBalanceTolerance = 1e-8;

  explicit ThetaMatrix(Matrix theta);

  const Matrix& matrix() const noexcept { return theta_; }
  Index states() const noexcept { return theta_.rows(); }
  /// Row margins Θ1 (equal to the column margins).
  Vector margins() const { return theta_.rowwise().sum(); }

 private:
  Matrix theta_;
};

/// N x N joint Pr[Y_t, Y_{t+1}]: nonnegative, total mass 1.
class CooccurrenceMatrix {
 public:
  static constexpr double kMassTolerance = 1e-10;

  explicit CooccurrenceMatrix(Matrix omega);

  const Matrix& matrix() const noexcept { return omega_; }
  Index symbols() const noexcept { return omega_.rows(); }

 private:
  Matrix omega_;
};

/// N x N x N joint Pr[Y_{t-1}, Y_t, Y_{t+1}], stored as N slices along the
/// first mode: slice(n)(i, j) = Pr[Y_{t-1}=n, Y_t=i, Y_{t+1}=j].
class TripleTensor {
 public:
  explicit TripleTensor(std::vector<Matrix> slices);

  Index symbols() const noexcept { return static_cast<Index>(slices_.size()); }
  const Matrix& slice(Index n) const { return slices_[static_cast<std::size_t>(n)]; }
  double operator()(Index n, Index i, Index j) const { return slice(n)(i, j); }
  /// Σ_n T(n, i, j).
  Matrix marginalize_first() const;

 private:
  std::vector<Matrix> slices_;
};

struct Hmm {
  Hmm(TransitionMatrix transition, EmissionMatrix emission, StateDistribution initial);

  TransitionMatrix transition;
  EmissionMatrix emission;
  StateDistribution initial;

  Index states() const noexcept { return transition.states(); }
  Index symbols() const noexcept { return emission.symbols(); }
};

/// Rescales each column to sum to one. Columns summing to zero are left as is.
Matrix normalize_columns(Matrix m);
/// Rescales each row to sum to one. Rows summing to zero are left as is.
Matrix normalize_rows(Matrix m);

}  // namespace pairhmm
