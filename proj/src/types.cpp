#include "pairhmm/types.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pairhmm/error.hpp"

namespace pairhmm {
namespace {

void require_nonnegative_finite(const Matrix& m, const char* what) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("{} entry ({}, {}) = {} is not a nonnegative finite value", what,
                                i, j, v));
      }
    }
  }
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix p) : p_(std::move(p)) {
  if (p_.rows() != p_.cols() || p_.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("transition matrix must be square and non-empty, got {}x{}",
                            p_.rows(), p_.cols()));
  }
  require_nonnegative_finite(p_, "transition");
  for (Index k = 0; k < p_.rows(); ++k) {
    const double s = p_.row(k).sum();
    if (std::abs(s - 1.0) > kRowTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("transition row {} sums to {:.17g}", k, s));
    }
  }
}

EmissionMatrix::EmissionMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.cols() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "emission matrix is empty");
  }
  require_nonnegative_finite(m_, "emission");
  for (Index k = 0; k < m_.cols(); ++k) {
    const double s = m_.col(k).sum();
    if (std::abs(s - 1.0) > kColumnTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("emission column {} sums to {:.17g}", k, s));
    }
  }
}

StateDistribution::StateDistribution(Vector p) : p_(std::move(p)) {
  if (p_.size() == 0) throw Error(ErrorCode::ShapeMismatch, "empty state distribution");
  require_nonnegative_finite(p_, "state distribution");
  if (std::abs(p_.sum() - 1.0) > 1e-10) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("state distribution sums to {:.17g}", p_.sum()));
  }
}

ThetaMatrix::ThetaMatrix(Matrix theta) : theta_(std::move(theta)) {
  if (theta_.rows() != theta_.cols() || theta_.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "theta must be square and non-empty");
  }
  require_nonnegative_finite(theta_, "theta");
  if (std::abs(theta_.sum() - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("theta total mass is {:.17g}", theta_.sum()));
  }
  const double imbalance =
      (theta_.rowwise().sum() - theta_.colwise().sum().transpose()).cwiseAbs().maxCoeff();
  if (imbalance > kBalanceTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("theta row and column margins differ by {:.3g}", imbalance));
  }
}

CooccurrenceMatrix::CooccurrenceMatrix(Matrix omega) : omega_(std::move(omega)) {
  if (omega_.rows() != omega_.cols() || omega_.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "co-occurrence matrix must be square and non-empty");
  }
  require_nonnegative_finite(omega_, "co-occurrence");
  if (std::abs(omega_.sum() - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("co-occurrence total mass is {:.17g}", omega_.sum()));
  }
}

TripleTensor::TripleTensor(std::vector<Matrix> slices) : slices_(std::move(slices)) {
  const auto n = static_cast<Index>(slices_.size());
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "empty triple tensor");
  double total = 0.0;
  for (const Matrix& s : slices_) {
    if (s.rows() != n || s.cols() != n) {
      throw Error(ErrorCode::ShapeMismatch, "triple tensor slices must be N x N");
    }
    require_nonnegative_finite(s, "triple tensor");
    total += s.sum();
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("triple tensor total mass is {:.17g}", total));
  }
}

Matrix TripleTensor::marginalize_first() const {
  Matrix out = Matrix::Zero(symbols(), symbols());
  for (const Matrix& s : slices_) out += s;
  return out;
}

Hmm::Hmm(TransitionMatrix p, EmissionMatrix m, StateDistribution init)
    : transition(std::move(p)), emission(std::move(m)), initial(std::move(init)) {
  if (transition.states() != emission.states() || transition.states() != initial.states()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("state counts disagree: transition {}, emission {}, initial {}",
                            transition.states(), emission.states(), initial.states()));
  }
}

Matrix normalize_columns(Matrix m) {
  for (Index k = 0; k < m.cols(); ++k) {
    const double s = m.col(k).sum();
    if (s > 0.0) m.col(k) /= s;
  }
  return m;
}

Matrix normalize_rows(Matrix m) {
  for (Index k = 0; k < m.rows(); ++k) {
    const double s = m.row(k).sum();
    if (s > 0.0) m.row(k) /= s;
  }
  return m;
}

}  // namespace pairhmm
