#include "pairhmm/geometry.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/rng.hpp"

namespace pairhmm {

ScatterReport check_scattered_necessary(const EmissionMatrix& m, double zero_tol) {
  const Matrix& mat = m.matrix();
  const Index k = mat.cols();
  ScatterReport report;
  report.min_required = static_cast<int>(k) - 1;
  report.column_zero_counts.assign(static_cast<std::size_t>(k), 0);
  for (Index j = 0; j < k; ++j) {
    int zeros = 0;
    for (Index i = 0; i < mat.rows(); ++i) zeros += mat(i, j) < zero_tol ? 1 : 0;
    report.column_zero_counts[static_cast<std::size_t>(j)] = zeros;
  }
  report.passes_necessary = true;
  for (int c : report.column_zero_counts) {
    report.passes_necessary = report.passes_necessary && c >= report.min_required;
  }

  std::vector<bool> anchored(static_cast<std::size_t>(k), false);
  for (Index i = 0; i < mat.rows(); ++i) {
    const double s = mat.row(i).sum();
    if (!(s > 0.0)) continue;
    const Eigen::RowVectorXd row = mat.row(i) / s;
    Index arg = 0;
    row.maxCoeff(&arg);
    Eigen::RowVectorXd dev = row;
    dev(arg) -= 1.0;
    if (dev.cwiseAbs().maxCoeff() <= zero_tol) anchored[static_cast<std::size_t>(arg)] = true;
  }
  report.separable = true;
  for (bool a : anchored) report.separable = report.separable && a;
  return report;
}

double volume_ratio(int k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "volume ratio needs K >= 2");
  const double kd = static_cast<double>(k);
  const double pi = std::numbers::pi;
  const double log_ratio = -0.5 * std::log(pi * kd) +
                           0.5 * (kd - 1.0) * std::log(4.0 * pi / (kd * (kd - 1.0))) +
                           std::lgamma(0.5 * kd);
  return std::exp(log_ratio);
}

EmissionMatrix generate_scattered_emission(int n, int k, EmissionMode mode, std::uint64_t seed) {
  if (k < 1 || n < k) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("need N >= K >= 1, got N={} K={}", n, k));
  }
  Rng rng(seed);
  Matrix m(n, k);
  switch (mode) {
    case EmissionMode::Sparse50:
      for (Index j = 0; j < k; ++j) {
        do {
          for (Index i = 0; i < n; ++i) {
            const double v = rng.exponential();
            m(i, j) = rng.uniform() < 0.5 ? 0.0 : v;
          }
        } while (!(m.col(j).sum() > 0.0));
      }
      break;
    case EmissionMode::IdentityTop:
      for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n; ++i) m(i, j) = rng.exponential();
      m.topRows(k).setIdentity();
      break;
  }
  return EmissionMatrix(normalize_columns(std::move(m)));
}

TransitionMatrix generate_random_transition(int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "need K >= 1");
  Rng rng(seed);
  Matrix p(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) p(i, j) = rng.exponential();
  return TransitionMatrix(normalize_rows(std::move(p)));
}

}  // namespace pairhmm
