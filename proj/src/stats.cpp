#include "pairhmm/stats.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/hmm_core.hpp"

namespace pairhmm {
namespace {

void check_alphabet(const ObservationSequence& seq, int symbols) {
  if (symbols <= 0) throw Error(ErrorCode::InvalidArgument, "alphabet size must be positive");
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t] < 0 || seq[t] >= symbols) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("token {} at position {} is outside [0, {})", seq[t], t, symbols));
    }
  }
}

std::span<const double> as_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

PairCounts::PairCounts(int symbols) : symbols_(symbols) {
  if (symbols <= 0) throw Error(ErrorCode::InvalidArgument, "alphabet size must be positive");
}

void PairCounts::add_sequence(const ObservationSequence& seq, PairWindow window) {
  check_alphabet(seq, symbols_);
  const std::size_t first = window == PairWindow::All ? 0 : 1;
  for (std::size_t t = first; t + 1 < seq.size(); ++t) {
    ++counts_[{seq[t], seq[t + 1]}];
    ++total_;
  }
}

void PairCounts::merge(const PairCounts& other) {
  if (other.symbols_ != symbols_) {
    throw Error(ErrorCode::DimensionMismatch, "cannot merge counts over different alphabets");
  }
  for (const auto& [key, c] : other.counts_) counts_[key] += c;
  total_ += other.total_;
}

CooccurrenceMatrix PairCounts::normalized() const {
  if (total_ == 0) throw Error(ErrorCode::NoPairs, "no consecutive pairs were counted");
  Matrix omega = Matrix::Zero(symbols_, symbols_);
  const double denom = static_cast<double>(total_);
  for (const auto& [key, c] : counts_) omega(key.first, key.second) = static_cast<double>(c) / denom;
  return CooccurrenceMatrix(std::move(omega));
}

CooccurrenceMatrix estimate_pairwise(const ObservationSequence& seq, int symbols,
                                     PairWindow window) {
  const std::size_t needed = window == PairWindow::All ? 2 : 3;
  if (seq.size() < needed) {
    throw Error(ErrorCode::SequenceTooShort,
                fmt::format("need at least {} tokens, got {}", needed, seq.size()));
  }
  PairCounts counts(symbols);
  counts.add_sequence(seq, window);
  return counts.normalized();
}

TripleTensor estimate_triple(const ObservationSequence& seq, int symbols) {
  if (seq.size() < 3) {
    throw Error(ErrorCode::SequenceTooShort,
                fmt::format("need at least 3 tokens, got {}", seq.size()));
  }
  check_alphabet(seq, symbols);
  std::map<std::tuple<int, int, int>, std::uint64_t> counts;
  for (std::size_t t = 1; t + 1 < seq.size(); ++t) ++counts[{seq[t - 1], seq[t], seq[t + 1]}];
  const double denom = static_cast<double>(seq.size() - 2);
  std::vector<Matrix> slices(static_cast<std::size_t>(symbols), Matrix::Zero(symbols, symbols));
  for (const auto& [key, c] : counts) {
    const auto [n, i, j] = key;
    slices[static_cast<std::size_t>(n)](i, j) = static_cast<double>(c) / denom;
  }
  return TripleTensor(std::move(slices));
}

ThetaMatrix theta_from_transition(const TransitionMatrix& p) {
  const Vector pi = stationary_distribution(p).vector();
  Matrix theta = pi.asDiagonal() * p.matrix();
  theta /= theta.sum();
  return ThetaMatrix(std::move(theta));
}

TransitionMatrix transition_from_theta(const ThetaMatrix& theta) {
  return transition_from_joint(theta.matrix());
}

TransitionMatrix transition_from_joint(const Matrix& joint) {
  Matrix p = joint;
  for (Index k = 0; k < p.rows(); ++k) {
    const double s = p.row(k).sum();
    if (!(s > 0.0)) {
      throw Error(ErrorCode::ZeroRow, fmt::format("joint matrix row {} has no mass", k));
    }
    p.row(k) /= s;
  }
  return TransitionMatrix(std::move(p));
}

CooccurrenceMatrix exact_pairwise(const Hmm& hmm) {
  const ThetaMatrix theta = theta_from_transition(hmm.transition);
  const Matrix& m = hmm.emission.matrix();
  Matrix omega = m * theta.matrix() * m.transpose();
  omega /= omega.sum();
  return CooccurrenceMatrix(std::move(omega));
}

TripleTensor exact_triple(const Hmm& hmm) {
  const Matrix& p = hmm.transition.matrix();
  const Matrix& m = hmm.emission.matrix();
  const Vector pi = stationary_distribution(hmm.transition).vector();
  const Index n = hmm.symbols();
  const Index k = hmm.states();
  // before(:, b) = Σ_a π_a P_ab M(:, a); after(:, b) = Σ_c P_bc M(:, c).
  const Matrix before = m * pi.asDiagonal() * p;
  const Matrix after = m * p.transpose();
  std::vector<Matrix> slices(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  for (Index s = 0; s < n; ++s) {
    Matrix& slice = slices[static_cast<std::size_t>(s)];
    for (Index b = 0; b < k; ++b) {
      slice.noalias() += before(s, b) * m.col(b) * after.col(b).transpose();
    }
  }
  double total = 0.0;
  for (const Matrix& s : slices) total += s.sum();
  for (Matrix& s : slices) s /= total;
  return TripleTensor(std::move(slices));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("distributions have {} and {} entries", p.size(), q.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("distributions have {} and {} entries", p.size(), q.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "matrices differ in shape");
  }
  return kl_divergence(as_span(p), as_span(q));
}

double tv_distance(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "matrices differ in shape");
  }
  return tv_distance(as_span(p), as_span(q));
}

double kl_divergence(const TripleTensor& p, const TripleTensor& q) {
  if (p.symbols() != q.symbols()) throw Error(ErrorCode::ShapeMismatch, "tensors differ in shape");
  double acc = 0.0;
  for (Index n = 0; n < p.symbols(); ++n) acc += kl_divergence(p.slice(n), q.slice(n));
  return acc;
}

double tv_distance(const TripleTensor& p, const TripleTensor& q) {
  if (p.symbols() != q.symbols()) throw Error(ErrorCode::ShapeMismatch, "tensors differ in shape");
  double acc = 0.0;
  for (Index n = 0; n < p.symbols(); ++n) acc += tv_distance(p.slice(n), q.slice(n));
  return acc;
}

}  // namespace pairhmm
