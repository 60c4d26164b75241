#include "pairhmm/hmm_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/rng.hpp"

namespace pairhmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_tokens(const Hmm& hmm, const ObservationSequence& seq) {
  const auto n = hmm.symbols();
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t] < 0 || seq[t] >= n) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("token {} at position {} is outside the alphabet [0, {})", seq[t],
                              t, n));
    }
  }
}

std::vector<double> cumulative(const auto& probs) {
  std::vector<double> c(static_cast<std::size_t>(probs.size()));
  double acc = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    c[static_cast<std::size_t>(i)] = acc;
  }
  return c;
}

Matrix random_stochastic_rows(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.exponential();
  return normalize_rows(std::move(m));
}

}  // namespace

StateDistribution stationary_distribution(const TransitionMatrix& p) {
  constexpr int kMaxIters = 100000;
  constexpr double kTol = 1e-12;
  const Index k = p.states();
  // Iterate every starting state at once (rows of P^t). The chain is ergodic
  // iff all rows agree in the limit; reducible chains keep distinct rows and
  // periodic ones oscillate, so both exhaust the iteration budget.
  Matrix rows = p.matrix();
  for (int it = 0; it < kMaxIters; ++it) {
    const double spread =
        (rows.colwise().maxCoeff() - rows.colwise().minCoeff()).maxCoeff();
    if (spread < kTol) {
      Vector pi = rows.colwise().mean().transpose();
      // Polish with a direct solve of πᵀ(P - I) = 0, Σπ = 1.
      Matrix a = p.matrix().transpose() - Matrix::Identity(k, k);
      a.row(k - 1).setOnes();
      Vector rhs = Vector::Zero(k);
      rhs(k - 1) = 1.0;
      const Vector solved = a.fullPivLu().solve(rhs);
      if (solved.allFinite() && (solved - pi).lpNorm<1>() < 1e-8) pi = solved;
      pi = pi.cwiseMax(0.0);
      pi /= pi.sum();
      return StateDistribution(std::move(pi));
    }
    rows = rows * p.matrix();
    rows = normalize_rows(std::move(rows));
  }
  throw Error(ErrorCode::NonErgodic,
              fmt::format("power iteration did not converge in {} sweeps", kMaxIters));
}

SampledPath sample_path(const Hmm& hmm, std::size_t length, std::uint64_t seed) {
  const Index k = hmm.states();
  Rng rng(seed);
  const auto init_cdf = cumulative(hmm.initial.vector());
  std::vector<std::vector<double>> trans_cdf, emit_cdf;
  trans_cdf.reserve(static_cast<std::size_t>(k));
  emit_cdf.reserve(static_cast<std::size_t>(k));
  for (Index s = 0; s < k; ++s) {
    trans_cdf.push_back(cumulative(hmm.transition.matrix().row(s).transpose()));
    emit_cdf.push_back(cumulative(hmm.emission.matrix().col(s)));
  }

  SampledPath out;
  out.tokens.resize(length);
  out.states.resize(length);
  if (length == 0) return out;
  auto state = rng.categorical(init_cdf);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = rng.categorical(trans_cdf[state]);
    out.states[t] = static_cast<int>(state);
    out.tokens[t] = static_cast<int>(rng.categorical(emit_cdf[state]));
  }
  return out;
}

ObservationSequence sample_sequence(const Hmm& hmm, std::size_t length, std::uint64_t seed) {
  return sample_path(hmm, length, seed).tokens;
}

double forward_log_likelihood(const Hmm& hmm, const ObservationSequence& seq) {
  check_tokens(hmm, seq);
  if (seq.empty()) return 0.0;
  const Matrix& p = hmm.transition.matrix();
  const Matrix& m = hmm.emission.matrix();

  Vector alpha = hmm.initial.vector().cwiseProduct(m.row(seq[0]).transpose());
  double log_lik = 0.0;
  for (std::size_t t = 0;; ++t) {
    const double c = alpha.sum();
    if (!(c > 0.0)) return kNegInf;
    alpha /= c;
    log_lik += std::log(c);
    if (t + 1 == seq.size()) break;
    alpha = (p.transpose() * alpha).cwiseProduct(m.row(seq[t + 1]).transpose());
  }
  return log_lik;
}

std::vector<int> viterbi(const Hmm& hmm, const ObservationSequence& seq) {
  check_tokens(hmm, seq);
  if (seq.empty()) return {};
  const Index k = hmm.states();
  const std::size_t len = seq.size();
  const Matrix log_p = hmm.transition.matrix().array().log().matrix();
  const Matrix log_m = hmm.emission.matrix().array().log().matrix();

  Vector score = hmm.initial.vector().array().log().matrix() + log_m.row(seq[0]).transpose();
  std::vector<int> back(len * static_cast<std::size_t>(k), 0);
  Vector next(k);
  for (std::size_t t = 1; t < len; ++t) {
    for (Index j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (Index i = 0; i < k; ++i) {
        const double v = score(i) + log_p(i, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      next(j) = best + log_m(seq[t], j);
      back[t * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)] = arg;
    }
    score.swap(next);
  }

  double best = kNegInf;
  int state = -1;
  for (Index j = 0; j < k; ++j) {
    if (score(j) > best) {
      best = score(j);
      state = static_cast<int>(j);
    }
  }
  if (state < 0) {
    throw Error(ErrorCode::ImpossibleSequence, "sequence has probability zero under the model");
  }
  std::vector<int> path(len);
  path[len - 1] = state;
  for (std::size_t t = len - 1; t > 0; --t) {
    state = back[t * static_cast<std::size_t>(k) + static_cast<std::size_t>(state)];
    path[t - 1] = state;
  }
  return path;
}

double path_log_probability(const Hmm& hmm, const ObservationSequence& seq,
                            const std::vector<int>& path) {
  if (path.size() != seq.size()) {
    throw Error(ErrorCode::DimensionMismatch, "path and sequence lengths differ");
  }
  check_tokens(hmm, seq);
  if (seq.empty()) return 0.0;
  double lp = std::log(hmm.initial(path[0])) + std::log(hmm.emission(seq[0], path[0]));
  for (std::size_t t = 1; t < seq.size(); ++t) {
    lp += std::log(hmm.transition(path[t - 1], path[t])) + std::log(hmm.emission(seq[t], path[t]));
  }
  return lp;
}

BaumWelchResult baum_welch(const std::vector<ObservationSequence>& seqs,
                           const BaumWelchOptions& opts) {
  if (opts.states < 1) throw Error(ErrorCode::InvalidArgument, "Baum-Welch needs K >= 1");
  int max_token = -1;
  bool has_pair = false;
  for (const auto& s : seqs) {
    has_pair = has_pair || s.size() >= 2;
    for (int y : s) {
      if (y < 0) throw Error(ErrorCode::DimensionMismatch, "negative token");
      max_token = std::max(max_token, y);
    }
  }
  if (!has_pair) {
    throw Error(ErrorCode::SequenceTooShort, "Baum-Welch needs a sequence of length >= 2");
  }
  const int n_symbols = opts.symbols.value_or(max_token + 1);
  if (max_token >= n_symbols) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("token {} is outside the declared alphabet of size {}", max_token,
                            n_symbols));
  }

  const Index k = opts.states;
  const Index n = n_symbols;
  Rng rng(opts.seed);
  Matrix p = random_stochastic_rows(k, k, rng);
  Matrix m = random_stochastic_rows(k, n, rng).transpose();
  Vector init = Vector::Constant(k, 1.0 / static_cast<double>(k));

  BaumWelchResult result{Hmm(TransitionMatrix(p), EmissionMatrix(m), StateDistribution(init)),
                         {}, 0};
  double prev = kNegInf;
  std::vector<Vector> alpha, beta;
  std::vector<double> scale;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Matrix trans_acc = Matrix::Zero(k, k);
    Matrix emit_acc = Matrix::Zero(n, k);
    Vector init_acc = Vector::Zero(k);
    double log_lik = 0.0;

    for (const auto& seq : seqs) {
      const std::size_t len = seq.size();
      if (len == 0) continue;
      alpha.assign(len, Vector(k));
      beta.assign(len, Vector(k));
      scale.assign(len, 0.0);

      alpha[0] = init.cwiseProduct(m.row(seq[0]).transpose());
      for (std::size_t t = 0; t < len; ++t) {
        if (t > 0) alpha[t] = (p.transpose() * alpha[t - 1]).cwiseProduct(m.row(seq[t]).transpose());
        scale[t] = alpha[t].sum();
        if (!(scale[t] > 0.0)) {
          throw Error(ErrorCode::NumericalBreakdown,
                      "forward pass hit a zero-probability prefix during EM");
        }
        alpha[t] /= scale[t];
        log_lik += std::log(scale[t]);
      }
      beta[len - 1].setOnes();
      for (std::size_t t = len - 1; t > 0; --t) {
        beta[t - 1] = p * beta[t].cwiseProduct(m.row(seq[t]).transpose()) / scale[t];
      }
      for (std::size_t t = 0; t < len; ++t) {
        const Vector gamma = alpha[t].cwiseProduct(beta[t]);
        emit_acc.row(seq[t]) += gamma.transpose();
        if (t == 0) init_acc += gamma;
        if (t + 1 < len) {
          const Vector right = beta[t + 1].cwiseProduct(m.row(seq[t + 1]).transpose());
          trans_acc.noalias() += (alpha[t] * right.transpose()).cwiseProduct(p) / scale[t + 1];
        }
      }
    }

    result.log_likelihood_trace.push_back(log_lik);
    result.iterations = iter + 1;
    const bool done =
        iter > 0 && (log_lik - prev) <= opts.relative_tol * std::abs(prev);
    prev = log_lik;

    // Rows or columns with no expected counts keep their previous values.
    for (Index i = 0; i < k; ++i) {
      const double s = trans_acc.row(i).sum();
      if (s > 0.0) p.row(i) = trans_acc.row(i) / s;
      const double e = emit_acc.col(i).sum();
      if (e > 0.0) m.col(i) = emit_acc.col(i) / e;
    }
    init = init_acc / init_acc.sum();
    p = normalize_rows(std::move(p));
    m = normalize_columns(std::move(m));
    result.hmm = Hmm(TransitionMatrix(p), EmissionMatrix(m), StateDistribution(init));
    if (done) break;
  }
  return result;
}

}  // namespace pairhmm
