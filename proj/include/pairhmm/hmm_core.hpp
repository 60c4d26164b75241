#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pairhmm/types.hpp"

namespace pairhmm {

/// Stationary distribution of an ergodic chain by power iteration.
/// Throws NonErgodic when the iteration has not settled to 1e-12 (L1 change
/// between sweeps) within 1e5 sweeps.
StateDistribution stationary_distribution(const TransitionMatrix& p);

/// Draws `length` tokens. X_0 ~ initial, X_{t+1} ~ row X_t of P,
/// Y_t ~ column X_t of M, each by inverse CDF on one uniform draw.
ObservationSequence sample_sequence(const Hmm& hmm, std::size_t length, std::uint64_t seed);

/// Same draw, also returning the hidden path.
struct SampledPath {
  ObservationSequence tokens;
  std::vector<int> states;
};
SampledPath sample_path(const Hmm& hmm, std::size_t length, std::uint64_t seed);

/// log Pr[seq | hmm] from the scaled forward recursion. Returns -infinity
/// when some prefix has probability zero.
double forward_log_likelihood(const Hmm& hmm, const ObservationSequence& seq);

/// Most likely hidden path, ties broken toward the lower state index.
/// Throws ImpossibleSequence when every path has probability zero.
std::vector<int> viterbi(const Hmm& hmm, const ObservationSequence& seq);

/// log Pr[seq, path | hmm]; -infinity for impossible paths.
double path_log_probability(const Hmm& hmm, const ObservationSequence& seq,
                            const std::vector<int>& path);

struct BaumWelchOptions {
  int states = 1;
  std::uint64_t seed = 0;
  int max_iters = 500;
  double relative_tol = 1e-7;
  /// Alphabet size; inferred as max token + 1 when absent.
  std::optional<int> symbols;
};

struct BaumWelchResult {
  Hmm hmm;
  /// Data log-likelihood under the parameters entering each EM iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
};

/// EM for a discrete HMM over one or more sequences. The initial state
/// distribution is re-estimated from the first-step posteriors.
BaumWelchResult baum_welch(const std::vector<ObservationSequence>& seqs,
                           const BaumWelchOptions& opts);

}  // namespace pairhmm
