#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "pairhmm/types.hpp"

namespace pairhmm {

/// Which consecutive pairs a pairwise estimate counts. `All` is the plain
/// estimator over t = 0..T-1. `WithPredecessor` drops t = 0 so that the
/// result equals the first-mode marginal of the triple estimate exactly.
enum class PairWindow { All, WithPredecessor };

/// Integer counts of consecutive token pairs, accumulated sparsely.
/// Keys are (first, second); iteration order is sorted, so densifying is
/// independent of insertion order.
class PairCounts {
 public:
  explicit PairCounts(int symbols);

  void add_sequence(const ObservationSequence& seq, PairWindow window = PairWindow::All);
  void merge(const PairCounts& other);

  int symbols() const noexcept { return symbols_; }
  std::uint64_t total() const noexcept { return total_; }
  const std::map<std::pair<int, int>, std::uint64_t>& entries() const noexcept { return counts_; }

  /// Counts divided by total(). Throws NoPairs when nothing was counted.
  CooccurrenceMatrix normalized() const;

 private:
  int symbols_;
  std::uint64_t total_ = 0;
  std::map<std::pair<int, int>, std::uint64_t> counts_;
};

/// Ω̂ = (1/T) Σ_t e_{y_t} e_{y_{t+1}}ᵀ for a length-(T+1) sequence.
CooccurrenceMatrix estimate_pairwise(const ObservationSequence& seq, int symbols,
                                     PairWindow window = PairWindow::All);

/// Ω̂₃ over the T-1 consecutive triples.
TripleTensor estimate_triple(const ObservationSequence& seq, int symbols);

/// Θ_{kj} = π_k P_{kj} with π the stationary distribution of P.
ThetaMatrix theta_from_transition(const TransitionMatrix& p);
/// Row-normalized Θ. Throws ZeroRow.
TransitionMatrix transition_from_theta(const ThetaMatrix& theta);
/// Row-normalizes any nonnegative K x K joint (balanced or not).
TransitionMatrix transition_from_joint(const Matrix& joint);

/// M Θ Mᵀ with Θ built from the HMM's transition.
CooccurrenceMatrix exact_pairwise(const Hmm& hmm);
/// Pr[Y_{t-1}, Y_t, Y_{t+1}] of the stationary chain.
TripleTensor exact_triple(const Hmm& hmm);

/// Σ p log(p/q) with 0 log 0 = 0; +infinity when q = 0 < p.
double kl_divergence(std::span<const double> p, std::span<const double> q);
/// ½ Σ |p - q|.
double tv_distance(std::span<const double> p, std::span<const double> q);

double kl_divergence(const Matrix& p, const Matrix& q);
double tv_distance(const Matrix& p, const Matrix& q);
double kl_divergence(const TripleTensor& p, const TripleTensor& q);
double tv_distance(const TripleTensor& p, const TripleTensor& q);

}  // namespace pairhmm
