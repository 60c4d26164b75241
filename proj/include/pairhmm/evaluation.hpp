#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairhmm/geometry.hpp"
#include "pairhmm/types.hpp"

namespace pairhmm {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(K³)). Returns assignment[row] = column.
std::vector<int> solve_assignment(const Matrix& cost);

struct MatchResult {
  /// permutation[a] = column of the estimate matched to true column a.
  std::vector<int> permutation;
  double emission_tv = 0.0;
  /// Mean per-row TV of the permuted, row-normalized transitions. Zero when
  /// no transitions were supplied.
  double transition_tv = 0.0;
};

/// Matches estimated columns to true columns by minimizing the summed column
/// TV, then reports (1/K)·(optimal cost) and the transition error under the
/// same relabeling.
MatchResult match_permutation(const Matrix& m_true, const Matrix& m_est,
                              const std::optional<Matrix>& p_true = std::nullopt,
                              const std::optional<Matrix>& p_est = std::nullopt);

enum class Method { Proposed, Nmf, BaumWelch };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ExperimentConfig {
  int n = 16;
  int k = 4;
  /// Sequence lengths. 0 selects exact moments instead of samples.
  std::vector<std::uint64_t> sequence_lengths{10000, 100000, 1000000};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EmissionMode mode = EmissionMode::IdentityTop;
  std::vector<Method> methods{Method::Proposed, Method::Nmf};
  double lambda = 0.05;
  int nmf_iters = 5000;
  int baum_welch_iters = 500;
  bool record_time = true;
  /// Upper bound on worker threads; 1 runs every cell in order.
  int threads = 1;

  void validate() const;
};

struct ExperimentRow {
  Method method = Method::Proposed;
  std::uint64_t seed = 0;
  std::uint64_t length = 0;
  double emission_tv = 0.0;
  double transition_tv = 0.0;
  double seconds = 0.0;
};

/// One row per (seed, length, method), sorted by (method, seed, length).
/// Each seed fixes the ground-truth HMM; each (seed, length) fixes the
/// sampled sequence shared by all methods.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

/// `method,seed,T,emission_tv,transition_tv,seconds` with 6 significant digits.
std::string experiment_csv(const std::vector<ExperimentRow>& rows);

/// Reads `key=value` lines (# comments allowed). Keys: N, K, lengths, seeds,
/// mode, methods, lambda, nmf_iters, baum_welch_iters, timing, threads.
/// List values are comma-separated.
ExperimentConfig parse_experiment_config(const std::string& text);

}  // namespace pairhmm
