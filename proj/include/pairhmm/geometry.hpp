#pragma once

#include <cstdint>
#include <vector>

#include "pairhmm/types.hpp"

namespace pairhmm {

/// Necessary-condition diagnostics for a sufficiently scattered emission
/// matrix. Exact certification is not attempted: only the per-column zero
/// count (necessary) and separability (sufficient) are reported.
struct ScatterReport {
  std::vector<int> column_zero_counts;
  int min_required = 0;  // K - 1
  bool separable = false;
  bool passes_necessary = false;
};

constexpr double kDefaultZeroTol = 1e-9;

ScatterReport check_scattered_necessary(const EmissionMatrix& m,
                                        double zero_tol = kDefaultZeroTol);

/// Volume of the ball {x : ‖x‖ ≤ 1ᵀx/√(K-1), 1ᵀx = 1} relative to the
/// probability simplex, evaluated in log space. Requires K >= 2.
double volume_ratio(int k);

enum class EmissionMode { Sparse50, IdentityTop };

/// sparse50: i.i.d. Exp(1) entries, each zeroed with probability 1/2, columns
/// resampled until nonzero, then normalized.
/// identity_top: Exp(1) entries with the top K x K block replaced by I before
/// column normalization (separable by construction).
EmissionMatrix generate_scattered_emission(int n, int k, EmissionMode mode, std::uint64_t seed);

/// Row-normalized K x K matrix of i.i.d. Exp(1) entries.
TransitionMatrix generate_random_transition(int k, std::uint64_t seed);

}  // namespace pairhmm
