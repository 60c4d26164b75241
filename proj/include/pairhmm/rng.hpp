#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace pairhmm {

/// Portable seeded generator.
///
/// The bit stream is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. The standard distributions are not (their algorithms are
/// implementation-defined), so all variates are derived here from raw 64-bit
/// draws:
///   uniform()      -> top 53 bits scaled into [0, 1)
///   exponential()  -> -log(1 - uniform())
///   categorical()  -> inverse CDF over a cumulative table
/// Given the same libm, every sample is bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double exponential();
  /// Index i such that cumulative[i-1] <= u < cumulative[i] for u = uniform()
  /// scaled by the last entry. Zero-width bins are never returned.
  std::size_t categorical(std::span<const double> cumulative);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer over (seed, stream). Used to give independent
/// sub-streams (model generation, sampling, initialization) to one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pairhmm
