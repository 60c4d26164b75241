#include "pairhmm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pairhmm {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::exponential() { return -std::log1p(-uniform()); }

std::size_t Rng::categorical(std::span<const double> cumulative) {
  const double total = cumulative.back();
  const double u = uniform() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) {
    // u rounded onto the total; fall back to the last bin with mass.
    it = std::prev(cumulative.end());
    while (it != cumulative.begin() && *it == *std::prev(it)) --it;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pairhmm
