#pragma once

#include <cstdint>

#include "csde/time_grid.hpp"
#include "csde/types.hpp"

namespace csde {

/// Truncation level k of the clamped Wiener increments. The clamp threshold
/// is A = sqrt(2 k |log tau|) in units of sqrt(tau) (natural logarithm).
struct TruncationLevel {
  int k = 1;
};

double truncation_threshold(double tau, TruncationLevel level);

/// Clamps a raw Brownian increment dw ~ Normal(0, tau): returns
/// sqrt(tau) * chi(dw / sqrt(tau)) where chi limits the magnitude to the
/// threshold and preserves the sign. Requires tau in (0, 1).
double truncate_increment(double dw, double tau, TruncationLevel level);

/// One sample of Brownian increments over a grid: an M x N matrix whose
/// entry (m, n) is W_{m+1}(t_{n+1}) - W_{m+1}(t_n) ~ Normal(0, tau).
/// Regeneration from the same (seed, sample_index) is bit-exact; streams
/// are keyed by (seed, sample_index, channel) so samples can be produced
/// in any order on any number of threads.
struct NoisePath {
  TimeGrid grid;
  int channels = 0;
  Mat increments;  // channels rows, grid.steps() columns
  std::uint64_t seed = 0;
  std::int64_t sample_index = 0;
};

NoisePath sample_noise(const TimeGrid& grid, int channels, std::uint64_t seed,
                       std::int64_t sample_index);

/// In-place variant for tight sampling loops; reuses path.increments storage.
void sample_noise_into(const TimeGrid& grid, int channels, std::uint64_t seed,
                       std::int64_t sample_index, NoisePath& path);

/// Sums blocks of `factor` consecutive increments, producing the increments
/// of the grid with steps()/factor steps. Power-of-two factors are reduced by
/// repeated pairwise halving, so dyadic coarsening chains compose bit-exactly:
/// coarsen(coarsen(p, 2), 2) == coarsen(p, 4).
NoisePath coarsen(const NoisePath& path, std::int64_t factor);

void coarsen_into(const NoisePath& path, std::int64_t factor, NoisePath& coarse);

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stateless Gaussian stream: standard normal number `index` of the stream
/// keyed by (seed, sample_index, channel). Box-Muller over two counter words.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::int64_t sample_index, int channel)
      : key_(mix64(mix64(mix64(seed + kGolden) ^ static_cast<std::uint64_t>(sample_index)) ^
                   static_cast<std::uint64_t>(channel))) {}

  double normal(std::int64_t index) const;

 private:
  std::uint64_t key_;
};

}  // namespace detail

}  // namespace csde
