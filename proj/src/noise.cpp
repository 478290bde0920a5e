#include "csde/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace csde {

namespace detail {

double GaussianStream::normal(std::int64_t index) const {
  const std::uint64_t c = 2 * static_cast<std::uint64_t>(index);
  const std::uint64_t w1 = mix64(key_ + (c + 1) * kGolden);
  const std::uint64_t w2 = mix64(key_ + (c + 2) * kGolden);
  // u1 in (0, 1] so the log is finite; u2 in [0, 1).
  const double u1 = static_cast<double>((w1 >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

double truncation_threshold(double tau, TruncationLevel level) {
  if (!(tau > 0.0) || tau >= 1.0) {
    throw std::invalid_argument("truncation threshold requires tau in (0,1), got " +
                                std::to_string(tau));
  }
  if (level.k < 1) {
    throw std::invalid_argument("truncation level k must be >= 1, got " +
                                std::to_string(level.k));
  }
  return std::sqrt(2.0 * static_cast<double>(level.k) * std::abs(std::log(tau)));
}

double truncate_increment(double dw, double tau, TruncationLevel level) {
  const double threshold = truncation_threshold(tau, level);
  if (dw == 0.0) return 0.0;
  const double root_tau = std::sqrt(tau);
  const double zeta = dw / root_tau;
  const double clamped = std::copysign(std::min(std::abs(zeta), threshold), zeta);
  return root_tau * clamped;
}

NoisePath sample_noise(const TimeGrid& grid, int channels, std::uint64_t seed,
                       std::int64_t sample_index) {
  NoisePath path{grid, channels, Mat(), seed, sample_index};
  sample_noise_into(grid, channels, seed, sample_index, path);
  return path;
}

void sample_noise_into(const TimeGrid& grid, int channels, std::uint64_t seed,
                       std::int64_t sample_index, NoisePath& path) {
  if (channels < 1) {
    throw std::invalid_argument("noise path needs at least one channel, got " +
                                std::to_string(channels));
  }
  const std::int64_t n_steps = grid.steps();
  path.grid = grid;
  path.channels = channels;
  path.seed = seed;
  path.sample_index = sample_index;
  path.increments.resize(channels, n_steps);
  const double root_tau = std::sqrt(grid.step_size());
  for (int m = 0; m < channels; ++m) {
    detail::GaussianStream stream(seed, sample_index, m + 1);
    for (std::int64_t n = 0; n < n_steps; ++n) {
      path.increments(m, n) = root_tau * stream.normal(n);
    }
  }
}

namespace {

bool is_power_of_two(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

// One pairwise-halving pass: columns (2j, 2j+1) -> column j.
void halve_columns(Mat& work, std::int64_t cols) {
  for (std::int64_t j = 0; j < cols / 2; ++j) {
    for (std::int64_t m = 0; m < work.rows(); ++m) {
      work(m, j) = work(m, 2 * j) + work(m, 2 * j + 1);
    }
  }
}

}  // namespace

void coarsen_into(const NoisePath& path, std::int64_t factor, NoisePath& coarse) {
  const std::int64_t n_fine = path.grid.steps();
  if (factor < 1 || n_fine % factor != 0) {
    throw std::invalid_argument("coarsening factor " + std::to_string(factor) +
                                " does not divide the step count " + std::to_string(n_fine));
  }
  const std::int64_t n_coarse = n_fine / factor;
  coarse.grid = TimeGrid(path.grid.final_time(), n_coarse);
  coarse.channels = path.channels;
  coarse.seed = path.seed;
  coarse.sample_index = path.sample_index;
  coarse.increments.resize(path.channels, n_coarse);
  if (factor == 1) {
    coarse.increments = path.increments;
    return;
  }
  if (is_power_of_two(factor)) {
    Mat work = path.increments;
    std::int64_t cols = n_fine;
    while (cols > n_coarse) {
      halve_columns(work, cols);
      cols /= 2;
    }
    coarse.increments = work.leftCols(n_coarse);
    return;
  }
  for (std::int64_t j = 0; j < n_coarse; ++j) {
    for (std::int64_t m = 0; m < path.channels; ++m) {
      double sum = 0.0;
      for (std::int64_t i = j * factor; i < (j + 1) * factor; ++i) {
        sum += path.increments(m, i);
      }
      coarse.increments(m, j) = sum;
    }
  }
}

NoisePath coarsen(const NoisePath& path, std::int64_t factor) {
  NoisePath coarse{path.grid, path.channels, Mat(), path.seed, path.sample_index};
  coarsen_into(path, factor, coarse);
  return coarse;
}

}  // namespace csde
