#pragma once

#include <cstdint>
#include <vector>

namespace csde {

/// Uniform partition of [0, T] into N steps of size tau = T/N, with the
/// half-step midpoints t_{n+1/2} = t_n + tau/2 used by the splitting scheme.
class TimeGrid {
 public:
  TimeGrid(double final_time, std::int64_t steps);

  double final_time() const { return final_time_; }
  std::int64_t steps() const { return steps_; }
  double step_size() const { return step_size_; }

  /// t_n for n = 0..N.
  double node(std::int64_t n) const { return nodes_[static_cast<std::size_t>(n)]; }
  /// t_{n+1/2} for n = 0..N-1.
  double midpoint(std::int64_t n) const { return midpoints_[static_cast<std::size_t>(n)]; }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& midpoints() const { return midpoints_; }

  bool operator==(const TimeGrid& other) const {
    return final_time_ == other.final_time_ && steps_ == other.steps_;
  }

 private:
  double final_time_;
  std::int64_t steps_;
  double step_size_;
  std::vector<double> nodes_;
  std::vector<double> midpoints_;
};

TimeGrid make_time_grid(double final_time, std::int64_t steps);

}  // namespace csde
