#include "csde/time_grid.hpp"

#include <stdexcept>
#include <string>

namespace csde {

TimeGrid::TimeGrid(double final_time, std::int64_t steps)
    : final_time_(final_time), steps_(steps) {
  if (!(final_time > 0.0)) {
    throw std::invalid_argument("time grid: final time must be positive, got " +
                                std::to_string(final_time));
  }
  if (steps < 1) {
    throw std::invalid_argument("time grid: need at least one step, got " +
                                std::to_string(steps));
  }
  step_size_ = final_time / static_cast<double>(steps);
  nodes_.resize(static_cast<std::size_t>(steps) + 1);
  midpoints_.resize(static_cast<std::size_t>(steps));
  const double half = 0.5 * step_size_;
  for (std::int64_t n = 0; n <= steps; ++n) {
    nodes_[static_cast<std::size_t>(n)] = static_cast<double>(n) * step_size_;
  }
  for (std::int64_t n = 0; n < steps; ++n) {
    midpoints_[static_cast<std::size_t>(n)] = nodes_[static_cast<std::size_t>(n)] + half;
  }
}

TimeGrid make_time_grid(double final_time, std::int64_t steps) {
  return TimeGrid(final_time, steps);
}

}  // namespace csde
