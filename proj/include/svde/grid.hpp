#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace svde {

/// Uniform time grid 0 = t_0 < t_1 < ... < t_N = T with t_i = i*T/N.
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("TimeGrid: horizon must be finite and positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
  }

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t node_count() const { return steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }

  double node(std::size_t i) const {
    if (i > steps_) throw std::out_of_range("TimeGrid::node: index past end of grid");
    if (i == steps_) return horizon_;  // final node is the horizon exactly
    return static_cast<double>(i) * horizon_ / static_cast<double>(steps_);
  }

  bool operator==(const TimeGrid& o) const {
    return horizon_ == o.horizon_ && steps_ == o.steps_;
  }

private:
  double horizon_;
  std::size_t steps_;
};

inline TimeGrid make_grid(double horizon, std::size_t steps) {
  return TimeGrid(horizon, steps);
}

}  // namespace svde
