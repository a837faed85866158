#pragma once

// Nonnegative scalar functions of time sampled on a strictly increasing
// grid starting at 0, with linear interpolation between nodes and exact
// integration of the interpolant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sgv {

class GridFunction {
 public:
  GridFunction(std::vector<double> times, std::vector<double> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty())
      throw std::invalid_argument("GridFunction: empty grid");
    if (times_.size() != values_.size())
      throw std::invalid_argument("GridFunction: times/values length mismatch");
    if (times_.front() != 0.0)
      throw std::invalid_argument("GridFunction: grid must start at 0");
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k]))
        throw std::invalid_argument("GridFunction: non-finite time");
      if (k > 0 && !(times_[k] > times_[k - 1]))
        throw std::invalid_argument("GridFunction: times not increasing");
      if (!std::isfinite(values_[k]) || values_[k] < 0.0)
        throw std::invalid_argument("GridFunction: values must be finite, >= 0");
    }
    cumulative_.resize(times_.size());
    cumulative_[0] = 0.0;
    for (std::size_t k = 1; k < times_.size(); ++k) {
      const double dt = times_[k] - times_[k - 1];
      cumulative_[k] =
          cumulative_[k - 1] + 0.5 * dt * (values_[k] + values_[k - 1]);
    }
  }

  // Constant value v on a uniform grid over [0, horizon] with n_steps steps.
  static GridFunction constant(double v, double horizon, std::size_t n_steps) {
    return GridFunction(uniform_times(horizon, n_steps),
                        std::vector<double>(n_steps + 1, v));
  }

  // f sampled at the nodes of a uniform grid over [0, horizon].
  template <class F>
  static GridFunction sample(F&& f, double horizon, std::size_t n_steps) {
    auto times = uniform_times(horizon, n_steps);
    std::vector<double> values(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) values[k] = f(times[k]);
    return GridFunction(std::move(times), std::move(values));
  }

  static std::vector<double> uniform_times(double horizon,
                                           std::size_t n_steps) {
    if (!(horizon > 0.0) || n_steps == 0)
      throw std::invalid_argument("GridFunction: need horizon > 0, steps > 0");
    std::vector<double> times(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
      times[k] = horizon * static_cast<double>(k) / static_cast<double>(n_steps);
    return times;
  }

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  double horizon() const { return times_.back(); }

  // Linearly interpolated value at t; t must lie within the grid range.
  double value_at(double t) const {
    const std::size_t k = segment_of(t);
    if (k + 1 == times_.size()) return values_.back();
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    return values_[k] + w * (values_[k + 1] - values_[k]);
  }

  // Integral of the interpolant over [0, t]; exact for the piecewise-linear
  // extension, including a partial final segment.
  double integral_to(double t) const {
    const std::size_t k = segment_of(t);
    if (k + 1 == times_.size()) return cumulative_.back();
    const double dt = t - times_[k];
    return cumulative_[k] + 0.5 * dt * (values_[k] + value_at(t));
  }

 private:
  std::size_t segment_of(double t) const {
    if (!(t >= 0.0) || !(t <= times_.back()))
      throw std::out_of_range("GridFunction: t outside grid range");
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

}  // namespace sgv
