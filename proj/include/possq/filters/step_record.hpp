#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace possq {

/// Point estimate emitted by a filter step.
template <int Dim = Eigen::Dynamic>
struct FilterStepRecord {
  int scan = 0;
  Eigen::Matrix<double, Dim, 1> estimate;
  /// Possibility PF: the un-normalised peak weight at the MAP particle.
  /// Standard PF: the largest normalised weight before resampling.
  double peak_weight = 0.0;
  double log_peak_weight = 0.0;
  /// Index of the MAP particle among the predicted particles (possibility PF).
  std::size_t particle_index = 0;
};

}  // namespace possq
