#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace possq {

/// Weighted particles. The possibility filter keeps max(weights) == 1; the
/// standard particle filter keeps sum(weights) == 1.
template <int Dim = Eigen::Dynamic>
struct ParticleSet {
  using Vector = Eigen::Matrix<double, Dim, 1>;

  std::vector<Vector> states;
  std::vector<double> weights;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }

  std::size_t max_weight_index() const {
    return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
  }
};

/// Poss(x in A) approximated by the largest weight among particles in A.
template <int Dim, class Predicate>
double possibility_of_event(const ParticleSet<Dim>& particles, Predicate&& in_event) {
  double best = 0.0;
  for (std::size_t j = 0; j < particles.size(); ++j) {
    if (in_event(particles.states[j])) best = std::max(best, particles.weights[j]);
  }
  return best;
}

}  // namespace possq
