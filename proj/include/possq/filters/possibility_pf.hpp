#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "possq/core/errors.hpp"
#include "possq/core/gaussian_possibility.hpp"
#include "possq/core/particle_set.hpp"
#include "possq/core/water_pour.hpp"
#include "possq/filters/step_record.hpp"
#include "possq/filters/transition.hpp"

namespace possq {

/// Output of one possibility-PF recursion.
template <int Dim>
struct PossibilityStep {
  ParticleSet<Dim> particles;  // resampled, max weight 1
  FilterStepRecord<Dim> record;
  /// Predicted particles and their peak-normalised weights before resampling.
  std::vector<typename ParticleSet<Dim>::Vector> predicted;
  std::vector<double> predicted_weights;
  std::vector<std::size_t> ancestors;
};

namespace detail {

template <int Dim>
void normalize_by_peak(ParticleSet<Dim>& ps) {
  const double peak = *std::max_element(ps.weights.begin(), ps.weights.end());
  if (!(peak > 0.0)) throw AllWeightsZero("all particle weights are zero");
  for (double& w : ps.weights) w /= peak;
  // Division by the peak returns exactly 1 for the peak itself.
}

}  // namespace detail

/// Initialisation: draw from the water-poured prior, weight by the prior
/// possibility and normalise by the largest weight.
template <int Dim, class Rng>
ParticleSet<Dim> possibility_pf_init(const GaussianPossibility<Dim>& prior, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("particle count must be positive");
  const auto poured = water_pour_continuous(prior);
  ParticleSet<Dim> ps;
  ps.states.reserve(n);
  ps.weights.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto offset = poured.sample_offset(rng);
    ps.weights.push_back(std::exp(-0.5 * prior.offset_mahalanobis2(offset)));
    ps.states.push_back(prior.mean() + offset);
  }
  detail::normalize_by_peak(ps);
  return ps;
}

/// One recursion of the possibility particle filter.
///
/// `transition` maps a state to the possibility of the next state. Any
/// callable returning a GaussianPossibility works; transitions satisfying
/// HasAdditiveNoise share a single water-poured noise shape across particles.
/// `log_likelihood(x, z)` returns log g(x, z).
///
/// Per particle: sample from the water-poured transition, multiply the weight
/// by the transition possibility at the sample and by the likelihood. The MAP
/// particle (lowest index on ties) is reported, weights are divided by the
/// peak, indices are resampled from the discrete water-poured pmf carrying
/// their weights, and weights are normalised by their maximum again.
/// Weights are combined in the log domain.
template <int Dim, class Transition, class LogLikelihood, class Measurement, class Rng>
PossibilityStep<Dim> possibility_pf_step(const ParticleSet<Dim>& ps, const Transition& transition,
                                         LogLikelihood&& log_likelihood, const Measurement& z, Rng& rng,
                                         int scan = 0) {
  using Vector = typename ParticleSet<Dim>::Vector;
  const std::size_t n = ps.size();
  if (n == 0 || ps.weights.size() != n) throw InvalidArgument("invalid particle set");

  std::vector<Vector> predicted;
  predicted.reserve(n);
  std::vector<double> log_w(n);

  if constexpr (HasAdditiveNoise<Transition>) {
    const auto& noise = transition.noise();
    const auto poured = water_pour_continuous(noise);
    for (std::size_t j = 0; j < n; ++j) {
      const Vector offset = poured.sample_offset(rng);
      const double log_phi = -0.5 * noise.offset_mahalanobis2(offset);
      predicted.push_back(transition.mean(ps.states[j]) + offset);
      log_w[j] = std::log(ps.weights[j]) + log_phi + log_likelihood(predicted.back(), z);
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const GaussianPossibility<Dim> phi = transition(ps.states[j]);
      const auto poured = water_pour_continuous(phi);
      predicted.push_back(poured.sample(rng));
      log_w[j] = std::log(ps.weights[j]) + phi.log_eval(predicted.back()) + log_likelihood(predicted.back(), z);
    }
  }

  std::size_t j_max = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(log_w[j])) log_w[j] = -std::numeric_limits<double>::infinity();
    if (log_w[j] > log_w[j_max]) j_max = j;
  }
  const double log_peak = log_w[j_max];
  if (!std::isfinite(log_peak)) throw AllWeightsZero("every particle weight underflowed to zero");

  PossibilityStep<Dim> out;
  out.record.scan = scan;
  out.record.estimate = predicted[j_max];
  out.record.log_peak_weight = log_peak;
  out.record.peak_weight = std::exp(log_peak);
  out.record.particle_index = j_max;

  std::vector<double> normalized(n);
  for (std::size_t j = 0; j < n; ++j) normalized[j] = std::exp(log_w[j] - log_peak);
  normalized[j_max] = 1.0;

  const auto pour = water_pour_discrete(normalized);
  out.ancestors = sample_discrete(pour, rng, n);
  out.particles.states.reserve(n);
  out.particles.weights.reserve(n);
  for (std::size_t a : out.ancestors) {
    out.particles.states.push_back(predicted[a]);
    out.particles.weights.push_back(normalized[a]);
  }
  detail::normalize_by_peak(out.particles);

  out.predicted = std::move(predicted);
  out.predicted_weights = std::move(normalized);
  return out;
}

/// MAP particle of a max-normalised set (lowest index on ties).
template <int Dim>
typename ParticleSet<Dim>::Vector map_estimate(const ParticleSet<Dim>& ps) {
  return ps.states[ps.max_weight_index()];
}

}  // namespace possq
