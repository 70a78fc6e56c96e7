#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "possq/core/errors.hpp"
#include "possq/core/gaussian_possibility.hpp"
#include "possq/core/particle_set.hpp"
#include "possq/filters/step_record.hpp"
#include "possq/filters/transition.hpp"

namespace possq {

template <int Dim>
struct StandardStep {
  ParticleSet<Dim> particles;  // resampled, uniform weights summing to 1
  FilterStepRecord<Dim> record;
};

namespace detail {

template <int Dim, class Rng>
typename GaussianPossibility<Dim>::Vector gaussian_offset(const GaussianPossibility<Dim>& shape, Rng& rng) {
  std::normal_distribution<double> normal;
  typename GaussianPossibility<Dim>::Vector e(shape.dim());
  for (int i = 0; i < shape.dim(); ++i) e[i] = normal(rng);
  return shape.lower() * e;
}

}  // namespace detail

/// Bootstrap filter initialisation: n draws from N(mean, spread), weights 1/n.
template <int Dim, class Rng>
ParticleSet<Dim> standard_pf_init(const GaussianPossibility<Dim>& prior, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("particle count must be positive");
  ParticleSet<Dim> ps;
  ps.states.reserve(n);
  for (std::size_t j = 0; j < n; ++j) ps.states.push_back(prior.mean() + detail::gaussian_offset(prior, rng));
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
  return ps;
}

/// Weighted mean of a particle set whose weights sum to 1.
template <int Dim>
typename ParticleSet<Dim>::Vector weighted_mean(const ParticleSet<Dim>& ps) {
  using Vector = typename ParticleSet<Dim>::Vector;
  Vector mean = Vector::Zero(ps.states.front().size());
  for (std::size_t j = 0; j < ps.size(); ++j) mean += ps.weights[j] * ps.states[j];
  return mean;
}

/// Systematic resampling: one uniform offset, n evenly spaced pointers.
template <class Rng>
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, Rng& rng) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  const double step = 1.0 / static_cast<double>(n);
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = weights[0];
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    while (u > cumulative && i + 1 < n) cumulative += weights[++i];
    out[j] = i;
    u += step;
  }
  return out;
}

/// One SIR recursion: propagate through the probabilistic transition
/// (Gaussian with covariance noise().spread()), weight by the likelihood,
/// normalise to sum 1, report the weighted mean, resample systematically.
template <int Dim, class Transition, class LogLikelihood, class Measurement, class Rng>
  requires HasAdditiveNoise<Transition>
StandardStep<Dim> standard_pf_step(const ParticleSet<Dim>& ps, const Transition& transition,
                                   LogLikelihood&& log_likelihood, const Measurement& z, Rng& rng, int scan = 0) {
  using Vector = typename ParticleSet<Dim>::Vector;
  const std::size_t n = ps.size();
  if (n == 0 || ps.weights.size() != n) throw InvalidArgument("invalid particle set");

  std::vector<Vector> predicted;
  predicted.reserve(n);
  std::vector<double> log_w(n);
  double log_peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    predicted.push_back(transition.mean(ps.states[j]) + detail::gaussian_offset(transition.noise(), rng));
    log_w[j] = std::log(ps.weights[j]) + log_likelihood(predicted.back(), z);
    if (std::isnan(log_w[j])) log_w[j] = -std::numeric_limits<double>::infinity();
    log_peak = std::max(log_peak, log_w[j]);
  }
  if (!std::isfinite(log_peak)) throw AllWeightsZero("every particle weight underflowed to zero");

  ParticleSet<Dim> weighted;
  weighted.weights.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += (weighted.weights[j] = std::exp(log_w[j] - log_peak));
  for (double& w : weighted.weights) w /= total;
  weighted.states = std::move(predicted);

  StandardStep<Dim> out;
  out.record.scan = scan;
  out.record.estimate = weighted_mean(weighted);
  out.record.particle_index = weighted.max_weight_index();
  out.record.peak_weight = weighted.weights[out.record.particle_index];
  out.record.log_peak_weight = std::log(out.record.peak_weight);

  const auto idx = systematic_resample(weighted.weights, rng);
  out.particles.states.reserve(n);
  for (std::size_t a : idx) out.particles.states.push_back(weighted.states[a]);
  out.particles.weights.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

}  // namespace possq
