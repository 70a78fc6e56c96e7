#pragma once

#include <utility>

#include "possq/core/gaussian_possibility.hpp"

namespace possq {

/// Transition x_k = f(x_{k-1}) + v with v described by a zero-mean Gaussian
/// shape. The possibility filter reads `noise()` as the possibility of v; the
/// standard particle filter reads its spread as a covariance.
template <int Dim, class MeanFn>
class AdditiveTransition {
 public:
  using Vector = typename GaussianPossibility<Dim>::Vector;

  AdditiveTransition(MeanFn mean_fn, GaussianPossibility<Dim> noise)
      : mean_fn_(std::move(mean_fn)), noise_(std::move(noise)) {}

  Vector mean(const Vector& previous) const { return mean_fn_(previous); }
  const GaussianPossibility<Dim>& noise() const { return noise_; }

  /// phi(. | previous) as a Gaussian possibility.
  GaussianPossibility<Dim> operator()(const Vector& previous) const { return noise_.with_mean(mean(previous)); }

 private:
  MeanFn mean_fn_;
  GaussianPossibility<Dim> noise_;
};

template <int Dim, class MeanFn>
AdditiveTransition<Dim, MeanFn> make_additive_transition(MeanFn mean_fn, GaussianPossibility<Dim> noise) {
  return AdditiveTransition<Dim, MeanFn>(std::move(mean_fn), std::move(noise));
}

/// Transitions exposing a shared noise shape; the filter then water-pours once
/// per step instead of once per particle.
template <class T>
concept HasAdditiveNoise = requires(const T& t) {
  t.noise();
  t.mean(t.noise().mean());
};

}  // namespace possq
