#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "possq/bench/noise.hpp"
#include "possq/core/errors.hpp"
#include "possq/tma/crlb.hpp"
#include "possq/tma/models.hpp"

namespace possq::bench {

using tma::Matrix4;
using tma::State;

/// Engagement geometry and model settings, SI units throughout. Headings are
/// measured clockwise from north. The observer sails leg 1, then turns
/// instantaneously and holds the second heading until the end.
struct ScenarioParams {
  int scan_count = 35;
  double interval_s = 40.0;
  double q = 5e-4;  // m^2/s^3

  double observer_speed = 5.0;
  double observer_heading1 = tma::deg_to_rad(70.0);
  double observer_heading2 = tma::deg_to_rad(340.0);
  int leg1_scans = 15;

  double target_range = 10000.0;  // from the observer at scan 1
  double target_bearing = 0.0;
  double target_speed = 4.0;
  double target_heading = tma::deg_to_rad(140.0);

  NoiseModel true_noise = NoiseModel::gaussian(tma::deg_to_rad(1.0));
  double filter_sigma = tma::deg_to_rad(1.0);

  tma::PriorParams prior;
  /// Draw the prior range per run from N(prior.range_m, prior.range_sigma_m^2).
  bool prior_range_jitter = true;
  /// Perturb the target with white-acceleration noise of intensity q.
  bool truth_process_noise = true;
  double divergence_threshold_m = 1000.0;
};

inline void validate(const ScenarioParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid scenario parameter: ") + what);
  };
  require(p.scan_count >= 2, "scan_count must be at least 2");
  require(p.interval_s > 0.0 && std::isfinite(p.interval_s), "interval_s must be positive");
  require(p.q > 0.0 && std::isfinite(p.q), "q must be positive");
  require(p.observer_speed > 0.0, "observer_speed must be positive");
  require(p.leg1_scans >= 1, "leg1_scans must be at least 1");
  require(std::isfinite(p.observer_heading1) && std::isfinite(p.observer_heading2), "observer headings must be finite");
  require(std::abs(tma::wrap_angle(p.observer_heading2 - p.observer_heading1)) > 1e-9,
          "observer headings must differ (a manoeuvre is required)");
  require(p.target_range > 0.0, "target_range must be positive");
  require(p.target_speed >= 0.0, "target_speed must be non-negative");
  require(p.filter_sigma > 0.0, "filter_sigma must be positive");
  require(p.divergence_threshold_m > 0.0, "divergence_threshold_m must be positive");
  require(p.prior.range_m > 0.0 && p.prior.range_sigma_m > 0.0, "prior range and range sigma must be positive");
  require(p.prior.bearing_sigma_rad > 0.0, "prior bearing sigma must be positive");
  require(p.prior.vel_sigma_x > 0.0 && p.prior.vel_sigma_y > 0.0, "prior velocity sigmas must be positive");
  p.true_noise.validate();
}

/// Absolute trajectories of one engagement plus the matrices the filters use.
struct Scenario {
  ScenarioParams params;
  tma::DynamicsConfig dynamics;
  Matrix4 transition;
  Matrix4 process_noise;
  std::vector<State> observer;
  std::vector<State> target;
  /// First scan (0-based) carrying the second-leg velocity.
  int turn_scan = 0;

  int scan_count() const { return static_cast<int>(observer.size()); }
  double time_s(int k) const { return k * dynamics.interval_s; }
  State relative(int k) const { return target[k] - observer[k]; }

  std::vector<State> relative_track() const {
    std::vector<State> out;
    out.reserve(observer.size());
    for (int k = 0; k < scan_count(); ++k) out.push_back(relative(k));
    return out;
  }

  /// U_{k,k-1} for k >= 1.
  State input(int k) const { return tma::observer_input(observer[k], observer[k - 1], dynamics.interval_s); }

  Eigen::Vector2d observer_velocity(int k) const { return {observer[k][tma::kVx], observer[k][tma::kVy]}; }
};

namespace detail {

inline State cv_state(double x, double y, double speed, double heading) {
  State s;
  s << x, speed * std::sin(heading), y, speed * std::cos(heading);
  return s;
}

}  // namespace detail

/// Builds the trajectories. The observer starts at the origin; the target
/// starts at `target_range` along `target_bearing`. The turn is an impulsive
/// velocity change on arrival at scan min(leg1_scans, scan_count - 1), so the
/// observer input at that scan only touches the velocity components.
inline Scenario build_canonical_scenario(const ScenarioParams& params = {}) {
  validate(params);
  Scenario s;
  s.params = params;
  s.dynamics = {params.interval_s, params.q};
  s.transition = tma::transition_matrix(params.interval_s);
  s.process_noise = tma::process_noise_matrix(params.interval_s, params.q);
  s.turn_scan = std::min(params.leg1_scans, params.scan_count - 1);

  State obs = detail::cv_state(0.0, 0.0, params.observer_speed, params.observer_heading1);
  State tgt = detail::cv_state(params.target_range * std::sin(params.target_bearing),
                               params.target_range * std::cos(params.target_bearing), params.target_speed,
                               params.target_heading);
  const State leg2 = detail::cv_state(0.0, 0.0, params.observer_speed, params.observer_heading2);
  for (int k = 0; k < params.scan_count; ++k) {
    if (k > 0) {
      obs = s.transition * obs;
      tgt = s.transition * tgt;
      if (k == s.turn_scan) {
        obs[tma::kVx] = leg2[tma::kVx];
        obs[tma::kVy] = leg2[tma::kVy];
      }
    }
    s.observer.push_back(obs);
    s.target.push_back(tgt);
  }
  return s;
}

/// Relative track of one realisation. With truth_process_noise the target
/// follows x_{k+1} = F x_k + v_k, v_k ~ N(0, Q); otherwise the nominal track.
template <class Rng>
std::vector<State> realize_relative_track(const Scenario& s, Rng& rng) {
  if (!s.params.truth_process_noise) return s.relative_track();
  const Eigen::LLT<Matrix4> llt(s.process_noise);
  std::normal_distribution<double> normal;
  std::vector<State> out;
  out.reserve(s.observer.size());
  State target = s.target.front();
  for (int k = 0; k < s.scan_count(); ++k) {
    if (k > 0) {
      State e;
      for (int i = 0; i < 4; ++i) e[i] = normal(rng);
      target = s.transition * target + llt.matrixL() * e;
    }
    out.push_back(target - s.observer[k]);
  }
  return out;
}

/// True bearings along `truth` plus noise drawn from the scenario's noise
/// model, wrapped to (-pi, pi].
template <class Rng>
std::vector<double> synthesize_measurements(const Scenario& s, std::span<const State> truth, Rng& rng) {
  std::vector<double> z;
  z.reserve(truth.size());
  for (const State& x : truth) z.push_back(tma::wrap_angle(tma::bearing(x) + s.params.true_noise.sample(rng)));
  return z;
}

template <class Rng>
std::vector<double> synthesize_measurements(const Scenario& s, Rng& rng) {
  const auto truth = s.relative_track();
  return synthesize_measurements(s, std::span<const State>(truth), rng);
}

/// Prior spread built from the noise-free first bearing and the configured
/// prior range; this is J_1^{-1} of the bound recursion.
inline tma::Matrix4 reference_prior_spread(const Scenario& s) {
  const double z1 = tma::bearing(s.relative(0));
  return tma::init_prior(z1, s.observer_velocity(0), s.params.prior).spread();
}

/// Position CRLB along the scenario's true relative trajectory.
inline std::vector<tma::CrlbPoint> scenario_crlb(const Scenario& s) {
  const auto truth = s.relative_track();
  return tma::crlb_curve(truth, s.transition, s.process_noise, s.params.filter_sigma, reference_prior_spread(s));
}

}  // namespace possq::bench
