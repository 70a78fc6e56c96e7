#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

#include "possq/core/errors.hpp"
#include "possq/core/gaussian_possibility.hpp"

namespace possq::tma {

/// Relative state (target minus observer), ordered (x, vx, y, vy) in m, m/s.
using State = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

inline constexpr int kX = 0;
inline constexpr int kVx = 1;
inline constexpr int kY = 2;
inline constexpr int kVy = 3;

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Sampling interval and process-noise intensity of the CV model.
struct DynamicsConfig {
  double interval_s = 40.0;
  double q = 1e-3;  // m^2/s^3
};

/// Block-diagonal constant-velocity transition I2 (x) [1 T; 0 1].
inline Matrix4 transition_matrix(double interval_s) {
  if (!(interval_s > 0.0)) throw InvalidArgument("sampling interval must be positive");
  Matrix4 f = Matrix4::Identity();
  f(kX, kVx) = interval_s;
  f(kY, kVy) = interval_s;
  return f;
}

/// Deterministic input U = x^o_{k+1} - F x^o_k accounting for observer
/// accelerations between two scans.
inline State observer_input(const State& observer_next, const State& observer, double interval_s) {
  return observer_next - transition_matrix(interval_s) * observer;
}

/// White-acceleration process noise I2 (x) q [T^3/3 T^2/2; T^2/2 T].
inline Matrix4 process_noise_matrix(double interval_s, double q) {
  if (!(interval_s > 0.0)) throw InvalidArgument("sampling interval must be positive");
  if (!(q > 0.0)) throw InvalidArgument("process noise intensity q must be positive");
  const double t = interval_s;
  Eigen::Matrix2d block;
  block << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  block *= q;
  Matrix4 out = Matrix4::Zero();
  out.block<2, 2>(0, 0) = block;
  out.block<2, 2>(2, 2) = block;
  return out;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::remainder(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

/// Bearing atan2(x, y): clockwise from north (+y) towards east (+x).
inline double bearing(const State& x) {
  if (x[kX] == 0.0 && x[kY] == 0.0) throw AtOrigin("bearing undefined at zero relative position");
  return std::atan2(x[kX], x[kY]);
}

/// Log of the Gaussian-shaped bearing likelihood -1/2 (wrap(z - h(x)) / sigma)^2.
inline double bearing_log_likelihood(const State& x, double z, double sigma) {
  const double r = wrap_angle(z - bearing(x)) / sigma;
  return -0.5 * r * r;
}

inline double bearing_likelihood(const State& x, double z, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("bearing sigma must be positive");
  return std::exp(bearing_log_likelihood(x, z, sigma));
}

/// Log-likelihood functor for the filters.
struct BearingLikelihood {
  double sigma;
  double operator()(const State& x, double z) const { return bearing_log_likelihood(x, z, sigma); }
};

/// phi(. | x_prev): Gaussian possibility with mean F x_prev - U and spread Q.
inline GaussianPossibility<4> transition_possibility(const State& previous, const Matrix4& f, const State& u,
                                                     const Matrix4& q) {
  return GaussianPossibility<4>(f * previous - u, q);
}

/// CV transition between two scans, shared across particles.
class CvTransition {
 public:
  CvTransition(const Matrix4& f, const State& u, const Matrix4& q) : f_(f), u_(u), noise_(State::Zero(), q) {}

  State mean(const State& previous) const { return f_ * previous - u_; }
  const GaussianPossibility<4>& noise() const { return noise_; }
  GaussianPossibility<4> operator()(const State& previous) const { return noise_.with_mean(mean(previous)); }

 private:
  Matrix4 f_;
  State u_;
  GaussianPossibility<4> noise_;
};

/// Orientation of the initial position spread.
enum class InitCovariance {
  /// Range variance along the line of sight, cross-range variance across it.
  Consistent,
  /// sigma_x^2 = sigma_R^2 cos^2 z + R^2 sigma^2 sin^2 z,
  /// sigma_y^2 = sigma_R^2 sin^2 z + R^2 sigma^2 cos^2 z.
  AxisSwapped,
};

struct PriorParams {
  double range_m = 10000.0;
  double range_sigma_m = 3500.0;
  double bearing_sigma_rad = deg_to_rad(1.0);
  double vel_sigma_x = 2.6;
  double vel_sigma_y = 2.6;
  InitCovariance covariance = InitCovariance::Consistent;
};

/// Initial relative-state possibility from the first bearing: range R along
/// z1 and a stationary target (relative velocity = -observer velocity).
inline GaussianPossibility<4> init_prior(double z1, const Eigen::Vector2d& observer_velocity, const PriorParams& p) {
  if (!(p.range_m > 0.0 && p.range_sigma_m > 0.0 && p.bearing_sigma_rad > 0.0 && p.vel_sigma_x > 0.0 &&
        p.vel_sigma_y > 0.0)) {
    throw InvalidArgument("prior range, sigmas and velocity sigmas must be positive");
  }
  const double s = std::sin(z1);
  const double c = std::cos(z1);
  const double range_var = p.range_sigma_m * p.range_sigma_m;
  const double cross_var = p.range_m * p.range_m * p.bearing_sigma_rad * p.bearing_sigma_rad;

  State mean;
  mean << p.range_m * s, -observer_velocity.x(), p.range_m * c, -observer_velocity.y();

  double sxx = 0.0;
  double syy = 0.0;
  if (p.covariance == InitCovariance::Consistent) {
    sxx = range_var * s * s + cross_var * c * c;
    syy = range_var * c * c + cross_var * s * s;
  } else {
    sxx = range_var * c * c + cross_var * s * s;
    syy = range_var * s * s + cross_var * c * c;
  }
  const double sxy = (range_var - cross_var) * s * c;

  Matrix4 spread = Matrix4::Zero();
  spread(kX, kX) = sxx;
  spread(kY, kY) = syy;
  spread(kX, kY) = spread(kY, kX) = sxy;
  spread(kVx, kVx) = p.vel_sigma_x * p.vel_sigma_x;
  spread(kVy, kVy) = p.vel_sigma_y * p.vel_sigma_y;
  return GaussianPossibility<4>(mean, spread);
}

}  // namespace possq::tma
