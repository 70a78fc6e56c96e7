#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "possq/core/errors.hpp"
#include "possq/core/gaussian_possibility.hpp"
#include "possq/core/random.hpp"

namespace possq {

namespace detail {

inline double log_unit_ball_volume(int d) {
  return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
}

/// Pieces of the mass of min(pi, exp(-t)) for a Gaussian possibility in
/// dimension d. The clip level exp(-t) meets pi on the ellipsoid of squared
/// Mahalanobis radius 2t.
struct ClippedMass {
  double plateau;   // exp(-t) * volume of the ellipsoid
  double tail;      // mass of pi outside the ellipsoid
  double survival;  // Pr[chi2_d > 2t]
  double total() const { return plateau + tail; }
};

inline ClippedMass clipped_mass(int d, double log_sqrt_det, double t) {
  ClippedMass m{};
  m.plateau = t > 0.0 ? std::exp(-t + log_unit_ball_volume(d) + 0.5 * d * std::log(2.0 * t) + log_sqrt_det) : 0.0;
  m.survival = t > 0.0 ? boost::math::gamma_q(0.5 * d, t) : 1.0;
  m.tail = std::exp(0.5 * d * std::log(2.0 * std::numbers::pi) + log_sqrt_det) * m.survival;
  return m;
}

}  // namespace detail

/// Maximum-entropy style density induced by a Gaussian possibility: the
/// possibility clipped at the level where it integrates to one,
///   p(x) = min(pi(x), level).
/// Inside the Mahalanobis ellipsoid of radius `plateau_radius` the density is
/// flat; outside it follows pi.
template <int Dim = Eigen::Dynamic>
class WaterPouredDensity {
 public:
  using Vector = typename GaussianPossibility<Dim>::Vector;

  const GaussianPossibility<Dim>& source() const { return source_; }
  double level() const { return level_; }
  double plateau_radius() const { return radius_; }
  double plateau_mass() const { return plateau_mass_; }
  double tail_mass() const { return tail_mass_; }

  double density(const Vector& x) const { return std::min(source_.eval(x), level_); }

  template <class Rng>
  Vector sample(Rng& rng) const {
    return source_.mean() + sample_offset(rng);
  }

  /// Draw of x - mean. Composition sampler: uniform in the plateau ellipsoid
  /// with probability plateau_mass, otherwise from the Gaussian-shaped tail.
  template <class Rng>
  Vector sample_offset(Rng& rng) const {
    const int d = source_.dim();
    std::normal_distribution<double> normal;
    Vector dir(d);
    double norm = 0.0;
    do {
      for (int i = 0; i < d; ++i) dir[i] = normal(rng);
      norm = dir.norm();
    } while (norm == 0.0);
    dir /= norm;

    double radius = 0.0;
    if (uniform_open_closed(rng) <= plateau_mass_) {
      radius = radius_ * std::pow(uniform_open_closed(rng), 1.0 / d);
    } else {
      // Inverse CDF of chi2_d restricted to (r^2, inf).
      const double p = uniform_open_closed(rng) * survival_;
      const double r2 = 2.0 * boost::math::gamma_q_inv(0.5 * d, p);
      radius = std::sqrt(std::max(r2, radius_ * radius_));
    }
    return source_.lower() * (radius * dir);
  }

  template <int D>
  friend WaterPouredDensity<D> water_pour_continuous(const GaussianPossibility<D>& pi);

 private:
  explicit WaterPouredDensity(GaussianPossibility<Dim> source) : source_(std::move(source)) {}

  GaussianPossibility<Dim> source_;
  double level_ = 1.0;
  double radius_ = 0.0;
  double plateau_mass_ = 0.0;
  double tail_mass_ = 1.0;
  double survival_ = 1.0;
};

/// Water level for a Gaussian possibility: solves
///   lambda V_d r^d det(P)^{1/2} + (2 pi)^{d/2} det(P)^{1/2} Pr[chi2_d > r^2] = 1,
/// r = sqrt(-2 ln lambda), by bisection on t = -ln lambda.
template <int Dim>
WaterPouredDensity<Dim> water_pour_continuous(const GaussianPossibility<Dim>& pi) {
  constexpr double kTolerance = 1e-12;
  const int d = pi.dim();
  const double lsd = pi.log_sqrt_det();
  const double mass = pi.total_mass();
  if (mass < 1.0 - kTolerance) {
    std::ostringstream msg;
    msg << "possibility integrates to " << mass
        << " < 1, no density is dominated by it; rescale the state units so the spread is larger";
    throw TooConcentrated(msg.str());
  }

  WaterPouredDensity<Dim> out(pi);
  double t = 0.0;
  if (mass > 1.0 + kTolerance) {
    double lo = 0.0;
    double hi = 1.0;
    double m_lo = mass;
    double m_hi = detail::clipped_mass(d, lsd, hi).total();
    while (m_hi >= 1.0) {
      lo = hi;
      m_lo = m_hi;
      hi *= 2.0;
      m_hi = detail::clipped_mass(d, lsd, hi).total();
      if (hi > 1e6) throw std::logic_error("water level bracket did not close");
    }
    t = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
      t = 0.5 * (lo + hi);
      const double m = detail::clipped_mass(d, lsd, t).total();
      // The clipped mass strictly decreases in t.
      if (m > m_lo * (1.0 + 1e-14) || m < m_hi * (1.0 - 1e-14)) {
        throw std::logic_error("clipped mass is not monotone in the water level");
      }
      if (std::abs(m - 1.0) <= kTolerance || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
      if (m > 1.0) {
        lo = t;
        m_lo = m;
      } else {
        hi = t;
        m_hi = m;
      }
    }
  }

  const auto pieces = detail::clipped_mass(d, lsd, t);
  out.level_ = std::exp(-t);
  out.radius_ = std::sqrt(2.0 * t);
  out.plateau_mass_ = pieces.plateau;
  out.tail_mass_ = pieces.tail;
  out.survival_ = pieces.survival;
  return out;
}

/// Discrete counterpart: pmf_j = min(weights_j, level) with sum 1.
struct DiscreteWaterPour {
  std::vector<double> weights;
  double level = 1.0;
  std::vector<double> pmf;
};

/// Exact discrete water pouring by sorting the weights and scanning the
/// piecewise-linear map level -> sum_j min(w_j, level). Zero weights are
/// accepted and receive zero probability.
inline DiscreteWaterPour water_pour_discrete(std::span<const double> weights) {
  if (weights.empty()) throw EmptyInput("water pouring needs at least one weight");
  double peak = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw WeightsOutOfRange("weights must lie in [0, 1]");
    peak = std::max(peak, w);
  }
  if (peak != 1.0) throw NoUnitWeight("the largest weight must equal 1");

  const std::size_t n = weights.size();
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // rest[k] = sum of sorted[k..n-1], accumulated from the small end.
  std::vector<double> rest(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) rest[k] = rest[k + 1] + sorted[k];

  double level = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double candidate = (1.0 - rest[k]) / static_cast<double>(k);
    if (k == n || candidate >= sorted[k]) {
      level = std::clamp(candidate, 0.0, 1.0);
      break;
    }
  }

  DiscreteWaterPour out;
  out.weights.assign(weights.begin(), weights.end());
  out.level = level;
  out.pmf.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.pmf[j] = std::min(weights[j], level);
  return out;
}

/// `count` independent categorical draws from the pmf by inverse CDF.
template <class Rng>
std::vector<std::size_t> sample_discrete(const DiscreteWaterPour& pour, Rng& rng, std::size_t count) {
  std::vector<double> cumulative(pour.pmf.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < pour.pmf.size(); ++j) cumulative[j] = (acc += pour.pmf[j]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> out(count);
  for (auto& idx : out) {
    const double u = unit(rng) * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    while (idx > 0 && pour.pmf[idx] == 0.0) --idx;
  }
  return out;
}

}  // namespace possq
