#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "possq/core/gaussian_possibility.hpp"
#include "possq/core/random.hpp"
#include "possq/filters/possibility_pf.hpp"
#include "possq/filters/standard_pf.hpp"
#include "possq/filters/transition.hpp"

namespace oracle {

/// Level solving sum_j min(w_j, l) = 1 by plain bisection on [0, 1].
inline double bisection_level(const std::vector<double>& w) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : w) s += std::min(x, mid);
    (s < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Max-entropy pmf under p_j <= w_j, sum p = 1, by pairwise balancing: each
/// move equalises two coordinates as far as their caps allow, which never
/// lowers the entropy. Starts from the proportional pmf.
inline std::vector<double> max_entropy_pmf(const std::vector<double>& w, int sweeps = 4000) {
  const std::size_t n = w.size();
  double total = 0.0;
  for (double x : w) total += x;
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = w[j] / total;
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double sum = p[i] + p[j];
        double pi = std::clamp(0.5 * sum, sum - w[j], w[i]);
        pi = std::clamp(pi, 0.0, sum);
        moved += std::abs(pi - p[i]);
        p[i] = pi;
        p[j] = sum - pi;
      }
    }
    if (moved < 1e-15) break;
  }
  return p;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

/// Integral of g over [a, b] split at the given interior points.
inline double integrate_split(const std::function<double(double)>& g, double a, double b, std::vector<double> cuts,
                              double tol = 1e-13) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(a, cuts[i]);
    const double hi = std::min(b, cuts[i + 1]);
    if (hi > lo) total += GK::integrate(g, lo, hi, 20, tol);
  }
  return total;
}

/// Integral over R of min(exp(-(x-mu)^2 / (2 var)), level).
inline double clipped_integral_1d(double mu, double var, double level) {
  const double sd = std::sqrt(var);
  auto g = [&](double x) {
    const double z = (x - mu) / sd;
    return std::min(std::exp(-0.5 * z * z), level);
  };
  const double half = level < 1.0 ? sd * std::sqrt(-2.0 * std::log(level)) : 0.0;
  return integrate_split(g, mu - 40.0 * sd, mu + 40.0 * sd, {mu - half, mu + half});
}

/// Integral over R^2 of min(pi(x), level) for a 2-D Gaussian possibility, by
/// nested adaptive quadrature in Cartesian coordinates.
inline double clipped_integral_2d(const Eigen::Vector2d& mu, const Eigen::Matrix2d& p, double level) {
  const Eigen::Matrix2d prec = p.inverse();
  const double r2 = level < 1.0 ? -2.0 * std::log(level) : 0.0;
  const double s1 = std::sqrt(p(0, 0));
  const double s2 = std::sqrt(p(1, 1));
  auto outer = [&](double x1) {
    const double d1 = x1 - mu[0];
    const double a = prec(1, 1);
    const double c = mu[1] - prec(0, 1) / prec(1, 1) * d1;
    const double b = d1 * d1 / p(0, 0);
    auto inner = [&](double x2) {
      const double d2 = x2 - mu[1];
      const double m2 = prec(0, 0) * d1 * d1 + 2.0 * prec(0, 1) * d1 * d2 + prec(1, 1) * d2 * d2;
      return std::min(std::exp(-0.5 * m2), level);
    };
    std::vector<double> cuts;
    if (r2 > b) {
      const double h = std::sqrt((r2 - b) / a);
      cuts = {c - h, c + h};
    }
    const double span = 40.0 * s2 + std::abs(c - mu[1]);
    return integrate_split(inner, c - span, c + span, cuts, 1e-12);
  };
  const double half = std::sqrt(r2) * s1;
  return integrate_split(outer, mu[0] - 40.0 * s1, mu[0] + 40.0 * s1, {mu[0] - half, mu[0] + half}, 1e-11);
}

/// CDF of the density min(exp(-(x-mu)^2/(2 sd^2)), level), assembled directly
/// from the level.
inline double clipped_cdf_1d(double x, double mu, double sd, double level) {
  const boost::math::normal_distribution<double> std_normal;
  const double r = level < 1.0 ? std::sqrt(-2.0 * std::log(level)) : 0.0;
  const double k = sd * std::sqrt(2.0 * std::numbers::pi);
  const double z = (x - mu) / sd;
  if (z < -r) return k * boost::math::cdf(std_normal, z);
  const double left = k * boost::math::cdf(std_normal, -r);
  if (z <= r) return left + level * sd * (z + r);
  return 1.0 - k * boost::math::cdf(std_normal, -z);
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

/// Random-walk toy: x_k = x_{k-1} + v, v ~ N(0, q); z_k = x_k + w, w ~ N(0, r);
/// x_0 ~ N(0, p0).
struct ToyProblem {
  double q = 1.0;
  double r = 1.0;
  double p0 = 4.0;
  int steps = 10;
};

struct ToyTrack {
  std::vector<double> kalman_mean;
  std::vector<double> kalman_sd;
  std::vector<double> estimate;
};

enum class ToyFilter { Possibility, Standard };

/// One seed of the toy: truth and measurements from stream 0, filter draws
/// from stream 1.
inline ToyTrack run_toy(const ToyProblem& toy, ToyFilter filter, std::size_t n, std::uint64_t seed) {
  using V = Eigen::Matrix<double, 1, 1>;
  auto world = possq::make_stream(seed, 0);
  auto rng = possq::make_stream(seed, 1);
  std::normal_distribution<double> normal;

  double x = std::sqrt(toy.p0) * normal(world);
  double m = 0.0;
  double p = toy.p0;
  const possq::GaussianPossibility<1> prior(V::Zero(), V::Constant(toy.p0));
  const auto transition = possq::make_additive_transition<1>([](const V& v) { return v; },
                                                             possq::GaussianPossibility<1>(V::Zero(), V::Constant(toy.q)));
  const double r = toy.r;
  auto loglik = [r](const V& s, double z) { return -0.5 * (z - s[0]) * (z - s[0]) / r; };

  ToyTrack out;
  possq::ParticleSet<1> ps = filter == ToyFilter::Possibility ? possq::possibility_pf_init(prior, n, rng)
                                                              : possq::standard_pf_init(prior, n, rng);
  for (int k = 1; k <= toy.steps; ++k) {
    x += std::sqrt(toy.q) * normal(world);
    const double z = x + std::sqrt(toy.r) * normal(world);
    p += toy.q;
    const double gain = p / (p + toy.r);
    m += gain * (z - m);
    p *= 1.0 - gain;
    out.kalman_mean.push_back(m);
    out.kalman_sd.push_back(std::sqrt(p));
    if (filter == ToyFilter::Possibility) {
      auto step = possq::possibility_pf_step(ps, transition, loglik, z, rng, k);
      out.estimate.push_back(step.record.estimate[0]);
      ps = std::move(step.particles);
    } else {
      auto step = possq::standard_pf_step(ps, transition, loglik, z, rng, k);
      out.estimate.push_back(step.record.estimate[0]);
      ps = std::move(step.particles);
    }
  }
  return out;
}

struct ToySummary {
  std::vector<double> mean_error;  // per step, averaged over seeds
  std::vector<double> mean_abs_error;
  std::vector<double> tolerance;   // 3 sd / sqrt(n)
  double worst_ratio = 0.0;        // max_k |mean_error| / tolerance
};

inline ToySummary summarize_toy(const ToyProblem& toy, ToyFilter filter, std::size_t n, int seeds,
                                std::uint64_t base_seed) {
  ToySummary s;
  s.mean_error.assign(toy.steps, 0.0);
  s.mean_abs_error.assign(toy.steps, 0.0);
  s.tolerance.assign(toy.steps, 0.0);
  for (int i = 0; i < seeds; ++i) {
    const auto t = run_toy(toy, filter, n, base_seed + i);
    for (int k = 0; k < toy.steps; ++k) {
      const double e = t.estimate[k] - t.kalman_mean[k];
      s.mean_error[k] += e / seeds;
      s.mean_abs_error[k] += std::abs(e) / seeds;
      s.tolerance[k] = 3.0 * t.kalman_sd[k] / std::sqrt(static_cast<double>(n));
    }
  }
  for (int k = 0; k < toy.steps; ++k) s.worst_ratio = std::max(s.worst_ratio, std::abs(s.mean_error[k]) / s.tolerance[k]);
  return s;
}

}  // namespace oracle
