#pragma once

#include <cmath>
#include <limits>
#include <random>

#include "possq/core/errors.hpp"

namespace possq::bench {

/// Zero-mean measurement-noise generator: Gaussian(sigma) or Student-t with
/// scale sigma and nu degrees of freedom. nu = inf takes the Gaussian path.
struct NoiseModel {
  enum class Kind { Gaussian, StudentT };

  Kind kind = Kind::Gaussian;
  double sigma = 0.0;  // rad
  double nu = std::numeric_limits<double>::infinity();

  static NoiseModel gaussian(double sigma) { return {Kind::Gaussian, sigma, std::numeric_limits<double>::infinity()}; }
  static NoiseModel student_t(double sigma, double nu) { return {Kind::StudentT, sigma, nu}; }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("noise sigma must be positive");
    if (kind == Kind::StudentT && !(nu > 0.0)) throw InvalidArgument("Student-t nu must be positive");
  }

  bool is_gaussian() const { return kind == Kind::Gaussian || std::isinf(nu); }

  template <class Rng>
  double sample(Rng& rng) const {
    const double g = std::normal_distribution<double>(0.0, 1.0)(rng);
    if (is_gaussian()) return sigma * g;
    const double chi2 = std::chi_squared_distribution<double>(nu)(rng);
    return sigma * g / std::sqrt(chi2 / nu);
  }
};

}  // namespace possq::bench
