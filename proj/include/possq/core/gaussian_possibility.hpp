#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "possq/core/errors.hpp"

namespace possq {

/// Possibility function of Gaussian shape,
///   pi(x) = exp(-1/2 (x - mean)^T spread^{-1} (x - mean)),
/// whose supremum is 1 at the mean. The spread plays the role of a covariance
/// but the function is not normalised as a density.
template <int Dim = Eigen::Dynamic>
class GaussianPossibility {
 public:
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;

  GaussianPossibility(Vector mean, Matrix spread) : mean_(std::move(mean)), spread_(std::move(spread)) {
    if (spread_.rows() != spread_.cols() || spread_.rows() != mean_.size()) {
      throw DimensionMismatch("spread is " + std::to_string(spread_.rows()) + "x" +
                              std::to_string(spread_.cols()) + " but mean has dimension " +
                              std::to_string(mean_.size()));
    }
    if (mean_.size() == 0) throw DimensionMismatch("zero-dimensional possibility");
    if (!mean_.allFinite() || !spread_.allFinite()) throw InvalidArgument("non-finite mean or spread");
    const double scale = spread_.cwiseAbs().maxCoeff();
    if (!(spread_ - spread_.transpose()).isZero(1e-12 * scale)) {
      throw NotPositiveDefinite("spread matrix is not symmetric");
    }
    Eigen::LLT<Matrix> llt(spread_);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("spread matrix is not positive definite");
    lower_ = llt.matrixL();
    if (!(lower_.diagonal().array() > 0.0).all()) {
      throw NotPositiveDefinite("spread matrix is not positive definite");
    }
    log_sqrt_det_ = lower_.diagonal().array().log().sum();
  }

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& spread() const { return spread_; }
  /// Lower Cholesky factor L with spread = L L^T.
  const Matrix& lower() const { return lower_; }
  /// log of det(spread)^{1/2}.
  double log_sqrt_det() const { return log_sqrt_det_; }

  /// Squared Mahalanobis distance of `x` from the mean.
  double mahalanobis2(const Vector& x) const {
    check_dim(x);
    return offset_mahalanobis2(x - mean_);
  }

  /// Squared Mahalanobis norm of an offset from the mean.
  double offset_mahalanobis2(const Vector& offset) const {
    return lower_.template triangularView<Eigen::Lower>().solve(offset).squaredNorm();
  }

  double log_eval(const Vector& x) const { return -0.5 * mahalanobis2(x); }
  double eval(const Vector& x) const { return std::exp(log_eval(x)); }

  /// Integral of pi over R^d: (2 pi)^{d/2} det(spread)^{1/2}.
  double total_mass() const {
    return std::exp(0.5 * dim() * std::log(2.0 * std::numbers::pi) + log_sqrt_det_);
  }

  /// Same spread (and factorisation), different mean.
  GaussianPossibility with_mean(Vector mean) const {
    check_dim(mean);
    GaussianPossibility out = *this;
    out.mean_ = std::move(mean);
    return out;
  }

 private:
  void check_dim(const Vector& x) const {
    if (x.size() != mean_.size()) {
      throw DimensionMismatch("point has dimension " + std::to_string(x.size()) + ", expected " +
                              std::to_string(mean_.size()));
    }
  }

  Vector mean_;
  Matrix spread_;
  Matrix lower_;
  double log_sqrt_det_ = 0.0;
};

/// Rescales non-negative density values so that their maximum becomes 1.
inline std::vector<double> normalize_density_to_possibility(std::span<const double> values) {
  double peak = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("density values must be finite and non-negative");
    peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) throw InvalidArgument("density values are all zero");
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v /= peak;
  return out;
}

}  // namespace possq
