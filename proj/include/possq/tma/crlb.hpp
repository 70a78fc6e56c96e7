#pragma once

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "possq/tma/models.hpp"

namespace possq::tma {

struct CrlbPoint {
  Matrix4 bound;  // J_k^{-1}
  double position_rms = std::numeric_limits<double>::quiet_NaN();
  bool singular = false;
};

/// Bearing gradient dh/dx at a relative state: (y, 0, -x, 0) / (x^2 + y^2).
inline Eigen::RowVector4d bearing_gradient(const State& x) {
  const double r2 = x[kX] * x[kX] + x[kY] * x[kY];
  if (r2 == 0.0) throw AtOrigin("bearing gradient undefined at zero relative position");
  return Eigen::RowVector4d(x[kY] / r2, 0.0, -x[kX] / r2, 0.0);
}

/// Posterior CRLB recursion along a true relative trajectory:
///   J_1 = P_1^{-1},  J_k = (F J_{k-1}^{-1} F^T + Q)^{-1} + H_k^T H_k / sigma^2.
/// A singular information matrix marks that scan and all later ones.
inline std::vector<CrlbPoint> crlb_curve(std::span<const State> truth, const Matrix4& f, const Matrix4& q,
                                         double sigma, const Matrix4& initial_spread) {
  std::vector<CrlbPoint> out;
  out.reserve(truth.size());
  if (truth.empty()) return out;

  auto finish = [&out](const Matrix4& bound) {
    CrlbPoint pt;
    pt.bound = bound;
    pt.position_rms = std::sqrt(bound(kX, kX) + bound(kY, kY));
    out.push_back(pt);
  };
  auto fail = [&out, &truth] {
    while (out.size() < truth.size()) {
      CrlbPoint pt;
      pt.bound.setConstant(std::numeric_limits<double>::quiet_NaN());
      pt.singular = true;
      out.push_back(pt);
    }
  };

  Matrix4 bound = initial_spread;
  finish(bound);
  for (std::size_t k = 1; k < truth.size(); ++k) {
    const Matrix4 predicted = f * bound * f.transpose() + q;
    Eigen::FullPivLU<Matrix4> lu_pred(predicted);
    if (!lu_pred.isInvertible()) {
      fail();
      return out;
    }
    const auto h = bearing_gradient(truth[k]);
    const Matrix4 info = lu_pred.inverse() + h.transpose() * h / (sigma * sigma);
    Eigen::FullPivLU<Matrix4> lu_info(info);
    if (!lu_info.isInvertible()) {
      fail();
      return out;
    }
    bound = lu_info.inverse();
    bound = 0.5 * (bound + bound.transpose()).eval();
    finish(bound);
  }
  return out;
}

}  // namespace possq::tma
